//! Re-solving frequency that minimizes the regret bound under a compute budget.
//!
//! With `k = ⌊T/f⌋` re-solves, batch `b` solves an LP over `b·f` samples at
//! cost `m²(m + b·f)`, and first-order updates cost `2·m·f`:
//!
//! ```text
//!     min_{f ∈ [1, T]}  ln(T/f) + √f   s.t.  Σ_{b=1}^{k} m²(m + b·f) + 2·m·f ≤ R
//! ```

use crate::error::{Error, Result};

/// Problem size and compute budget in abstract cost units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetModel {
    pub horizon: usize,
    pub resource_count: usize,
    /// `R`; may be `f64::INFINITY`.
    pub budget: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyPlan {
    pub frequency: usize,
    /// `ln(T/f) + √f` at the chosen frequency.
    pub bound_value: f64,
    /// False when no frequency fits the budget; the frequency is then the
    /// unconstrained minimizer.
    pub feasible: bool,
}

impl BudgetModel {
    pub fn new(horizon: usize, resource_count: usize, budget: f64) -> Result<Self> {
        if horizon == 0 || resource_count == 0 {
            return Err(Error::invalid("horizon and resource count must be positive"));
        }
        if budget.is_nan() || budget <= 0.0 {
            return Err(Error::invalid("budget must be positive"));
        }
        Ok(Self { horizon, resource_count, budget })
    }

    /// Cost of one LP solve over `t` samples: `m²(m + t)`.
    pub fn lp_cost(&self, t: usize) -> f64 {
        let m = self.resource_count as f64;
        m * m * (m + t as f64)
    }

    /// Cost of the first-order updates of one batch: `2·m·f`.
    pub fn fo_cost(&self, f: usize) -> f64 {
        2.0 * self.resource_count as f64 * f as f64
    }

    /// Total compute spent at frequency `f`.
    pub fn cost(&self, f: usize) -> f64 {
        let k = self.horizon / f;
        let lp: f64 = (1..=k).map(|b| self.lp_cost(b * f)).sum();
        lp + self.fo_cost(f)
    }

    pub fn fits(&self, f: usize) -> bool {
        self.cost(f) <= self.budget
    }
}

/// `ln(T/f) + √f`.
pub fn regret_bound(horizon: usize, f: usize) -> f64 {
    (horizon as f64 / f as f64).ln() + (f as f64).sqrt()
}

/// Exhaustive scan over `f ∈ [1, T]`; ties go to the smaller frequency.
pub fn optimal_frequency(model: &BudgetModel) -> FrequencyPlan {
    let t = model.horizon;
    let mut best: Option<(usize, f64)> = None;
    let mut best_any: Option<(usize, f64)> = None;
    for f in 1..=t {
        let v = regret_bound(t, f);
        if best_any.is_none_or(|(_, bv)| v < bv) {
            best_any = Some((f, v));
        }
        if best.is_none_or(|(_, bv)| v < bv) && model.fits(f) {
            best = Some((f, v));
        }
    }
    match best {
        Some((frequency, bound_value)) => FrequencyPlan { frequency, bound_value, feasible: true },
        None => {
            let (frequency, bound_value) = best_any.expect("horizon is positive");
            FrequencyPlan { frequency, bound_value, feasible: false }
        }
    }
}
