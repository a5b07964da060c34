//! Online accept/reject policies driven by dual prices.
//!
//! All four policies share one step: decide with the current prices, update
//! the remaining capacity, then update the prices. They differ only in the
//! price update:
//!
//! | policy           | price update at step `t`                                        |
//! |------------------|-----------------------------------------------------------------|
//! | `Ahdl`           | re-solve the sampled dual on `(d_t, history)` for every `t < T` |
//! | `FirstOrder`     | projected subgradient step with the static `d`                   |
//! | `Hybrid`         | re-solve at `t ∈ {f, 2f, …, kf}`, subgradient for `t < f` and    |
//! |                  | `t > kf`, otherwise keep the last LP prices                      |
//! | `EnhancedHybrid` | re-solve at `t ∈ {f, …, kf}`, subgradient at every other step    |
//!
//! with `k = ⌊T/f⌋`. After a re-solve, the subgradient steps restart from the
//! LP prices.

use std::fmt::Write as _;

use crate::dual_lp::{self, Basis, SampledDualProblem, SimplexOptions, SolveStatus};
use crate::error::{Error, Result};
use crate::input_gen::{Instance, Order, OrderBatch};

/// Nonnegative per-resource shadow prices.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPrice(pub Vec<f64>);

impl DualPrice {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|p| p * p).sum::<f64>().sqrt()
    }
}

/// Upper bound on dual price norms implied by the distribution bounds:
/// `max(r̄/(d̲ − δ), (2r̄ + m(ā + d̄)²)/d̲ + m(ā + d̄))`.
///
/// The first term is skipped when `δ ≥ d̲`.
pub fn price_bound(r_bar: f64, a_bar: f64, d_lo: f64, d_hi: f64, delta: f64, m: usize) -> f64 {
    let m = m as f64;
    let lp_term = if delta < d_lo { r_bar / (d_lo - delta) } else { 0.0 };
    let fo_term = (2.0 * r_bar + m * (a_bar + d_hi).powi(2)) / d_lo + m * (a_bar + d_hi);
    lp_term.max(fo_term)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Ahdl,
    FirstOrder,
    Hybrid,
    EnhancedHybrid,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Ahdl => "ahdl",
            PolicyKind::FirstOrder => "first-order",
            PolicyKind::Hybrid => "hybrid",
            PolicyKind::EnhancedHybrid => "enhanced-hybrid",
        }
    }

    pub fn uses_frequency(&self) -> bool {
        matches!(self, PolicyKind::Hybrid | PolicyKind::EnhancedHybrid)
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ahdl" | "lp" | "lp-based" => Ok(PolicyKind::Ahdl),
            "first-order" | "firstorder" | "fo" => Ok(PolicyKind::FirstOrder),
            "hybrid" => Ok(PolicyKind::Hybrid),
            "enhanced-hybrid" | "enhanced" | "enhancedhybrid" => Ok(PolicyKind::EnhancedHybrid),
            other => Err(Error::invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepSchedule {
    /// `α_t = 1/(t+1)` on the global clock.
    Harmonic,
    /// `α = 1/√f` (for `FirstOrder`, `1/√T`).
    ConstantPerBatch,
    /// `α_t = steps[t-1]`; must cover the whole horizon.
    Custom(Vec<f64>),
}

impl StepSchedule {
    pub fn name(&self) -> &'static str {
        match self {
            StepSchedule::Harmonic => "harmonic",
            StepSchedule::ConstantPerBatch => "batch-const",
            StepSchedule::Custom(_) => "custom",
        }
    }
}

impl std::str::FromStr for StepSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "harmonic" => Ok(StepSchedule::Harmonic),
            "batch-const" | "constant" | "batch" => Ok(StepSchedule::ConstantPerBatch),
            other => Err(Error::invalid(format!("unknown step schedule `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GuardMode {
    /// Reject any order whose acceptance would overdraw a resource.
    Hard,
    /// Allow overdraw; optionally stop accepting once `d_t` leaves `[d − δ, d + δ]`.
    Theoretical,
}

impl std::str::FromStr for GuardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hard" => Ok(GuardMode::Hard),
            "theoretical" | "theory" => Ok(GuardMode::Theoretical),
            other => Err(Error::invalid(format!("unknown guard mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Re-solving frequency `f`; ignored by `Ahdl` and `FirstOrder`.
    pub frequency: usize,
    /// `None` picks the per-policy default: harmonic for `Ahdl`/`FirstOrder`,
    /// constant `1/√f` for the hybrids.
    pub step_schedule: Option<StepSchedule>,
    pub guard: GuardMode,
    pub delta_guard: Option<f64>,
    pub lp_tol: f64,
    /// Seed each re-solve with the previous optimal basis.
    pub warm_start: bool,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            frequency: 1,
            step_schedule: None,
            guard: GuardMode::Hard,
            delta_guard: None,
            lp_tol: dual_lp::DEFAULT_TOL,
            warm_start: false,
        }
    }

    pub fn with_frequency(mut self, f: usize) -> Self {
        self.frequency = f;
        self
    }

    pub fn with_guard(mut self, guard: GuardMode) -> Self {
        self.guard = guard;
        self
    }

    pub fn with_steps(mut self, steps: StepSchedule) -> Self {
        self.step_schedule = Some(steps);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta_guard = Some(delta);
        self
    }

    pub fn effective_steps(&self) -> StepSchedule {
        self.step_schedule.clone().unwrap_or(match self.kind {
            PolicyKind::Ahdl | PolicyKind::FirstOrder => StepSchedule::Harmonic,
            PolicyKind::Hybrid | PolicyKind::EnhancedHybrid => StepSchedule::ConstantPerBatch,
        })
    }

    fn validate(&self, horizon: usize) -> Result<()> {
        if self.kind.uses_frequency() && !(1..=horizon).contains(&self.frequency) {
            return Err(Error::invalid(format!("re-solving frequency {} outside [1, {horizon}]", self.frequency)));
        }
        if !(self.lp_tol > 0.0) {
            return Err(Error::invalid("lp_tol must be positive"));
        }
        if let Some(delta) = self.delta_guard {
            if !(delta > 0.0) {
                return Err(Error::invalid("delta_guard must be positive"));
            }
        }
        if let Some(StepSchedule::Custom(steps)) = &self.step_schedule {
            if steps.len() < horizon {
                return Err(Error::invalid(format!(
                    "custom step schedule has {} entries, horizon is {horizon}",
                    steps.len()
                )));
            }
            if steps.iter().any(|a| !(*a > 0.0)) {
                return Err(Error::invalid("step sizes must be positive"));
            }
        }
        Ok(())
    }
}

/// Accept iff the reward strictly exceeds the priced demand; ties reject.
#[inline]
pub fn decide(order: &Order, prices: &DualPrice) -> bool {
    order.reward > order.cost(&prices.0)
}

/// `max(p − α(d − a·x), 0)` componentwise.
pub fn step_first_order(prices: &DualPrice, order: &Order, accepted: bool, d: &[f64], alpha: f64) -> DualPrice {
    let x = if accepted { 1.0 } else { 0.0 };
    DualPrice(
        prices.0.iter().zip(d).zip(&order.demand).map(|((p, di), a)| (p - alpha * (di - a * x)).max(0.0)).collect(),
    )
}

/// Re-solve times `{t : t mod f = 0, t ≤ kf}`, `k = ⌊T/f⌋`.
pub fn resolve_schedule(horizon: usize, f: usize) -> Result<Vec<usize>> {
    if !(1..=horizon).contains(&f) {
        return Err(Error::invalid(format!("frequency {f} outside [1, {horizon}]")));
    }
    let k = horizon / f;
    Ok((1..=k).map(|b| b * f).collect())
}

/// True if accepting `demand` would take any remaining capacity below zero.
pub fn would_overdraw(remaining: &[f64], demand: &[f64]) -> bool {
    remaining.iter().zip(demand).any(|(b, a)| b - a < 0.0)
}

/// True if any `|d_t,i − d_i| > δ`.
pub fn outside_stability_band(avg_remaining: &[f64], d: &[f64], delta: f64) -> bool {
    avg_remaining.iter().zip(d).any(|(dt, di)| (dt - di).abs() > delta)
}

/// Everything a policy carries between steps.
#[derive(Clone, Debug)]
pub struct PolicyState {
    /// Number of orders already processed.
    pub t: usize,
    pub horizon: usize,
    /// Static average capacity `d = b / T`.
    pub avg_capacity: Vec<f64>,
    /// `b_t`.
    pub remaining: Vec<f64>,
    /// `d_t = b_t / (T − t)`, frozen after `t = T − 1`.
    pub avg_remaining: Vec<f64>,
    pub prices: DualPrice,
    pub history: OrderBatch,
    pub reject_all: bool,
    pub config: PolicyConfig,
    steps: StepSchedule,
    batches: usize,
    basis: Option<Basis>,
    lp_solve_count: usize,
    guard_trip_time: Option<usize>,
}

/// What happened at one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub accepted: bool,
    /// The guard overrode an acceptance (or the reject-all latch was set).
    pub guarded: bool,
    pub resolved: bool,
}

impl PolicyState {
    pub fn new(capacity: &[f64], horizon: usize, config: PolicyConfig) -> Result<Self> {
        if horizon == 0 || capacity.is_empty() {
            return Err(Error::invalid("horizon and resource count must be positive"));
        }
        config.validate(horizon)?;
        let m = capacity.len();
        let avg_capacity: Vec<f64> = capacity.iter().map(|b| b / horizon as f64).collect();
        let steps = config.effective_steps();
        let batches = if config.kind.uses_frequency() { horizon / config.frequency } else { 0 };
        Ok(Self {
            t: 0,
            horizon,
            avg_remaining: avg_capacity.clone(),
            avg_capacity,
            remaining: capacity.to_vec(),
            prices: DualPrice::zeros(m),
            history: OrderBatch::with_capacity(m, horizon),
            reject_all: false,
            config,
            steps,
            batches,
            basis: None,
            lp_solve_count: 0,
            guard_trip_time: None,
        })
    }

    pub fn for_instance(instance: &Instance, config: PolicyConfig) -> Result<Self> {
        let mut state = Self::new(&instance.capacity, instance.horizon, config)?;
        state.avg_capacity = instance.avg_capacity.clone();
        state.avg_remaining = instance.avg_capacity.clone();
        Ok(state)
    }

    pub fn lp_solve_count(&self) -> usize {
        self.lp_solve_count
    }

    pub fn guard_trip_time(&self) -> Option<usize> {
        self.guard_trip_time
    }

    fn trip(&mut self, t: usize) {
        self.guard_trip_time.get_or_insert(t);
    }

    /// Applies the configured guard before the decision on `order`.
    ///
    /// Returns true when `order` must be rejected regardless of prices. In
    /// theoretical mode with a `δ`, leaving the stability band latches
    /// `reject_all` for the rest of the horizon.
    pub fn guard_check(&mut self, order: &Order) -> bool {
        let t = self.t + 1;
        if self.reject_all {
            return true;
        }
        match self.config.guard {
            GuardMode::Hard => {
                if would_overdraw(&self.remaining, &order.demand) {
                    self.trip(t);
                    return true;
                }
                false
            }
            GuardMode::Theoretical => match self.config.delta_guard {
                Some(delta) if outside_stability_band(&self.avg_remaining, &self.avg_capacity, delta) => {
                    self.reject_all = true;
                    self.trip(t);
                    true
                }
                _ => false,
            },
        }
    }

    fn step_size(&self, t: usize) -> f64 {
        match &self.steps {
            StepSchedule::Harmonic => 1.0 / (t as f64 + 1.0),
            StepSchedule::ConstantPerBatch => {
                let f = if self.config.kind.uses_frequency() { self.config.frequency } else { self.horizon };
                1.0 / (f as f64).sqrt()
            }
            StepSchedule::Custom(steps) => steps[t - 1],
        }
    }

    fn is_resolve_time(&self, t: usize) -> bool {
        match self.config.kind {
            PolicyKind::Ahdl => t < self.horizon,
            PolicyKind::FirstOrder => false,
            PolicyKind::Hybrid | PolicyKind::EnhancedHybrid => {
                t.is_multiple_of(self.config.frequency) && t <= self.batches * self.config.frequency
            }
        }
    }

    fn resolve(&mut self, t: usize) -> Result<()> {
        let problem = SampledDualProblem::new(&self.avg_remaining, self.history.view())?;
        let opts = SimplexOptions { tol: self.config.lp_tol, max_iterations: None };
        let warm = if self.config.warm_start { self.basis.as_ref() } else { None };
        let sol = dual_lp::solve_sampled_dual_with(&problem, &opts, warm).map_err(|e| e.at_time(t))?;
        self.lp_solve_count += 1;
        match sol.status {
            SolveStatus::Optimal => {
                self.prices = DualPrice(sol.prices);
                if self.config.warm_start {
                    self.basis = Some(sol.basis);
                }
            }
            // Some d_t is not positive and no feasible allocation remains:
            // prices are infinite, so nothing more can be accepted.
            SolveStatus::Unbounded => {
                self.reject_all = true;
                self.trip(t);
            }
            status => return Err(Error::Solver { status, time: Some(t) }),
        }
        Ok(())
    }

    /// Processes the next order and returns the decision.
    pub fn step(&mut self, order: &Order) -> Result<StepOutcome> {
        if self.t >= self.horizon {
            return Err(Error::invalid("policy already processed the whole horizon"));
        }
        if order.demand.len() != self.remaining.len() {
            return Err(Error::invalid("order demand length differs from resource count"));
        }
        let t = self.t + 1;
        let wants = decide(order, &self.prices);
        let guarded = wants && self.guard_check(order);
        let accepted = wants && !guarded;

        if accepted {
            for (b, a) in self.remaining.iter_mut().zip(&order.demand) {
                *b -= a;
            }
        }
        if t < self.horizon {
            let left = (self.horizon - t) as f64;
            for (dt, b) in self.avg_remaining.iter_mut().zip(&self.remaining) {
                *dt = b / left;
            }
        }
        self.history.push(order);
        self.t = t;

        let resolved = self.is_resolve_time(t);
        if resolved {
            self.resolve(t)?;
        } else {
            let first_order = match self.config.kind {
                PolicyKind::Ahdl => false,
                PolicyKind::FirstOrder | PolicyKind::EnhancedHybrid => true,
                PolicyKind::Hybrid => {
                    let f = self.config.frequency;
                    t < f || t > self.batches * f
                }
            };
            if first_order {
                let alpha = self.step_size(t);
                self.prices = step_first_order(&self.prices, order, accepted, &self.avg_capacity, alpha);
            }
        }
        Ok(StepOutcome { accepted, guarded, resolved })
    }
}

/// Full record of one policy run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub kind: PolicyKind,
    pub decisions: Vec<bool>,
    /// `prices_seen[t-1]` is the price used for the decision at time `t`.
    pub prices_seen: Vec<DualPrice>,
    pub final_prices: DualPrice,
    /// `A x`.
    pub consumption: Vec<f64>,
    /// `Σ r_t x_t`.
    pub revenue: f64,
    pub lp_solve_count: usize,
    pub guard_trip_time: Option<usize>,
    pub max_price_norm: f64,
}

impl Trajectory {
    pub fn accepted_count(&self) -> usize {
        self.decisions.iter().filter(|&&x| x).count()
    }

    /// Columnar text: `t,x_t,r_t,revenue_to_date,remaining_1..m`.
    pub fn to_columnar(&self, instance: &Instance) -> String {
        let mut out = String::new();
        let m = instance.resource_count;
        let rem_cols: Vec<String> = (1..=m).map(|i| format!("remaining_{i}")).collect();
        writeln!(out, "t,x_t,r_t,revenue_to_date,{}", rem_cols.join(",")).unwrap();
        let mut remaining = instance.capacity.clone();
        let mut revenue = 0.0;
        for (idx, (order, &x)) in instance.orders.iter().zip(&self.decisions).enumerate() {
            if x {
                revenue += order.reward;
                for (b, a) in remaining.iter_mut().zip(&order.demand) {
                    *b -= a;
                }
            }
            write!(out, "{},{},{:?},{:?}", idx + 1, x as u8, order.reward, revenue).unwrap();
            for b in &remaining {
                write!(out, ",{b:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Runs one policy over the whole instance.
pub fn run_policy(instance: &Instance, config: &PolicyConfig) -> Result<Trajectory> {
    let mut state = PolicyState::for_instance(instance, config.clone())?;
    let m = instance.resource_count;
    let mut decisions = Vec::with_capacity(instance.horizon);
    let mut prices_seen = Vec::with_capacity(instance.horizon);
    let mut consumption = vec![0.0; m];
    let mut revenue = 0.0;
    let mut max_price_norm = 0.0f64;
    for order in &instance.orders {
        max_price_norm = max_price_norm.max(state.prices.norm());
        prices_seen.push(state.prices.clone());
        let outcome = state.step(order)?;
        if outcome.accepted {
            revenue += order.reward;
            for (c, a) in consumption.iter_mut().zip(&order.demand) {
                *c += a;
            }
        }
        decisions.push(outcome.accepted);
    }
    Ok(Trajectory {
        kind: config.kind,
        decisions,
        prices_seen,
        final_prices: state.prices.clone(),
        consumption,
        revenue,
        lp_solve_count: state.lp_solve_count,
        guard_trip_time: state.guard_trip_time,
        max_price_norm,
    })
}
