//! Sampled dual problem and offline hindsight LP.
//!
//! Both reduce to the packing LP solved in [`simplex`]:
//!
//! * the sampled dual `min_{p ≥ 0} d·p + (1/t) Σ_j (r_j - a_j·p)^+` is the LP
//!   `min d·p + (1/t) Σ y_j, a_j·p + y_j ≥ r_j, p, y ≥ 0`, whose LP dual is the
//!   packing problem with right-hand side `t·d`; its optimal multipliers are `p`.
//! * the offline problem `max Σ r_t x_t, A x ≤ b, 0 ≤ x ≤ 1` is the packing
//!   problem itself, with the multipliers as the dual certificate.

pub mod simplex;

use crate::error::{Error, Result};
use crate::input_gen::{Columns, Instance, OrderBatch};

pub use simplex::{Basis, SimplexOptions, Var};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// The dual objective is unbounded below, i.e. the packing LP has no
    /// feasible point. Only possible when some target capacity is not positive.
    Unbounded,
    MaxIterations,
}

/// `min_{p ≥ 0} target·p + (1/t) Σ_j (r_j - a_j·p)^+` over the first `t` samples.
#[derive(Clone, Copy, Debug)]
pub struct SampledDualProblem<'a> {
    pub target_capacity: &'a [f64],
    pub samples: Columns<'a>,
}

impl<'a> SampledDualProblem<'a> {
    pub fn new(target_capacity: &'a [f64], samples: Columns<'a>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("sampled dual needs at least one sample"));
        }
        if target_capacity.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("target capacity must be finite"));
        }
        if samples.resource_count() != target_capacity.len() {
            return Err(Error::invalid("sample demand length differs from capacity length"));
        }
        Ok(Self { target_capacity, samples })
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub prices: Vec<f64>,
    /// Optimal packing allocation `x_j ∈ [0, 1]`, the subgradient weights of
    /// the hinge terms at `prices`.
    pub allocation: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Final basis, reusable as a warm start.
    pub basis: Basis,
}

/// `d·p + (1/t) Σ_j (r_j - a_j·p)^+`, evaluated as written.
pub fn dual_objective(prices: &[f64], problem: &SampledDualProblem<'_>) -> f64 {
    let t = problem.samples.len() as f64;
    let linear: f64 = problem.target_capacity.iter().zip(prices).map(|(d, p)| d * p).sum();
    let hinge: f64 = problem.samples.iter().map(|(r, a)| (r - dot(a, prices)).max(0.0)).sum();
    linear + hinge / t
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn solve_sampled_dual(problem: &SampledDualProblem<'_>, tol: f64) -> Result<LpSolution> {
    solve_sampled_dual_with(problem, &SimplexOptions { tol, max_iterations: None }, None)
}

/// [`solve_sampled_dual`] with explicit options and an optional warm-start basis.
pub fn solve_sampled_dual_with(
    problem: &SampledDualProblem<'_>,
    opts: &SimplexOptions,
    warm: Option<&Basis>,
) -> Result<LpSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let t = problem.samples.len() as f64;
    let rhs: Vec<f64> = problem.target_capacity.iter().map(|d| d * t).collect();
    let sol = simplex::solve_packing(problem.samples, &rhs, opts, warm)?;
    if sol.status == SolveStatus::Unbounded && problem.target_capacity.iter().all(|&d| d > 0.0) {
        // x = 0 is feasible whenever rhs > 0
        return Err(Error::Solver { status: SolveStatus::Unbounded, time: None });
    }
    let objective = if sol.status == SolveStatus::Optimal { dual_objective(&sol.prices, problem) } else { f64::NAN };
    Ok(LpSolution {
        prices: sol.prices,
        allocation: sol.allocation,
        objective,
        status: sol.status,
        iterations: sol.iterations,
        basis: sol.basis,
    })
}

/// Hindsight optimum of the full instance together with its dual certificate.
#[derive(Clone, Debug)]
pub struct OfflineSolution {
    pub allocation: Vec<f64>,
    pub objective: f64,
    /// Optimal prices `p` of the dual LP; `y_t = (r_t - a_t·p)^+`.
    pub dual_prices: Vec<f64>,
    /// `b·p + Σ_t y_t`.
    pub dual_objective: f64,
    pub iterations: usize,
}

pub fn solve_offline_primal(instance: &Instance, tol: f64) -> Result<OfflineSolution> {
    let opts = SimplexOptions { tol, max_iterations: None };
    let batch = OrderBatch::from_orders(instance.resource_count, &instance.orders);
    let sol = simplex::solve_packing(batch.view(), &instance.capacity, &opts, None)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver { status: sol.status, time: None });
    }
    let dual_objective = offline_dual_objective(instance, &sol.prices);
    Ok(OfflineSolution {
        allocation: sol.allocation,
        objective: sol.objective,
        dual_prices: sol.prices,
        dual_objective,
        iterations: sol.iterations,
    })
}

/// Objective of the offline dual LP at prices `p` with the best `y` for them.
pub fn offline_dual_objective(instance: &Instance, prices: &[f64]) -> f64 {
    let linear: f64 = instance.capacity.iter().zip(prices).map(|(b, p)| b * p).sum();
    let hinge: f64 = instance.orders.iter().map(|o| (o.reward - o.cost(prices)).max(0.0)).sum();
    linear + hinge
}
