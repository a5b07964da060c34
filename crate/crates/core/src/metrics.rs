//! Regret of a trajectory against the offline optimum, plus diagnostics.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::RwLock;

use rand::Rng;

use crate::dual_lp::solve_offline_primal;
use crate::error::{Error, Result};
use crate::input_gen::{purpose, stream_rng, InputI, InputII, Instance, ModelTag, Order, OrderDistribution};
use crate::policies::{DualPrice, Trajectory};

/// Bi-objective regret of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    /// Offline objective minus online revenue.
    pub optimality_gap: f64,
    /// `‖(Ax − b)^+‖₂`.
    pub violation: f64,
    /// `optimality_gap + violation`.
    pub total: f64,
    pub offline_objective: f64,
    pub online_revenue: f64,
    pub trial_seed: u64,
}

impl RegretReport {
    /// Builds the report from a precomputed offline objective.
    pub fn new(trajectory: &Trajectory, instance: &Instance, offline_objective: f64) -> Self {
        let optimality_gap = offline_objective - trajectory.revenue;
        let violation = violation(trajectory, instance);
        Self {
            optimality_gap,
            violation,
            total: optimality_gap + violation,
            offline_objective,
            online_revenue: trajectory.revenue,
            trial_seed: instance.seed,
        }
    }
}

/// Mean and sample standard deviation of report totals.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateReport {
    pub mean_total: f64,
    pub std_total: f64,
    pub trial_count: usize,
    pub per_trial: Vec<RegretReport>,
}

impl AggregateReport {
    /// Standard error of the mean total.
    pub fn std_error(&self) -> f64 {
        self.std_total / (self.trial_count as f64).sqrt()
    }
}

/// Offline objective minus the trajectory's revenue.
pub fn optimality_gap(trajectory: &Trajectory, instance: &Instance, oracle_tol: f64) -> Result<f64> {
    let offline = solve_offline_primal(instance, oracle_tol)?;
    Ok(offline.objective - trajectory.revenue)
}

/// Euclidean norm of the componentwise overconsumption `(Ax − b)^+`.
pub fn violation(trajectory: &Trajectory, instance: &Instance) -> f64 {
    overconsumption(&trajectory.consumption, &instance.capacity)
}

/// `‖(consumption − capacity)^+‖₂`.
pub fn overconsumption(consumption: &[f64], capacity: &[f64]) -> f64 {
    consumption.iter().zip(capacity).map(|(c, b)| (c - b).max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// Arithmetic mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::invalid("cannot summarize an empty sample"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

pub fn aggregate(reports: Vec<RegretReport>) -> Result<AggregateReport> {
    let totals: Vec<f64> = reports.iter().map(|r| r.total).collect();
    let (mean_total, std_total) = mean_std(&totals)?;
    Ok(AggregateReport { mean_total, std_total, trial_count: reports.len(), per_trial: reports })
}

/// Stationary price of the stochastic dual for Input I with one resource:
/// the root of `d = E[a·1(r > a p)] = 1 − 2p/15`, i.e. `p* = 7.5 (1 − d)`.
/// The formula holds while `p* ≤ 5`, so `d ∈ [1/3, 1]`.
pub fn analytic_dual_price_input1(d: f64) -> Result<f64> {
    if !(1.0 / 3.0..=1.0).contains(&d) {
        return Err(Error::invalid(format!("analytic price needs 1/3 <= d <= 1, got {d}")));
    }
    Ok(7.5 * (1.0 - d))
}

/// Monte Carlo estimate of the slack `d_i − E[a_i·1(r > a·p*)]` per resource.
#[derive(Clone, Debug, PartialEq)]
pub struct BindingEstimate {
    /// Zero-based resource indices whose slack is within the band of zero or below it.
    pub binding: Vec<usize>,
    /// Zero-based resource indices whose slack lies above the band.
    pub non_binding: Vec<usize>,
    pub slack: Vec<f64>,
    /// Half-width of the band: three standard errors of each slack estimate.
    pub band: Vec<f64>,
    pub sample_count: usize,
}

/// Classifies resources as binding or non-binding at `p_star`.
///
/// Samples come from the instance's generating model on a dedicated stream,
/// or are resampled from the instance's own orders when the model is custom.
pub fn estimate_binding_sets(instance: &Instance, p_star: &DualPrice, sample_count: usize) -> Result<BindingEstimate> {
    let m = instance.resource_count;
    if p_star.values().len() != m {
        return Err(Error::invalid("price length differs from the number of resources"));
    }
    if p_star.values().iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::invalid("prices must be nonnegative"));
    }
    if sample_count < 2 {
        return Err(Error::invalid("binding-set estimate needs at least two samples"));
    }
    let mut rng = stream_rng(instance.seed, purpose::BINDING_PROBE);
    let dist: Option<Box<dyn OrderDistribution>> = match instance.model {
        ModelTag::InputI => Some(Box::new(InputI)),
        ModelTag::InputII { clip } => Some(Box::new(InputII { clip })),
        ModelTag::Custom => None,
    };
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    for _ in 0..sample_count {
        let drawn: Order;
        let order = match &dist {
            Some(d) => {
                drawn = d.sample(m, &mut rng);
                &drawn
            }
            None => &instance.orders[rng.random_range(0..instance.orders.len())],
        };
        if order.reward > order.cost(p_star.values()) {
            for i in 0..m {
                sum[i] += order.demand[i];
                sum_sq[i] += order.demand[i] * order.demand[i];
            }
        }
    }
    let n = sample_count as f64;
    let mut out = BindingEstimate {
        binding: Vec::new(),
        non_binding: Vec::new(),
        slack: Vec::with_capacity(m),
        band: Vec::with_capacity(m),
        sample_count,
    };
    for i in 0..m {
        let mean = sum[i] / n;
        let var = ((sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0);
        let slack = instance.avg_capacity[i] - mean;
        let band = 3.0 * (var / n).sqrt();
        if slack > band {
            out.non_binding.push(i);
        } else {
            out.binding.push(i);
        }
        out.slack.push(slack);
        out.band.push(band);
    }
    Ok(out)
}

/// Offline objectives keyed by instance content, shared across policies.
#[derive(Debug, Default)]
pub struct OracleCache {
    entries: RwLock<HashMap<u64, f64>>,
}

impl OracleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn offline_objective(&self, instance: &Instance, tol: f64) -> Result<f64> {
        let key = instance_key(instance);
        if let Some(v) = self.entries.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(*v);
        }
        let v = solve_offline_primal(instance, tol)?.objective;
        self.entries.write().unwrap_or_else(|e| e.into_inner()).insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn instance_key(instance: &Instance) -> u64 {
    let mut h = DefaultHasher::new();
    instance.horizon.hash(&mut h);
    instance.resource_count.hash(&mut h);
    for b in &instance.capacity {
        b.to_bits().hash(&mut h);
    }
    for o in &instance.orders {
        o.reward.to_bits().hash(&mut h);
        for a in &o.demand {
            a.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Per-trial CSV columns.
pub const CSV_HEADER: &str = "seed,T,m,f,algorithm,gap,violation,total,lp_solves,wall_time";

/// One CSV row of a trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub horizon: usize,
    pub resource_count: usize,
    pub frequency: usize,
    pub algorithm: String,
    pub report: RegretReport,
    pub lp_solves: usize,
    /// Seconds spent on the decision path.
    pub wall_time: f64,
}

impl TrialRecord {
    pub fn to_csv_row(&self) -> String {
        let mut row = String::new();
        write!(
            row,
            "{},{},{},{},{},{:?},{:?},{:?},{},{:.6}",
            self.seed,
            self.horizon,
            self.resource_count,
            self.frequency,
            self.algorithm,
            self.report.optimality_gap,
            self.report.violation,
            self.report.total,
            self.lp_solves,
            self.wall_time
        )
        .unwrap();
        row
    }
}
