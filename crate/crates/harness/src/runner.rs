//! Seeded trial execution.

use std::time::Instant;

use olp_core::dual_lp::DEFAULT_TOL;
use olp_core::input_gen::{generate_instance, CapacityBounds, Instance};
use olp_core::metrics::{aggregate, AggregateReport, OracleCache, RegretReport, TrialRecord};
use olp_core::policies::{run_policy, PolicyKind};

use crate::error::Result;
use crate::spec::{derive_seed, ExperimentSpec, FrequencyRule};

/// A trial that could not be completed.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialFailure {
    pub trial: usize,
    pub seed: u64,
    pub message: String,
}

/// All trials of one (horizon, algorithm, frequency rule) cell.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub horizon: usize,
    pub algorithm: PolicyKind,
    pub rule: Option<FrequencyRule>,
    /// Re-solving period used (1 for AHDL, T for first-order).
    pub frequency: usize,
    /// Completed trials in trial order.
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
}

impl CellResult {
    pub fn label(&self) -> String {
        match self.rule {
            Some(rule) => format!("{} {rule}", self.algorithm),
            None => self.algorithm.to_string(),
        }
    }

    /// Regret statistics over completed trials; `None` if none completed.
    pub fn aggregate(&self) -> Option<AggregateReport> {
        aggregate(self.records.iter().map(|r| r.report.clone()).collect()).ok()
    }

    pub fn mean_wall_time(&self) -> f64 {
        mean(self.records.iter().map(|r| r.wall_time))
    }

    pub fn mean_lp_solves(&self) -> f64 {
        mean(self.records.iter().map(|r| r.lp_solves as f64))
    }

    pub fn mean_offline(&self) -> f64 {
        mean(self.records.iter().map(|r| r.report.offline_objective))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    /// Cells ordered by horizon, then by [`ExperimentSpec::cells`].
    pub cells: Vec<CellResult>,
}

impl ExperimentResult {
    pub fn has_failures(&self) -> bool {
        self.cells.iter().any(|c| !c.failures.is_empty())
    }

    pub fn cell(&self, horizon: usize, algorithm: PolicyKind, rule: Option<FrequencyRule>) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.horizon == horizon && c.algorithm == algorithm && c.rule == rule)
    }
}

type TrialRow = Vec<std::result::Result<TrialRecord, String>>;

/// Runs every cell of the spec.
///
/// Each trial draws one instance per horizon and runs every cell on it, so
/// cells are paired. Trials are spread over `spec.workers` threads; results
/// are keyed by trial index, so the output does not depend on scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let cells = spec.cells();
    let oracle = OracleCache::new();
    let mut out = Vec::new();
    for &horizon in &spec.horizons {
        let rows = run_horizon(spec, horizon, &cells, &oracle);
        for (c, &(algorithm, rule)) in cells.iter().enumerate() {
            let mut cell = CellResult {
                horizon,
                algorithm,
                rule,
                frequency: frequency_for(algorithm, rule, horizon),
                records: Vec::new(),
                failures: Vec::new(),
            };
            for (trial, row) in rows.iter().enumerate() {
                match &row[c] {
                    Ok(rec) => cell.records.push(rec.clone()),
                    Err(message) => cell.failures.push(TrialFailure {
                        trial,
                        seed: derive_seed(spec.base_seed, trial, horizon, spec.resource_count, &spec.model),
                        message: message.clone(),
                    }),
                }
            }
            out.push(cell);
        }
    }
    Ok(ExperimentResult { spec: spec.clone(), cells: out })
}

fn frequency_for(algorithm: PolicyKind, rule: Option<FrequencyRule>, horizon: usize) -> usize {
    match (algorithm, rule) {
        (_, Some(rule)) => rule.frequency(horizon),
        (PolicyKind::FirstOrder, None) => horizon,
        _ => 1,
    }
}

fn run_horizon(
    spec: &ExperimentSpec,
    horizon: usize,
    cells: &[(PolicyKind, Option<FrequencyRule>)],
    oracle: &OracleCache,
) -> Vec<TrialRow> {
    let workers = spec.workers.min(spec.trials).max(1);
    if workers == 1 {
        return (0..spec.trials).map(|trial| run_trial(spec, horizon, trial, cells, oracle)).collect();
    }
    let mut rows: Vec<Option<TrialRow>> = vec![None; spec.trials];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..spec.trials)
                        .step_by(workers)
                        .map(|trial| (trial, run_trial(spec, horizon, trial, cells, oracle)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            for (trial, row) in handle.join().expect("trial worker panicked") {
                rows[trial] = Some(row);
            }
        }
    });
    rows.into_iter().map(|r| r.expect("every trial is assigned")).collect()
}

/// One instance, every cell.
fn run_trial(
    spec: &ExperimentSpec,
    horizon: usize,
    trial: usize,
    cells: &[(PolicyKind, Option<FrequencyRule>)],
    oracle: &OracleCache,
) -> TrialRow {
    let seed = derive_seed(spec.base_seed, trial, horizon, spec.resource_count, &spec.model);
    let prepared = generate_instance(horizon, spec.resource_count, spec.model, seed, CapacityBounds::default())
        .and_then(|inst| oracle.offline_objective(&inst, DEFAULT_TOL).map(|v| (inst, v)));
    let (instance, offline) = match prepared {
        Ok(p) => p,
        Err(e) => return vec![Err(format!("instance or oracle: {e}")); cells.len()],
    };
    cells
        .iter()
        .map(|&(kind, rule)| run_cell(spec, &instance, offline, kind, rule).map_err(|e| e.to_string()))
        .collect()
}

fn run_cell(
    spec: &ExperimentSpec,
    instance: &Instance,
    offline: f64,
    kind: PolicyKind,
    rule: Option<FrequencyRule>,
) -> olp_core::Result<TrialRecord> {
    let frequency = frequency_for(kind, rule, instance.horizon);
    let cfg = spec.policy_config(kind, frequency);
    let start = Instant::now();
    let trajectory = run_policy(instance, &cfg)?;
    let wall_time = start.elapsed().as_secs_f64();
    Ok(TrialRecord {
        seed: instance.seed,
        horizon: instance.horizon,
        resource_count: instance.resource_count,
        frequency,
        algorithm: kind.name().to_string(),
        report: RegretReport::new(&trajectory, instance, offline),
        lp_solves: trajectory.lp_solve_count,
        wall_time,
    })
}
