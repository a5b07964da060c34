//! Experiment specification, flat key-value config files and seed derivation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use olp_core::input_gen::InputModel;
use olp_core::policies::{GuardMode, PolicyConfig, PolicyKind, StepSchedule};

use crate::error::{HarnessError, Result};

/// How a cell's re-solving frequency follows from the horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrequencyRule {
    Fixed(usize),
    /// `f = ⌈T^β⌉`.
    Power(f64),
}

impl FrequencyRule {
    /// Frequency at horizon `t`, clamped to `[1, t]`.
    pub fn frequency(&self, t: usize) -> usize {
        let f = match *self {
            FrequencyRule::Fixed(f) => f,
            FrequencyRule::Power(beta) => power_frequency(t, beta),
        };
        f.clamp(1, t.max(1))
    }
}

/// `⌈T^β⌉`, computed so that exact powers are not pushed up by rounding
/// (`⌈1000^{1/3}⌉ = 10`).
pub fn power_frequency(t: usize, beta: f64) -> usize {
    let x = (t as f64).powf(beta);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

impl fmt::Display for FrequencyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FrequencyRule::Fixed(v) => write!(f, "f={v}"),
            FrequencyRule::Power(beta) => write!(f, "f=T^{beta:.3}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub horizons: Vec<usize>,
    pub resource_count: usize,
    pub model: InputModel,
    /// Frequency regimes for the hybrid policies; other policies ignore them.
    pub frequency_rules: Vec<FrequencyRule>,
    pub algorithms: Vec<PolicyKind>,
    pub trials: usize,
    pub base_seed: u64,
    pub guard: GuardMode,
    pub delta_guard: Option<f64>,
    /// `None` keeps each policy's default schedule.
    pub step_schedule: Option<StepSchedule>,
    pub warm_start: bool,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            horizons: vec![1000],
            resource_count: 1,
            model: InputModel::InputI,
            frequency_rules: vec![FrequencyRule::Power(1.0 / 3.0)],
            algorithms: vec![PolicyKind::Hybrid],
            trials: 1,
            base_seed: 0,
            guard: GuardMode::Hard,
            delta_guard: None,
            step_schedule: None,
            warm_start: false,
            workers: 1,
            out: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(HarnessError::spec("horizons must be a nonempty list of positive values"));
        }
        if self.resource_count == 0 {
            return Err(HarnessError::spec("m must be positive"));
        }
        if self.trials == 0 {
            return Err(HarnessError::spec("trials must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(HarnessError::spec("at least one algorithm is required"));
        }
        if self.workers == 0 {
            return Err(HarnessError::spec("workers must be at least 1"));
        }
        let uses_frequency = self.algorithms.iter().any(|a| a.uses_frequency());
        if uses_frequency && self.frequency_rules.is_empty() {
            return Err(HarnessError::spec("hybrid algorithms need a frequency rule"));
        }
        for rule in &self.frequency_rules {
            match *rule {
                FrequencyRule::Fixed(0) => return Err(HarnessError::spec("fixed frequency must be positive")),
                FrequencyRule::Power(beta) if !(beta > 0.0 && beta <= 1.0) => {
                    return Err(HarnessError::spec(format!("beta must lie in (0, 1], got {beta}")))
                }
                _ => {}
            }
        }
        if let Some(delta) = self.delta_guard {
            if !(delta > 0.0) {
                return Err(HarnessError::spec("delta must be positive"));
            }
        }
        Ok(())
    }

    /// The (algorithm, frequency rule) cells run at every horizon, in spec order.
    /// Policies without a frequency get a single cell with no rule.
    pub fn cells(&self) -> Vec<(PolicyKind, Option<FrequencyRule>)> {
        let mut cells = Vec::new();
        for &kind in &self.algorithms {
            if kind.uses_frequency() {
                cells.extend(self.frequency_rules.iter().map(|r| (kind, Some(*r))));
            } else {
                cells.push((kind, None));
            }
        }
        cells
    }

    pub fn policy_config(&self, kind: PolicyKind, frequency: usize) -> PolicyConfig {
        let mut cfg = PolicyConfig::new(kind).with_frequency(frequency).with_guard(self.guard);
        cfg.delta_guard = self.delta_guard;
        cfg.step_schedule = self.step_schedule.clone();
        cfg.warm_start = self.warm_start;
        cfg
    }

    /// Applies `key = value` settings on top of the current spec.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn fmt::Display| HarnessError::spec(format!("{key}: {e}"));
        match key {
            "T" | "horizons" => self.horizons = parse_list(value).map_err(|e| bad(&e))?,
            "m" => self.resource_count = value.parse().map_err(|e| bad(&e))?,
            "model" => self.model = value.parse().map_err(|e| bad(&e))?,
            "algo" | "algorithms" => self.algorithms = parse_list(value).map_err(|e| bad(&e))?,
            "freq" => {
                let fs: Vec<usize> = parse_list(value).map_err(|e| bad(&e))?;
                self.frequency_rules = fs.into_iter().map(FrequencyRule::Fixed).collect();
            }
            "beta" => {
                self.frequency_rules = split_list(value)
                    .map(parse_beta)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| bad(&e))?
                    .into_iter()
                    .map(FrequencyRule::Power)
                    .collect();
            }
            "trials" => self.trials = value.parse().map_err(|e| bad(&e))?,
            "seed" => self.base_seed = value.parse().map_err(|e| bad(&e))?,
            "guard" => self.guard = value.parse().map_err(|e| bad(&e))?,
            "delta" => self.delta_guard = Some(value.parse().map_err(|e| bad(&e))?),
            "steps" => self.step_schedule = Some(value.parse().map_err(|e| bad(&e))?),
            "warm_start" => self.warm_start = value.parse().map_err(|e| bad(&e))?,
            "workers" => self.workers = value.parse().map_err(|e| bad(&e))?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(HarnessError::spec(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config { line: idx + 1, msg: "expected `key = value`".into() })?;
            self.apply(key.trim(), value.trim())
                .map_err(|e| HarnessError::Config { line: idx + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut spec = Self::default();
        spec.apply_config(&text)?;
        Ok(spec)
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, T::Err> {
    split_list(value).map(str::parse).collect()
}

/// Accepts decimals and simple fractions such as `1/3`.
pub fn parse_beta(s: &str) -> std::result::Result<f64, String> {
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|e| format!("{e}"))?;
            let d: f64 = d.trim().parse().map_err(|e| format!("{e}"))?;
            Ok(n / d)
        }
        None => s.parse().map_err(|e| format!("{e}")),
    }
}

/// Instance seed for one trial of one horizon.
///
/// Depends on the base seed, trial index, horizon, resource count and model
/// but not on the algorithm or frequency, so every policy in a spec sees the
/// same instances and adding a policy leaves other cells unchanged.
pub fn derive_seed(base_seed: u64, trial: usize, horizon: usize, m: usize, model: &InputModel) -> u64 {
    let model_tag = match model {
        InputModel::InputI => 1u64,
        InputModel::InputII { clip: None } => 2,
        InputModel::InputII { clip: Some(c) } => 3 ^ c.to_bits(),
    };
    let mut h = 0u64;
    for word in [trial as u64, horizon as u64, m as u64, model_tag] {
        h = mix(h ^ word);
    }
    base_seed ^ h
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_rule_rounds_up() {
        assert_eq!(FrequencyRule::Power(1.0 / 3.0).frequency(1000), 10);
        assert_eq!(FrequencyRule::Power(1.0 / 3.0).frequency(10_000), 22);
        assert_eq!(FrequencyRule::Power(0.5).frequency(100_000), 317);
        assert_eq!(FrequencyRule::Power(2.0 / 3.0).frequency(100_000), 2155);
        assert_eq!(FrequencyRule::Power(1.0).frequency(50), 50);
        assert_eq!(FrequencyRule::Fixed(500).frequency(100), 100);
    }

    #[test]
    fn config_text_and_overrides() {
        let mut spec = ExperimentSpec::default();
        spec.apply_config("# sweep\nT = 100, 1000\nalgo = hybrid, first-order\nbeta = 1/3, 0.5\ntrials = 3\n").unwrap();
        assert_eq!(spec.horizons, vec![100, 1000]);
        assert_eq!(spec.frequency_rules.len(), 2);
        assert_eq!(spec.cells().len(), 3);
        spec.apply("trials", "7").unwrap();
        assert_eq!(spec.trials, 7);
        spec.validate().unwrap();
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let mut spec = ExperimentSpec::default();
        match spec.apply_config("T = 10\nbogus\n") {
            Err(HarnessError::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(spec.apply("colour", "red").is_err());
    }

    #[test]
    fn invalid_specs() {
        let mut spec = ExperimentSpec { trials: 0, ..Default::default() };
        assert!(spec.validate().is_err());
        spec.trials = 1;
        spec.frequency_rules = vec![FrequencyRule::Power(1.5)];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn seeds_ignore_the_algorithm_and_separate_cells() {
        let a = derive_seed(7, 0, 1000, 1, &InputModel::InputI);
        assert_eq!(a, derive_seed(7, 0, 1000, 1, &InputModel::InputI));
        assert_ne!(a, derive_seed(7, 1, 1000, 1, &InputModel::InputI));
        assert_ne!(a, derive_seed(7, 0, 10_000, 1, &InputModel::InputI));
        assert_ne!(a, derive_seed(7, 0, 1000, 2, &InputModel::InputI));
        assert_ne!(a, derive_seed(8, 0, 1000, 1, &InputModel::InputI));
    }
}
