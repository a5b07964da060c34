//! Verdict bookkeeping and paired statistics for the acceptance run.

use std::time::{Duration, Instant};

use olp_core::metrics::mean_std;

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }

    /// Fails the verdict if `elapsed` exceeds `limit`.
    pub fn within(mut self, elapsed: Duration, limit: Duration) -> Self {
        if elapsed > limit {
            self.pass = false;
            self.detail.push_str(&format!("; over the {}s limit", limit.as_secs()));
        }
        self
    }

    /// `NAME  PASS|FAIL  detail (seconds)`.
    pub fn line(&self, name: &str, elapsed: Duration) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        format!("{name:<5} {status}  {} ({:.1}s)", self.detail, elapsed.as_secs_f64())
    }
}

/// Runs `check` under a wall-time limit.
pub fn timed(limit: Duration, check: impl FnOnce() -> Verdict) -> (Verdict, Duration) {
    let start = Instant::now();
    let v = check();
    let elapsed = start.elapsed();
    (v.within(elapsed, limit), elapsed)
}

/// Sample mean and its standard error; `None` for an empty sample.
pub fn mean_se(values: &[f64]) -> Option<(f64, f64)> {
    let (mean, std) = mean_std(values).ok()?;
    Some((mean, std / (values.len() as f64).sqrt()))
}

/// Mean and standard error of the paired differences `a − b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedGap {
    pub mean: f64,
    pub se: f64,
}

impl PairedGap {
    /// `a` and `b` must pair up trial by trial.
    pub fn new(a: &[f64], b: &[f64]) -> Option<Self> {
        if a.len() != b.len() {
            return None;
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let (mean, se) = mean_se(&diff)?;
        Some(Self { mean, se })
    }

    /// `a ≤ b` up to one standard error.
    pub fn not_above(&self) -> bool {
        self.mean <= self.se
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_error_of_a_small_sample() {
        // sample std of {1, 2, 3, 4} is √(5/3)
        let (mean, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(mean, 2.5);
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert!(mean_se(&[]).is_none());
    }

    #[test]
    fn paired_gap_tolerates_one_standard_error() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let shifted: Vec<f64> = a.iter().map(|x| x - 0.5).collect();
        let gap = PairedGap::new(&a, &shifted).unwrap();
        assert_eq!((gap.mean, gap.se), (0.5, 0.0));
        assert!(!gap.not_above());
        let noisy = [0.0, 2.0, 2.0, 4.0];
        // differences {1, 0, 1, 0}: mean 0.5, se ≈ 0.289
        let gap = PairedGap::new(&a, &noisy).unwrap();
        assert!(!gap.not_above());
        let gap = PairedGap::new(&noisy, &a).unwrap();
        assert!(gap.not_above());
        assert!(PairedGap::new(&a, &a[..2]).is_none());
    }

    #[test]
    fn slow_checks_fail() {
        let v = Verdict::new(true, "ok".into()).within(Duration::from_secs(3), Duration::from_secs(2));
        assert!(!v.pass);
        assert_eq!(v.line("AC1", Duration::from_millis(3000)), "AC1   FAIL  ok; over the 2s limit (3.0s)");
    }
}
