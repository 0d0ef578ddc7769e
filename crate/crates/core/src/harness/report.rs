use std::fmt;

use super::trials::TrialStats;

/// Result of one Monte Carlo check.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub name: String,
    pub stats: TrialStats,
    /// The quantity the measurement is compared against (exact density, predicted rate, ...).
    pub reference: f64,
    /// The threshold actually applied.
    pub bound: f64,
    pub pass: bool,
}

impl TestOutcome {
    pub fn new(name: &str, stats: TrialStats, reference: f64, bound: f64, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            stats,
            reference,
            bound,
            pass,
        }
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{:.9e},{:.9e},{:.9e},{}",
            self.name, self.stats.trials, self.stats.mean, self.reference, self.bound, self.pass
        )
    }
}

/// One `key=value` record.
impl fmt::Display for TestOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "test={} pass={} trials={} mean={:.6e} stderr={:.3e} reference={:.6e} bound={:.6e}",
            self.name,
            self.pass,
            self.stats.trials,
            self.stats.mean,
            self.stats.stderr,
            self.reference,
            self.bound
        )
    }
}

/// Machine-readable summary, one row per outcome, stable for identical inputs.
pub fn summary_csv(outcomes: &[TestOutcome]) -> String {
    let mut out = String::from("name,trials,mean,reference,bound,pass\n");
    for o in outcomes {
        out.push_str(&o.csv_row());
        out.push('\n');
    }
    out
}
