//! Tunable constants shared by the schedule, the hash tables and the estimator.

use crate::error::{param_err, Result};

/// Constants bundle. Every field is a knob that the asymptotic analysis hides
/// behind a big-O or a `(1 - o(1))` factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    /// `C` in `K1 = max(1, ceil(C * eps^-2 * ln n))`.
    pub group_constant: f64,
    /// `beta` in `K2_r = ceil(beta * ln n * p_near^-k_r)`.
    pub repetition_constant: f64,
    /// Slack `gamma` in `(0, 1]` replacing the `(1 - o(1))` factors.
    pub slack: f64,
    /// Bucket width as a multiple of the level's near distance.
    pub bucket_width_factor: f64,
    /// Upper limit on the number of weight levels `R`.
    pub max_levels: u32,
    /// Upper limit on `K2_r`.
    pub max_repetitions: usize,
    /// Number of blocks for the median-of-means aggregation over groups.
    pub median_blocks: usize,
    /// `c_boost` in the robust ensemble size.
    pub boost_constant: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self {
            group_constant: 4.0,
            repetition_constant: 3.0,
            slack: 1.0,
            bucket_width_factor: 1.4,
            max_levels: 64,
            max_repetitions: 4096,
            median_blocks: 1,
            boost_constant: 1.0,
        }
    }
}

impl KdeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.group_constant > 0.0 && self.group_constant.is_finite()) {
            return param_err(format!("group constant C must be positive, got {}", self.group_constant));
        }
        if !(self.repetition_constant > 0.0 && self.repetition_constant.is_finite()) {
            return param_err(format!(
                "repetition constant beta must be positive, got {}",
                self.repetition_constant
            ));
        }
        if !(self.slack > 0.0 && self.slack <= 1.0) {
            return param_err(format!("slack gamma must lie in (0, 1], got {}", self.slack));
        }
        if !(self.bucket_width_factor > 0.0 && self.bucket_width_factor.is_finite()) {
            return param_err(format!(
                "bucket width factor must be positive, got {}",
                self.bucket_width_factor
            ));
        }
        if self.max_levels == 0 {
            return param_err("max_levels must be positive");
        }
        if self.max_repetitions == 0 {
            return param_err("max_repetitions must be positive");
        }
        if self.median_blocks == 0 {
            return param_err("median_blocks must be positive");
        }
        if !(self.boost_constant > 0.0 && self.boost_constant.is_finite()) {
            return param_err(format!("boost constant must be positive, got {}", self.boost_constant));
        }
        Ok(())
    }

    /// Number of estimator groups for a dataset of `n` points at accuracy `epsilon`.
    pub fn group_count(&self, n: usize, epsilon: f64) -> usize {
        let ln_n = (n.max(1) as f64).ln();
        let raw = (self.group_constant * ln_n / (epsilon * epsilon)).ceil();
        (raw as usize).max(1)
    }
}
