//! Level schedule: how many weight levels there are, the distance each level is
//! tuned to, and the hash amplification used per level.

use crate::config::KdeConfig;
use crate::error::{param_err, KdeError, Result};
use crate::kernel::{pow2_neg, KernelSpec};
use crate::lsh::{CollisionModel, LshParams};

/// Per-level sizing derived from the kernel, `n` and `f_kde`.
///
/// Levels are 1-based in the public accessors to match the level numbering of
/// [`weight_level_of`](crate::kernel::weight_level_of).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSchedule {
    n: usize,
    f_kde: f64,
    levels: u32,
    slack: f64,
    ratio_cap: f64,
    /// `z_1 ..= z_{R+1}`, stored 0-based.
    distances: Vec<f64>,
    /// `concat[r-1] = k_r`
    concat: Vec<usize>,
    /// `repetitions[r-1] = K_{2,r}`
    repetitions: Vec<usize>,
    /// `p_near[r-1]` = single-atom collision probability at distance `z_r`
    p_near: Vec<f64>,
    model: CollisionModel,
}

/// `ceil` that ignores rounding noise just above an integer.
fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// Number of weight levels `R = ceil(log2(1 / f_kde))`.
pub fn level_count(f_kde: f64) -> u32 {
    let raw = (1.0 / f_kde).log2();
    let mut r = raw.ceil().max(1.0) as u32;
    // exact check against powers of two
    while r > 1 && pow2_neg(r - 1) <= f_kde {
        r -= 1;
    }
    while pow2_neg(r) > f_kde {
        r += 1;
    }
    r
}

impl LevelSchedule {
    pub fn build(kernel: &KernelSpec, n: usize, f_kde: f64, config: &KdeConfig) -> Result<Self> {
        config.validate()?;
        if n == 0 {
            return param_err("dataset must contain at least one point");
        }
        if !(f_kde > 0.0 && f_kde < 1.0) {
            return param_err(format!("f_kde must lie in (0, 1), got {f_kde}"));
        }
        let raw_levels = (1.0 / f_kde).log2().ceil();
        if !(raw_levels <= config.max_levels as f64) {
            return Err(KdeError::Capacity(format!(
                "f_kde = {f_kde} needs {raw_levels} levels, limit is {}",
                config.max_levels
            )));
        }
        let levels = level_count(f_kde);
        if levels > config.max_levels {
            return Err(KdeError::Capacity(format!(
                "f_kde = {f_kde} needs {levels} levels, limit is {}",
                config.max_levels
            )));
        }
        let model = CollisionModel::new(config.bucket_width_factor)?;
        let distances = (1..=levels + 1)
            .map(|r| kernel.invert(pow2_neg(r)))
            .collect::<Result<Vec<_>>>()?;
        let ratio_cap = (n as f64).log2().powf(1.0 / 7.0).max(1.0);
        let ln_n = (n as f64).ln();

        let mut schedule = Self {
            n,
            f_kde,
            levels,
            slack: config.slack,
            ratio_cap,
            distances,
            concat: Vec::with_capacity(levels as usize),
            repetitions: Vec::with_capacity(levels as usize),
            p_near: Vec::with_capacity(levels as usize),
            model,
        };
        for r in 1..=levels {
            let z = schedule.distance(r);
            let p = model.collision_prob(z, z);
            let exponent = (r + 1..=levels + 1)
                .map(|i| {
                    let c = schedule.ratio(i, r);
                    ceil_tol((i - r) as f64 / (config.slack * c * c))
                })
                .fold(1.0, f64::max);
            let k = ceil_tol(exponent * std::f64::consts::LN_2 / (1.0 / p).ln()).max(1.0) as usize;
            let reps = (config.repetition_constant * ln_n * p.powi(-(k as i32))).ceil();
            let reps = if reps.is_finite() {
                (reps as usize).clamp(1, config.max_repetitions)
            } else {
                config.max_repetitions
            };
            schedule.concat.push(k);
            schedule.repetitions.push(reps);
            schedule.p_near.push(p);
        }
        Ok(schedule)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn f_kde(&self) -> f64 {
        self.f_kde
    }

    /// `R`
    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Distance level `z_r` for `r` in `1..=R+1`.
    pub fn distance(&self, r: u32) -> f64 {
        self.distances[r as usize - 1]
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances[..self.levels as usize]
    }

    /// `c_{i,r} = min(z_{i-1} / z_r, max(1, log2(n)^(1/7)))` for `r < i <= R+1`.
    pub fn ratio(&self, i: u32, r: u32) -> f64 {
        assert!(r >= 1 && i > r && i <= self.levels + 1, "ratio({i}, {r}) out of range");
        (self.distance(i - 1) / self.distance(r)).min(self.ratio_cap)
    }

    pub fn ratio_cap(&self) -> f64 {
        self.ratio_cap
    }

    /// `k_r`
    pub fn concat(&self, r: u32) -> usize {
        self.concat[r as usize - 1]
    }

    /// `K_{2,r}`
    pub fn repetitions(&self, r: u32) -> usize {
        self.repetitions[r as usize - 1]
    }

    pub fn p_near(&self, r: u32) -> f64 {
        self.p_near[r as usize - 1]
    }

    pub fn collision_model(&self) -> &CollisionModel {
        &self.model
    }

    /// Probability of keeping a point in the level-`r` sample, `min(1 / (2^r n f_kde), 1)`.
    pub fn sampling_rate(&self, r: u32) -> f64 {
        (1.0 / (2f64.powi(r as i32) * self.n as f64 * self.f_kde)).min(1.0)
    }

    /// Hash structure shape for level `r`.
    pub fn lsh_params(&self, r: u32) -> LshParams {
        LshParams::new(self.concat(r), self.repetitions(r), self.distance(r), &self.model)
    }

    /// Predicted probability that a sampled point at distance at most `z_r`
    /// is recovered by the level-`r` structure: `1 - (1 - p^k)^K2`.
    pub fn predicted_recovery(&self, r: u32) -> f64 {
        let per_table = self.p_near(r).powi(self.concat(r) as i32);
        1.0 - (1.0 - per_table).powi(self.repetitions(r) as i32)
    }

    /// `cost(K, r) = 2^(max_i ceil((i - r) / (gamma c_{i,r})))`.
    pub fn level_cost(&self, r: u32) -> f64 {
        let exponent = (r + 1..=self.levels + 1)
            .map(|i| ceil_tol((i - r) as f64 / (self.slack * self.ratio(i, r))))
            .fold(0.0, f64::max);
        2f64.powf(exponent)
    }

    /// Kernel cost: the largest per-level cost. Informational only.
    pub fn kernel_cost(&self) -> f64 {
        (1..=self.levels).map(|r| self.level_cost(r)).fold(0.0, f64::max)
    }
}
