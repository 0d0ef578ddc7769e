use thiserror::Error;

use crate::config::KdeConfig;
use crate::error::KdeError;
use crate::kde::DynamicKde;
use crate::kernel::KernelSpec;
use crate::lsh::LshTable;
use crate::points::PointSet;
use crate::rng::{self, Stream};
use crate::schedule::LevelSchedule;

use super::exact_kde;
use super::report::TestOutcome;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    /// A precondition of the check does not hold; nothing was measured.
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error(transparent)]
    Kde(#[from] KdeError),
}

/// Moments of a per-trial statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStats {
    pub trials: usize,
    pub mean: f64,
    pub second_moment: f64,
    /// Standard error of the mean, `sqrt((m2 - mean^2) / trials)`.
    pub stderr: f64,
    /// Fraction of trials in which the per-trial event of the check held.
    pub pass_fraction: f64,
}

impl TrialStats {
    /// Moments of `values`; `events[t]` marks trial `t` as passing.
    pub fn from_values(values: &[f64], events: &[bool]) -> Self {
        let trials = values.len();
        if trials == 0 {
            return Self { trials, mean: f64::NAN, second_moment: f64::NAN, stderr: f64::NAN, pass_fraction: 0.0 };
        }
        let m = trials as f64;
        let mean = values.iter().sum::<f64>() / m;
        let second_moment = values.iter().map(|v| v * v).sum::<f64>() / m;
        let stderr = ((second_moment - mean * mean).max(0.0) / m).sqrt();
        let pass_fraction = events.iter().filter(|&&e| e).count() as f64 / m;
        Self {
            trials,
            mean,
            second_moment,
            stderr,
            pass_fraction,
        }
    }
}

/// Everything a Monte Carlo check needs besides the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSetup {
    pub kernel: KernelSpec,
    pub epsilon: f64,
    pub f_kde: f64,
    pub config: KdeConfig,
    pub trials: usize,
    pub master_seed: u64,
}

impl TrialSetup {
    pub fn trial_seed(&self, t: usize) -> u64 {
        rng::derive(self.master_seed, Stream::Trial, &[t as u64])
    }

    fn check_trials(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Configuration("trial count must be positive".into()));
        }
        Ok(())
    }

    /// Exact density at `q`, required to lie in `[f_kde / 4, f_kde]`.
    fn checked_density(&self, points: &PointSet, q: &[f64]) -> Result<f64, HarnessError> {
        let f_star = exact_kde(points, &self.kernel, q)?;
        if !(f_star >= self.f_kde / 4.0 && f_star <= self.f_kde) {
            return Err(HarnessError::Configuration(format!(
                "query density {f_star:.6} outside [f_kde/4, f_kde] = [{:.6}, {:.6}]",
                self.f_kde / 4.0,
                self.f_kde
            )));
        }
        Ok(f_star)
    }

    /// `T_1` (raw, not divided by `n`) of a fresh structure per trial; only the
    /// first group is built since it does not depend on the others.
    fn first_group_values(&self, points: &PointSet, q: &[f64]) -> Result<Vec<f64>, HarnessError> {
        (0..self.trials)
            .map(|t| {
                let kde = DynamicKde::initialize_with_groups(
                    self.kernel,
                    points.clone(),
                    self.epsilon,
                    self.f_kde,
                    self.trial_seed(t),
                    self.config,
                    1,
                )?;
                Ok(kde.query(q)?.per_group_t[0])
            })
            .collect()
    }
}

/// Mean of `T_1 / n` over independent structures against the exact density:
/// passes iff `|mean - f*| <= 3 stderr`.
pub fn run_unbiasedness_test(
    points: &PointSet,
    q: &[f64],
    setup: &TrialSetup,
) -> Result<TestOutcome, HarnessError> {
    setup.check_trials()?;
    let f_star = setup.checked_density(points, q)?;
    let n = points.len() as f64;
    let values: Vec<f64> = setup.first_group_values(points, q)?.into_iter().map(|t| t / n).collect();
    let events: Vec<bool> = values.iter().map(|v| (v - f_star).abs() <= setup.epsilon * f_star).collect();
    let stats = TrialStats::from_values(&values, &events);
    let pass = (stats.mean - f_star).abs() <= 3.0 * stats.stderr;
    Ok(TestOutcome::new("unbiasedness", stats, f_star, 3.0 * stats.stderr, pass))
}

/// Empirical `E[T_1^2]` against `4 n^2 f_kde^2` with 50% slack.
pub fn run_variance_test(points: &PointSet, q: &[f64], setup: &TrialSetup) -> Result<TestOutcome, HarnessError> {
    setup.check_trials()?;
    let f_star = setup.checked_density(points, q)?;
    let n = points.len() as f64;
    let bound = 4.0 * n * n * setup.f_kde * setup.f_kde * 1.5;
    let squares: Vec<f64> = setup.first_group_values(points, q)?.into_iter().map(|t| t * t).collect();
    let events: Vec<bool> = squares.iter().map(|&s| s <= bound).collect();
    // report moments of T^2 itself so that `mean` is the quantity compared to the bound
    let stats = TrialStats::from_values(&squares, &events);
    let pass = stats.mean <= bound;
    let _ = f_star;
    Ok(TestOutcome::new("variance", stats, stats.mean, bound, pass))
}

/// A planted point for [`run_recovery_test`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryProbe {
    /// Level `r` whose hash structure is probed.
    pub level: u32,
    /// Planted distance as a multiple of `z_r`.
    pub distance_factor: f64,
}

impl RecoveryProbe {
    /// Probability that one level-`r` structure returns a point at `distance_factor * z_r`.
    pub fn predicted(&self, schedule: &LevelSchedule) -> f64 {
        let r = self.level;
        let z = schedule.distance(r);
        let p = schedule.collision_model().collision_prob(self.distance_factor * z, z);
        1.0 - (1.0 - p.powi(schedule.concat(r) as i32)).powi(schedule.repetitions(r) as i32)
    }

    /// Near probes (factor at most 1) are checked against the lower bound at `z_r`,
    /// far probes against the upper bound at their own distance.
    pub fn is_near(&self) -> bool {
        self.distance_factor <= 1.0
    }
}

/// Recovery frequency of a planted point by freshly seeded level-`r` structures
/// sized by the schedule for `points`.
///
/// A near probe passes iff the frequency is at least `1 - (1 - p_near^k)^K2 - 3 sigma`;
/// a far probe passes iff it is at most the prediction at its distance plus `3 sigma`.
pub fn run_recovery_test(
    points: &PointSet,
    probe: RecoveryProbe,
    setup: &TrialSetup,
) -> Result<TestOutcome, HarnessError> {
    setup.check_trials()?;
    if points.is_empty() {
        return Err(HarnessError::Configuration("empty dataset".into()));
    }
    let schedule = LevelSchedule::build(&setup.kernel, points.len(), setup.f_kde, &setup.config)?;
    let r = probe.level;
    if r == 0 || r > schedule.levels() {
        return Err(HarnessError::Configuration(format!(
            "level {r} outside 1..={}",
            schedule.levels()
        )));
    }
    if !(probe.distance_factor >= 0.0 && probe.distance_factor.is_finite()) {
        return Err(HarnessError::Configuration("distance factor must be finite and nonnegative".into()));
    }
    let d = points.dim();
    let z = schedule.distance(r);
    let params = schedule.lsh_params(r);
    let reference = if probe.is_near() {
        RecoveryProbe { level: r, distance_factor: 1.0 }.predicted(&schedule)
    } else {
        probe.predicted(&schedule)
    };

    let mut events = Vec::with_capacity(setup.trials);
    for t in 0..setup.trials {
        let seed = setup.trial_seed(t);
        let q = points.get(t % points.len());
        let dir = random_unit(d, rng::derive(seed, Stream::Trial, &[1]));
        let planted: Vec<f64> = q.iter().zip(&dir).map(|(c, u)| c + probe.distance_factor * z * u).collect();
        let table = LshTable::initialize([(0usize, planted.as_slice())], d, params, seed)?;
        events.push(!table.recover(q).is_empty());
    }
    let values: Vec<f64> = events.iter().map(|&e| f64::from(u8::from(e))).collect();
    let stats = TrialStats::from_values(&values, &events);
    let m = setup.trials as f64;
    let freq = stats.mean;
    let sigma = (freq * (1.0 - freq)).max(reference * (1.0 - reference)).sqrt() / m.sqrt();
    let (bound, pass) = if probe.is_near() {
        let b = reference - 3.0 * sigma;
        (b, freq >= b)
    } else {
        let b = reference + 3.0 * sigma;
        (b, freq <= b)
    };
    let name = format!("recovery_r{r}_x{:.2}", probe.distance_factor);
    Ok(TestOutcome::new(&name, stats, reference, bound, pass))
}

fn random_unit(d: usize, key: u64) -> Vec<f64> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut rng = rng::chacha(key);
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Applies `script` to a structure built over `points`, rebuilds from scratch on
/// the resulting dataset with the same seed, and compares every query report
/// bit for bit.
pub fn run_update_equivalence_test(
    points: &PointSet,
    script: &[(usize, Vec<f64>)],
    queries: &[Vec<f64>],
    setup: &TrialSetup,
) -> Result<bool, HarnessError> {
    let mut live = DynamicKde::initialize(
        setup.kernel,
        points.clone(),
        setup.epsilon,
        setup.f_kde,
        setup.master_seed,
        setup.config,
    )?;
    let mut modified = points.clone();
    for (i, v) in script {
        live.update(v, *i)?;
        modified.set(*i, v);
    }
    let rebuilt = DynamicKde::initialize(
        setup.kernel,
        modified,
        setup.epsilon,
        setup.f_kde,
        setup.master_seed,
        setup.config,
    )?;
    for q in queries {
        if live.query(q)? != rebuilt.query(q)? {
            return Ok(false);
        }
    }
    Ok(true)
}
