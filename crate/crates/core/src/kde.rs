//! The dynamic density structure.
//!
//! `K1` independent estimator groups each hold, for every weight level `r`, a
//! Bernoulli subsample of point indices drawn at rate `min(1 / (2^r n f_kde), 1)`
//! and an LSH structure over those points tuned to the level's distance `z_r`,
//! plus a uniform `1/n` subsample for the tail level. A query recovers, per
//! group and level, the sampled points that hash with `q` and fall in level
//! `r`, adds tail points from the uniform subsample, and forms the importance
//! sampling sum `T_a = sum w_i / p_i`. The group estimates are aggregated by a
//! median of block means.
//!
//! Sample membership is fixed at construction and keyed by
//! `(seed, group, level, index)`; an update only moves an index between
//! buckets. A structure updated to dataset `X'` is therefore identical to one
//! freshly built on `X'` with the same seed.

use crate::config::KdeConfig;
use crate::error::{param_err, KdeError, Result};
use crate::kernel::{level_unchecked, KernelSpec};
use crate::lsh::LshTable;
use crate::points::PointSet;
use crate::rng::{self, Stream};
use crate::schedule::LevelSchedule;
use crate::stats::median_of_means;

/// Sampled indices of one level of one group and the hash structure over them.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSample {
    pub(crate) members: Vec<u32>,
    pub(crate) table: LshTable,
}

impl LevelSample {
    /// Sampled indices, ascending.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn table(&self) -> &LshTable {
        &self.table
    }

    fn holds(&self, index: u32) -> bool {
        self.members.binary_search(&index).is_ok()
    }
}

/// One independent estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorGroup {
    pub(crate) levels: Vec<LevelSample>,
    pub(crate) tail: Vec<u32>,
}

impl EstimatorGroup {
    /// Level `r` in `1..=R`.
    pub fn level(&self, r: u32) -> &LevelSample {
        &self.levels[r as usize - 1]
    }

    /// Uniform `1/n` subsample used for the tail level.
    pub fn tail(&self) -> &[u32] {
        &self.tail
    }
}

/// Diagnostics of a single query.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    /// Density estimate, already divided by `n`.
    pub estimate: f64,
    /// Raw `T_a` per group (estimates of `n * f*`).
    pub per_group_t: Vec<f64>,
    /// Size of the recovered set per group and level, row-major `[a][r - 1]`.
    pub recovered_counts: Vec<u32>,
    /// Total recovered set sizes before level filtering.
    pub candidates_examined: u64,
    /// Uniform tail-sample points scanned.
    pub tail_examined: u64,
    /// Contributing points per level `1..=R+1`, stored 0-based.
    pub levels_hit: Vec<u64>,
    /// Recovered points summed over groups, row-major `[r - 1][i - 1]`: how many
    /// of the points the level-`r` tables returned belong to level `i`.
    pub recovered_by_level: Vec<u64>,
}

impl EstimatorReport {
    pub fn groups(&self) -> usize {
        self.per_group_t.len()
    }

    /// `T_a / n` of group `a` (0-based).
    pub fn group_estimate(&self, a: usize, n: usize) -> f64 {
        self.per_group_t[a] / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicKde {
    pub(crate) kernel: KernelSpec,
    pub(crate) epsilon: f64,
    pub(crate) f_kde: f64,
    pub(crate) seed: u64,
    pub(crate) config: KdeConfig,
    pub(crate) schedule: LevelSchedule,
    pub(crate) dataset: PointSet,
    pub(crate) groups: Vec<EstimatorGroup>,
    pub(crate) update_counter: u64,
}

pub(crate) fn validate_inputs(epsilon: f64, f_kde: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return param_err(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    if !(f_kde > 0.0 && f_kde < 1.0) {
        return param_err(format!("f_kde must lie in (0, 1), got {f_kde}"));
    }
    Ok(())
}

impl DynamicKde {
    /// Builds the structure over `points`.
    ///
    /// `f_kde` must be at least the true density of every query the caller
    /// intends to make. It is not checked here.
    pub fn initialize(
        kernel: KernelSpec,
        points: PointSet,
        epsilon: f64,
        f_kde: f64,
        seed: u64,
        config: KdeConfig,
    ) -> Result<Self> {
        validate_inputs(epsilon, f_kde)?;
        let group_count = config.group_count(points.len(), epsilon);
        Self::initialize_with_groups(kernel, points, epsilon, f_kde, seed, config, group_count)
    }

    /// Like [`initialize`](Self::initialize) with an explicit group count.
    ///
    /// Group `a` depends only on `(seed, a)`, so the first groups of a structure
    /// are identical whatever the total count. Statistical harnesses use this to
    /// build only the groups they observe.
    pub fn initialize_with_groups(
        kernel: KernelSpec,
        points: PointSet,
        epsilon: f64,
        f_kde: f64,
        seed: u64,
        config: KdeConfig,
        group_count: usize,
    ) -> Result<Self> {
        validate_inputs(epsilon, f_kde)?;
        if points.is_empty() {
            return param_err("dataset must contain at least one point");
        }
        if group_count == 0 {
            return param_err("at least one estimator group is required");
        }
        let n = points.len();
        if n > u32::MAX as usize {
            return param_err("dataset too large for 32-bit indices");
        }
        let schedule = LevelSchedule::build(&kernel, n, f_kde, &config)?;
        let groups = (0..group_count)
            .map(|a| build_group(a, &points, &schedule, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernel,
            epsilon,
            f_kde,
            seed,
            config,
            schedule,
            dataset: points,
            groups,
            update_counter: 0,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn f_kde(&self) -> f64 {
        self.f_kde
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config(&self) -> &KdeConfig {
        &self.config
    }

    pub fn schedule(&self) -> &LevelSchedule {
        &self.schedule
    }

    pub fn dataset(&self) -> &PointSet {
        &self.dataset
    }

    pub fn n(&self) -> usize {
        self.dataset.len()
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    pub fn groups(&self) -> &[EstimatorGroup] {
        &self.groups
    }

    /// `K1`
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn update_counter(&self) -> u64 {
        self.update_counter
    }

    /// Total hash tables across all groups and levels.
    pub fn table_count(&self) -> usize {
        let per_group: usize = (1..=self.schedule.levels()).map(|r| self.schedule.repetitions(r)).sum();
        per_group * self.groups.len()
    }

    /// Replaces point `index` by `point`.
    ///
    /// Every hash structure that sampled `index` moves it to its new buckets;
    /// sample membership is unchanged. Either all structures are updated or,
    /// on error, none are.
    pub fn update(&mut self, point: &[f64], index: usize) -> Result<()> {
        if index >= self.n() {
            return param_err(format!("index {index} out of range for {} points", self.n()));
        }
        if point.len() != self.dim() {
            return Err(KdeError::Dimension { expected: self.dim(), got: point.len() });
        }
        if point.iter().any(|c| !c.is_finite()) {
            return param_err("coordinates must be finite");
        }
        let idx = index as u32;
        let old = self.dataset.get(index).to_vec();
        for group in &self.groups {
            for level in group.levels.iter().filter(|l| l.holds(idx)) {
                level.table.verify_stored(&old, index)?;
            }
        }
        for group in &mut self.groups {
            for level in group.levels.iter_mut().filter(|l| l.holds(idx)) {
                level.table.update(point, &old, index)?;
            }
        }
        self.dataset.set(index, point);
        self.update_counter += 1;
        Ok(())
    }

    /// Estimates the density at `q`.
    pub fn query(&self, q: &[f64]) -> Result<EstimatorReport> {
        if q.len() != self.dim() {
            return Err(KdeError::Dimension { expected: self.dim(), got: q.len() });
        }
        let n = self.n();
        let levels = self.schedule.levels();
        let tail_level = levels + 1;
        let width = tail_level as usize;
        let mut report = EstimatorReport {
            estimate: 0.0,
            per_group_t: Vec::with_capacity(self.groups.len()),
            recovered_counts: Vec::with_capacity(self.groups.len() * levels as usize),
            candidates_examined: 0,
            tail_examined: 0,
            levels_hit: vec![0; width],
            recovered_by_level: vec![0; levels as usize * width],
        };
        let inv_rates: Vec<f64> = (1..=levels).map(|r| 1.0 / self.schedule.sampling_rate(r)).collect();
        let mut buf = Vec::new();
        for group in &self.groups {
            let mut t = 0.0;
            for (r0, level) in group.levels.iter().enumerate() {
                let r = r0 as u32 + 1;
                level.table.recover_into(q, &mut buf);
                report.recovered_counts.push(buf.len() as u32);
                report.candidates_examined += buf.len() as u64;
                for &i in &buf {
                    let w = self.kernel.eval_points(self.dataset.get(i), q);
                    let lvl = level_unchecked(w, levels);
                    report.recovered_by_level[r0 * width + lvl as usize - 1] += 1;
                    if lvl == r {
                        t += w * inv_rates[r0];
                        report.levels_hit[r0] += 1;
                    }
                }
            }
            report.tail_examined += group.tail.len() as u64;
            for &i in &group.tail {
                let w = self.kernel.eval_points(self.dataset.get(i as usize), q);
                if level_unchecked(w, levels) == tail_level {
                    t += w * n as f64;
                    report.levels_hit[width - 1] += 1;
                }
            }
            report.per_group_t.push(t);
        }
        report.estimate = median_of_means(&report.per_group_t, self.config.median_blocks) / n as f64;
        Ok(report)
    }

    /// Shorthand for `query(q)?.estimate`.
    pub fn estimate(&self, q: &[f64]) -> Result<f64> {
        Ok(self.query(q)?.estimate)
    }
}

fn build_group(a: usize, points: &PointSet, schedule: &LevelSchedule, seed: u64) -> Result<EstimatorGroup> {
    let n = points.len();
    let a_key = a as u64;
    let levels = (1..=schedule.levels())
        .map(|r| {
            let rate = schedule.sampling_rate(r);
            let members: Vec<u32> = (0..n as u32)
                .filter(|&i| rng::bernoulli(rng::derive(seed, Stream::LevelSample, &[a_key, r as u64, i as u64]), rate))
                .collect();
            let table = LshTable::initialize(
                members.iter().map(|&i| (i as usize, points.get(i as usize))),
                points.dim(),
                schedule.lsh_params(r),
                rng::derive(seed, Stream::HashAtom, &[a_key, r as u64]),
            )?;
            Ok(LevelSample { members, table })
        })
        .collect::<Result<Vec<_>>>()?;
    let tail_rate = 1.0 / n as f64;
    let tail = (0..n as u32)
        .filter(|&i| rng::bernoulli(rng::derive(seed, Stream::TailSample, &[a_key, i as u64]), tail_rate))
        .collect();
    Ok(EstimatorGroup { levels, tail })
}
