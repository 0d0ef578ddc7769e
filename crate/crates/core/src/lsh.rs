//! Euclidean LSH with concatenation and repetition.
//!
//! Each atom is a p-stable projection `h(x) = floor((<a, x> + b) / w)` with
//! `a ~ N(0, I_d)` and `b ~ U[0, w)`. A table concatenates `k` atoms (AND) and
//! repeats `L` independent tables (OR). Buckets of all `L` tables live in one
//! ordered set keyed by `(table, bucket key, point index)`, so iterating a
//! bucket yields indices in ascending order and inserts/deletes are `O(log)`.
//!
//! Mutation requires exclusive access (`&mut self`); concurrent readers are fine.

use std::collections::BTreeSet;
use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erf;

use crate::error::{param_err, KdeError, Result};
use crate::rng::{self, Stream};

/// Collision probability curve of a single p-stable atom.
///
/// At normalized distance `s = dist / w`:
/// `p(s) = 1 - 2 Phi(-1/s) - (2 s / sqrt(2 pi)) (1 - exp(-1 / (2 s^2)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionModel {
    bucket_width_factor: f64,
}

impl CollisionModel {
    pub fn new(bucket_width_factor: f64) -> Result<Self> {
        if !(bucket_width_factor > 0.0 && bucket_width_factor.is_finite()) {
            return param_err(format!(
                "bucket width factor must be positive, got {bucket_width_factor}"
            ));
        }
        Ok(Self { bucket_width_factor })
    }

    pub fn bucket_width_factor(&self) -> f64 {
        self.bucket_width_factor
    }

    /// Bucket width used by tables whose near distance is `near_distance`.
    pub fn bucket_width(&self, near_distance: f64) -> f64 {
        self.bucket_width_factor * near_distance
    }

    /// Single-atom collision probability at normalized distance `s`.
    pub fn prob_normalized(s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        let inv = 1.0 / s;
        // 1 - 2 Phi(-1/s) = erf(1 / (s sqrt 2))
        let central = erf(inv / SQRT_2);
        let spill = 2.0 * s / (2.0 * PI).sqrt() * -(-0.5 * inv * inv).exp_m1();
        (central - spill).clamp(0.0, 1.0)
    }

    /// Collision probability of two points `dist` apart in a table built for `near_distance`.
    pub fn collision_prob(&self, dist: f64, near_distance: f64) -> f64 {
        if dist <= 0.0 {
            return 1.0;
        }
        Self::prob_normalized(dist / self.bucket_width(near_distance))
    }
}

/// Shape of one LSH structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshParams {
    /// Atoms concatenated per table.
    pub k: usize,
    /// Independent tables.
    pub repetitions: usize,
    /// Radius the table is tuned to recover.
    pub near_distance: f64,
    /// Bucket width `w` of every atom.
    pub bucket_width: f64,
}

impl LshParams {
    pub fn new(k: usize, repetitions: usize, near_distance: f64, model: &CollisionModel) -> Self {
        Self {
            k,
            repetitions,
            near_distance,
            bucket_width: model.bucket_width(near_distance),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.repetitions == 0 {
            return param_err("k and repetitions must be at least 1");
        }
        if !(self.near_distance > 0.0 && self.near_distance.is_finite()) {
            return param_err(format!("near distance must be positive, got {}", self.near_distance));
        }
        if !(self.bucket_width > 0.0 && self.bucket_width.is_finite()) {
            return param_err(format!("bucket width must be positive, got {}", self.bucket_width));
        }
        if self.repetitions > u32::MAX as usize {
            return param_err("too many repetitions");
        }
        Ok(())
    }
}

/// The `L x k` atoms of one structure, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct HashFamily {
    dim: usize,
    k: usize,
    width: f64,
    /// `repetitions * k * dim` projection entries, table-major.
    projections: Vec<f64>,
    /// `repetitions * k` offsets in `[0, width)`.
    offsets: Vec<f64>,
}

const KEY_INIT: u64 = 0x243F_6A88_85A3_08D3;

impl HashFamily {
    /// Draws every atom from its own stream keyed by `(seed, table, atom)`.
    pub fn draw(dim: usize, params: &LshParams, seed: u64) -> Self {
        let atoms = params.repetitions * params.k;
        let mut projections = Vec::with_capacity(atoms * dim);
        let mut offsets = Vec::with_capacity(atoms);
        for l in 0..params.repetitions {
            for j in 0..params.k {
                let mut rng = rng::chacha(rng::derive(seed, Stream::HashAtom, &[l as u64, j as u64]));
                projections.extend((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
                offsets.push(rng.gen::<f64>() * params.bucket_width);
            }
        }
        Self {
            dim,
            k: params.k,
            width: params.bucket_width,
            projections,
            offsets,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw atom output `floor((<a, x> + b) / w)` of atom `j` in table `l`.
    pub fn atom(&self, l: usize, j: usize, x: &[f64]) -> i64 {
        let idx = l * self.k + j;
        let a = &self.projections[idx * self.dim..(idx + 1) * self.dim];
        let dot: f64 = a.iter().zip(x).map(|(u, v)| u * v).sum();
        ((dot + self.offsets[idx]) / self.width).floor() as i64
    }

    /// Bucket key of `x` in table `l`: the `k` atom outputs folded through SplitMix64
    /// starting from a fixed constant. Mixer collisions only add false candidates.
    pub fn key(&self, l: usize, x: &[f64]) -> u64 {
        let mut h = KEY_INIT;
        for j in 0..self.k {
            h = rng::splitmix64(h ^ self.atom(l, j, x) as u64);
        }
        h
    }
}

type Entry = (u32, u64, u32);

/// One concatenated-and-repeated LSH structure over a set of indexed points.
#[derive(Debug, Clone, PartialEq)]
pub struct LshTable {
    params: LshParams,
    seed: u64,
    /// Drawn on construction when there is something to hash; an empty table
    /// never hashes anything, since updates only move stored indices.
    family: Option<HashFamily>,
    buckets: BTreeSet<Entry>,
    stored: usize,
}

impl LshTable {
    /// Hashes every `(index, point)` into all `L` tables.
    pub fn initialize<'a, I>(points: I, dim: usize, params: LshParams, seed: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, &'a [f64])>,
    {
        params.validate()?;
        let mut points = points.into_iter().peekable();
        let family = points.peek().map(|_| HashFamily::draw(dim, &params, seed));
        let mut buckets = BTreeSet::new();
        let mut stored = 0;
        if let Some(fam) = &family {
            for (index, x) in points {
                if x.len() != dim {
                    return Err(KdeError::Dimension { expected: dim, got: x.len() });
                }
                let index = to_u32(index)?;
                let mut fresh = false;
                for l in 0..params.repetitions {
                    fresh |= buckets.insert((l as u32, fam.key(l, x), index));
                }
                if fresh {
                    stored += 1;
                }
            }
        }
        Ok(Self {
            params,
            seed,
            family,
            buckets,
            stored,
        })
    }

    pub fn params(&self) -> &LshParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn family(&self) -> Option<&HashFamily> {
        self.family.as_ref()
    }

    /// Number of distinct indices stored.
    pub fn len(&self) -> usize {
        self.stored
    }

    pub fn is_empty(&self) -> bool {
        self.stored == 0
    }

    /// Bucket key of `x` in table `l`, if the table has hash functions.
    pub fn key(&self, l: usize, x: &[f64]) -> Option<u64> {
        self.family.as_ref().map(|f| f.key(l, x))
    }

    /// Union of the buckets `q` lands in across all `L` tables, ascending and deduplicated.
    pub fn recover(&self, q: &[f64]) -> Vec<usize> {
        let mut out = Vec::new();
        self.recover_into(q, &mut out);
        out
    }

    /// Like [`recover`](Self::recover) but reuses `out`, which is cleared first.
    pub fn recover_into(&self, q: &[f64], out: &mut Vec<usize>) {
        out.clear();
        let Some(fam) = &self.family else { return };
        if self.stored == 0 {
            return;
        }
        for l in 0..self.params.repetitions {
            let key = fam.key(l, q);
            let l = l as u32;
            out.extend(
                self.buckets
                    .range((l, key, 0)..=(l, key, u32::MAX))
                    .map(|&(_, _, i)| i as usize),
            );
        }
        out.sort_unstable();
        out.dedup();
    }

    /// Contents of the single bucket `q` hashes to in table `l`, ascending.
    pub fn bucket(&self, l: usize, q: &[f64]) -> Vec<usize> {
        let Some(fam) = &self.family else {
            return Vec::new();
        };
        if l >= self.params.repetitions || self.stored == 0 {
            return Vec::new();
        }
        let key = fam.key(l, q);
        let l = l as u32;
        self.buckets
            .range((l, key, 0)..=(l, key, u32::MAX))
            .map(|&(_, _, i)| i as usize)
            .collect()
    }

    /// Moves `index` from the buckets of `old_point` to those of `new_point`.
    ///
    /// Fails without touching the table if `index` is missing from any bucket
    /// `old_point` hashes to.
    pub fn update(&mut self, new_point: &[f64], old_point: &[f64], index: usize) -> Result<()> {
        let idx = to_u32(index)?;
        let Some(fam) = &self.family else {
            return Err(KdeError::Consistency(format!("index {index} not stored in an empty table")));
        };
        for p in [new_point, old_point] {
            if p.len() != fam.dim() {
                return Err(KdeError::Dimension { expected: fam.dim(), got: p.len() });
            }
        }
        let reps = self.params.repetitions;
        let old_keys: Vec<u64> = (0..reps).map(|l| fam.key(l, old_point)).collect();
        for (l, &key) in old_keys.iter().enumerate() {
            if !self.buckets.contains(&(l as u32, key, idx)) {
                return Err(KdeError::Consistency(format!(
                    "index {index} not found in its bucket of table {l}"
                )));
            }
        }
        if new_point == old_point {
            return Ok(());
        }
        let new_keys: Vec<u64> = (0..reps).map(|l| fam.key(l, new_point)).collect();
        for (l, (&old, &new)) in old_keys.iter().zip(&new_keys).enumerate() {
            if old != new {
                self.buckets.remove(&(l as u32, old, idx));
                self.buckets.insert((l as u32, new, idx));
            }
        }
        Ok(())
    }

    /// Checks that `index` sits in every bucket `point` hashes to.
    pub fn verify_stored(&self, point: &[f64], index: usize) -> Result<()> {
        let idx = to_u32(index)?;
        let Some(fam) = &self.family else {
            return Err(KdeError::Consistency(format!("index {index} not stored in an empty table")));
        };
        if point.len() != fam.dim() {
            return Err(KdeError::Dimension { expected: fam.dim(), got: point.len() });
        }
        for l in 0..self.params.repetitions {
            if !self.buckets.contains(&(l as u32, fam.key(l, point), idx)) {
                return Err(KdeError::Consistency(format!(
                    "index {index} not found in its bucket of table {l}"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, index: usize) -> bool {
        let Ok(idx) = to_u32(index) else { return false };
        self.buckets.iter().any(|&(l, _, i)| l == 0 && i == idx)
    }

    /// Bucket sizes of table `l`, in key order.
    pub fn bucket_sizes(&self, l: usize) -> Vec<usize> {
        let l = l as u32;
        let mut sizes: Vec<usize> = Vec::new();
        let mut last = None;
        for &(_, key, _) in self.buckets.range((l, 0, 0)..=(l, u64::MAX, u32::MAX)) {
            if last == Some(key) {
                *sizes.last_mut().unwrap() += 1;
            } else {
                sizes.push(1);
                last = Some(key);
            }
        }
        sizes
    }

    /// Raw `(table, key, index)` entries in ascending order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, u64, u32)> + '_ {
        self.buckets.iter().copied()
    }

    /// Reassembles a table from stored entries; hash functions are redrawn from `seed`.
    pub(crate) fn from_entries(
        dim: usize,
        params: LshParams,
        seed: u64,
        entries: Vec<Entry>,
    ) -> Result<Self> {
        params.validate()?;
        let buckets: BTreeSet<Entry> = entries.into_iter().collect();
        let stored = buckets.iter().filter(|e| e.0 == 0).count();
        for l in 0..params.repetitions as u32 {
            let count = buckets.range((l, 0, 0)..=(l, u64::MAX, u32::MAX)).count();
            if count != stored {
                return Err(KdeError::Snapshot(format!(
                    "table {l} holds {count} entries, expected {stored}"
                )));
            }
        }
        if buckets.iter().any(|e| e.0 as usize >= params.repetitions) {
            return Err(KdeError::Snapshot("entry refers to a missing table".into()));
        }
        let family = (stored > 0).then(|| HashFamily::draw(dim, &params, seed));
        Ok(Self {
            params,
            seed,
            family,
            buckets,
            stored,
        })
    }
}

fn to_u32(index: usize) -> Result<u32> {
    u32::try_from(index).map_err(|_| KdeError::Parameter(format!("index {index} exceeds u32 range")))
}
