//! Radial kernels and geometric weight levels.
//!
//! A kernel here is a function of distance only, `f(z)` with `f(0) = 1`,
//! strictly decreasing towards zero. Both supported kernels have a closed-form
//! inverse, which is what the level schedule uses to turn weight thresholds
//! `2^-r` into distance thresholds.

use std::fmt;
use std::str::FromStr;

use crate::error::{param_err, KdeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `exp(-(z / bw)^2)`
    Gaussian,
    /// `exp(-z / bw)`
    Exponential,
}

impl KernelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Exponential => "exponential",
        }
    }

    pub(crate) fn tag(&self) -> u8 {
        match self {
            KernelKind::Gaussian => 0,
            KernelKind::Exponential => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(KernelKind::Gaussian),
            1 => Some(KernelKind::Exponential),
            _ => None,
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = KdeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(KernelKind::Gaussian),
            "exponential" | "laplace" => Ok(KernelKind::Exponential),
            other => param_err(format!("unknown kernel kind '{other}'")),
        }
    }
}

/// A radial kernel with its bandwidth and cached Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    kind: KernelKind,
    bandwidth: f64,
    lipschitz_const: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return param_err(format!("bandwidth must be positive and finite, got {bandwidth}"));
        }
        let lipschitz_const = match kind {
            // |d/dz exp(-(z/h)^2)| = (2z/h^2) exp(-(z/h)^2), maximal at z = h/sqrt(2)
            KernelKind::Gaussian => std::f64::consts::SQRT_2 * (-0.5f64).exp() / bandwidth,
            // |d/dz exp(-z/h)| = exp(-z/h)/h, maximal at z = 0
            KernelKind::Exponential => 1.0 / bandwidth,
        };
        Ok(Self {
            kind,
            bandwidth,
            lipschitz_const,
        })
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        Self::new(KernelKind::Gaussian, bandwidth)
    }

    pub fn exponential(bandwidth: f64) -> Result<Self> {
        Self::new(KernelKind::Exponential, bandwidth)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Upper bound on `|d f / dz|` over `z >= 0`.
    pub fn lipschitz_const(&self) -> f64 {
        self.lipschitz_const
    }

    /// Kernel value at distance `dist`.
    pub fn eval(&self, dist: f64) -> Result<f64> {
        if !(dist >= 0.0) {
            return param_err(format!("distance must be nonnegative, got {dist}"));
        }
        Ok(self.eval_unchecked(dist))
    }

    /// Kernel value without the range check; `dist` must be nonnegative.
    #[inline]
    pub fn eval_unchecked(&self, dist: f64) -> f64 {
        let t = dist / self.bandwidth;
        match self.kind {
            KernelKind::Gaussian => (-t * t).exp(),
            KernelKind::Exponential => (-t).exp(),
        }
    }

    /// Kernel value from a squared distance, avoiding a square root for the Gaussian.
    #[inline]
    pub fn eval_sq(&self, dist_sq: f64) -> f64 {
        match self.kind {
            KernelKind::Gaussian => (-dist_sq / (self.bandwidth * self.bandwidth)).exp(),
            KernelKind::Exponential => (-dist_sq.sqrt() / self.bandwidth).exp(),
        }
    }

    /// Kernel value between two points.
    #[inline]
    pub fn eval_points(&self, x: &[f64], q: &[f64]) -> f64 {
        self.eval_sq(squared_distance(x, q))
    }

    /// Distance at which the kernel takes the value `weight`.
    pub fn invert(&self, weight: f64) -> Result<f64> {
        if !(weight > 0.0 && weight <= 1.0) {
            return param_err(format!("weight must lie in (0, 1], got {weight}"));
        }
        let log_inv = (1.0 / weight).ln();
        Ok(match self.kind {
            KernelKind::Gaussian => self.bandwidth * log_inv.sqrt(),
            KernelKind::Exponential => self.bandwidth * log_inv,
        })
    }
}

#[inline]
pub fn squared_distance(x: &[f64], q: &[f64]) -> f64 {
    x.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
pub fn distance(x: &[f64], q: &[f64]) -> f64 {
    squared_distance(x, q).sqrt()
}

/// Geometric weight level of a kernel weight.
///
/// Level `r` in `1..=levels` holds weights in `(2^-r, 2^-r+1]`; everything at or
/// below `2^-levels` falls into the tail level `levels + 1`.
pub fn weight_level_of(weight: f64, levels: u32) -> Result<u32> {
    if !(0.0..=1.0).contains(&weight) {
        return param_err(format!("weight must lie in [0, 1], got {weight}"));
    }
    if levels == 0 {
        return param_err("level count must be positive");
    }
    Ok(level_unchecked(weight, levels))
}

#[inline]
pub(crate) fn level_unchecked(weight: f64, levels: u32) -> u32 {
    if weight <= pow2_neg(levels) {
        return levels + 1;
    }
    let mut r = ((-weight.log2()).floor() as i64 + 1).clamp(1, levels as i64) as u32;
    // log2 may be off by one ulp at exact powers of two; settle against exact bounds
    while r > 1 && weight > pow2_neg(r - 1) {
        r -= 1;
    }
    while r < levels && weight <= pow2_neg(r) {
        r += 1;
    }
    r
}

#[inline]
pub(crate) fn pow2_neg(r: u32) -> f64 {
    2f64.powi(-(r as i32))
}
