//! Ground truth and statistical verification.
//!
//! [`exact_kde`] is the brute-force oracle every estimate is compared against.
//! The `run_*` functions are Monte Carlo checks over independently seeded
//! structures; they separate a broken precondition
//! ([`HarnessError::Configuration`]) from a failed assertion (`pass == false`).

mod datasets;
mod report;
mod trials;

pub use datasets::{DatasetSpec, Generator};
pub use report::{summary_csv, TestOutcome};
pub use trials::{
    run_recovery_test, run_unbiasedness_test, run_update_equivalence_test, run_variance_test,
    HarnessError, RecoveryProbe, TrialSetup, TrialStats,
};

use crate::error::{param_err, Result};
use crate::kernel::{distance, level_unchecked, KernelKind, KernelSpec};
use crate::points::PointSet;
use crate::stats::order_free_sum;

/// `f*(q) = (1/n) sum_i f(|x_i - q|)`, summed in a fixed order with compensation
/// so that the result does not depend on the order of `points`.
pub fn exact_kde(points: &PointSet, kernel: &KernelSpec, q: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return param_err("exact density of an empty dataset");
    }
    if q.len() != points.dim() {
        return Err(crate::KdeError::Dimension { expected: points.dim(), got: q.len() });
    }
    let mut terms: Vec<f64> = points.iter().map(|x| kernel.eval_unchecked(distance(x, q))).collect();
    Ok(order_free_sum(&mut terms) / points.len() as f64)
}

/// Whether `|f*(q1) - f*(q2)| <= L |q1 - q2| + 1e-12` for the kernel's Lipschitz constant `L`.
pub fn check_lipschitz(points: &PointSet, kernel: &KernelSpec, q1: &[f64], q2: &[f64]) -> Result<bool> {
    let gap = (exact_kde(points, kernel, q1)? - exact_kde(points, kernel, q2)?).abs();
    Ok(gap <= kernel.lipschitz_const() * distance(q1, q2) + 1e-12)
}

/// Sizes `|L_1(q)|, ..., |L_{R+1}(q)|` of the geometric weight levels.
pub fn level_sizes(points: &PointSet, kernel: &KernelSpec, q: &[f64], levels: u32) -> Vec<usize> {
    let mut sizes = vec![0; levels as usize + 1];
    for x in points.iter() {
        let w = kernel.eval_unchecked(distance(x, q));
        sizes[level_unchecked(w, levels) as usize - 1] += 1;
    }
    sizes
}

/// Bandwidth at which the exact density at `q` equals `target`, found by bisection.
///
/// The density is increasing in the bandwidth, from `|{x = q}| / n` at zero to 1.
pub fn tune_bandwidth(points: &PointSet, kind: KernelKind, q: &[f64], target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return param_err(format!("target density must lie in (0, 1), got {target}"));
    }
    let density = |bw: f64| -> Result<f64> { exact_kde(points, &KernelSpec::new(kind, bw)?, q) };
    let (mut lo, mut hi) = (1e-6, 1.0);
    while density(hi)? < target {
        hi *= 2.0;
        if hi > 1e12 {
            return param_err("could not bracket the target density");
        }
    }
    if density(lo)? > target {
        return param_err("target density below the mass of points equal to q");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if density(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
