//! Median ensembles of independently seeded structures.
//!
//! Each member answers a fixed query correctly with constant probability; the
//! median of `L` members is correct with probability `1 - exp(-Omega(L))`. Sizing
//! `L` against a union bound over an `eps0`-net of the query domain, with
//! `eps0 = eps * tau / lipschitz`, makes the answer correct for every query at
//! once, so adaptively chosen queries gain nothing. The net itself is never
//! built; only its cardinality bound `(10 / eps0)^d` enters the size.

use crate::config::KdeConfig;
use crate::error::{param_err, KdeError, Result};
use crate::kde::DynamicKde;
use crate::kernel::KernelSpec;
use crate::points::PointSet;
use crate::rng::{self, Stream};
use crate::stats::lower_median;

/// `ceil(c_boost * (d ln(10 lipschitz / (eps tau)) + ln(1 / delta)))`, at least 1.
pub fn ensemble_size(d: usize, epsilon: f64, tau: f64, delta: f64, lipschitz: f64, c_boost: f64) -> Result<usize> {
    if d == 0 {
        return param_err("dimension must be positive");
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return param_err(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return param_err(format!("tau must lie in (0, 1], got {tau}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return param_err(format!("delta must lie in (0, 1), got {delta}"));
    }
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return param_err(format!("lipschitz constant must be positive, got {lipschitz}"));
    }
    if !(c_boost > 0.0 && c_boost.is_finite()) {
        return param_err(format!("boost constant must be positive, got {c_boost}"));
    }
    let log_net = d as f64 * (10.0 * lipschitz / (epsilon * tau)).ln();
    let raw = (c_boost * (log_net + (1.0 / delta).ln())).ceil();
    Ok(if raw >= 1.0 { raw as usize } else { 1 })
}

/// Seed of member `j`. Member 0 reuses the master seed so that a one-member
/// ensemble is the plain structure.
pub fn member_seed(master: u64, j: usize) -> u64 {
    if j == 0 {
        master
    } else {
        rng::derive(master, Stream::Member, &[j as u64])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustEnsemble {
    members: Vec<DynamicKde>,
    tau: f64,
    delta: f64,
    poisoned: bool,
}

impl RobustEnsemble {
    /// Default failure probability used when none is given.
    pub const DEFAULT_DELTA: f64 = 0.05;

    /// Builds `size` members over `points`. The density floor `tau` defaults to
    /// `f_kde / 4`.
    pub fn initialize(
        kernel: KernelSpec,
        points: &PointSet,
        epsilon: f64,
        f_kde: f64,
        master_seed: u64,
        config: KdeConfig,
        size: usize,
    ) -> Result<Self> {
        if size == 0 {
            return param_err("ensemble needs at least one member");
        }
        let members = (0..size)
            .map(|j| DynamicKde::initialize(kernel, points.clone(), epsilon, f_kde, member_seed(master_seed, j), config))
            .collect::<Result<Vec<_>>>()?;
        Self::from_members(members)
    }

    /// Like [`initialize`](Self::initialize) with the size given by [`ensemble_size`]
    /// for the dataset dimension, the kernel's Lipschitz constant and the config's
    /// boost constant.
    pub fn sized(
        kernel: KernelSpec,
        points: &PointSet,
        epsilon: f64,
        f_kde: f64,
        master_seed: u64,
        config: KdeConfig,
        tau: f64,
        delta: f64,
    ) -> Result<Self> {
        let size = ensemble_size(points.dim(), epsilon, tau, delta, kernel.lipschitz_const(), config.boost_constant)?;
        Self::initialize(kernel, points, epsilon, f_kde, master_seed, config, size)?
            .with_tau(tau)?
            .with_delta(delta)
    }

    /// Wraps existing members, which must share kernel, accuracy, `f_kde`, config
    /// and dataset shape.
    pub fn from_members(members: Vec<DynamicKde>) -> Result<Self> {
        let Some(first) = members.first() else {
            return param_err("ensemble needs at least one member");
        };
        for m in &members[1..] {
            if m.kernel() != first.kernel()
                || m.epsilon() != first.epsilon()
                || m.f_kde() != first.f_kde()
                || m.config() != first.config()
                || m.n() != first.n()
                || m.dim() != first.dim()
            {
                return param_err("ensemble members disagree on kernel, parameters or dataset shape");
            }
        }
        let mut seeds: Vec<u64> = members.iter().map(DynamicKde::seed).collect();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return param_err("ensemble member seeds must be distinct");
        }
        let tau = first.f_kde() / 4.0;
        Ok(Self {
            members,
            tau,
            delta: Self::DEFAULT_DELTA,
            poisoned: false,
        })
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return param_err(format!("tau must lie in (0, 1], got {tau}"));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return param_err(format!("delta must lie in (0, 1), got {delta}"));
        }
        self.delta = delta;
        Ok(self)
    }

    pub fn members(&self) -> &[DynamicKde] {
        &self.members
    }

    /// `L_est`
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.members[0].epsilon()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }

    /// Net radius `eps0 = eps * tau / lipschitz`.
    pub fn epsilon_net_radius(&self) -> f64 {
        self.epsilon() * self.tau / self.members[0].kernel().lipschitz_const()
    }

    /// Size [`ensemble_size`] recommends for this ensemble's parameters.
    pub fn recommended_size(&self) -> Result<usize> {
        let m = &self.members[0];
        ensemble_size(
            self.dim(),
            self.epsilon(),
            self.tau,
            self.delta,
            m.kernel().lipschitz_const(),
            m.config().boost_constant,
        )
    }

    /// Estimates of every member, in member order.
    pub fn member_estimates(&self, q: &[f64]) -> Result<Vec<f64>> {
        if self.poisoned {
            return Err(KdeError::Poisoned);
        }
        self.members.iter().map(|m| m.estimate(q)).collect()
    }

    /// Lower median of the member estimates.
    pub fn robust_query(&self, q: &[f64]) -> Result<f64> {
        let estimates = self.member_estimates(q)?;
        Ok(lower_median(&estimates))
    }

    /// Applies the replacement to every member.
    ///
    /// Arguments are checked before any member changes. If a member still fails
    /// after others were updated the ensemble is poisoned and refuses queries.
    pub fn robust_update(&mut self, point: &[f64], index: usize) -> Result<()> {
        if self.poisoned {
            return Err(KdeError::Poisoned);
        }
        let first = &self.members[0];
        if index >= first.n() {
            return param_err(format!("index {index} out of range for {} points", first.n()));
        }
        if point.len() != first.dim() {
            return Err(KdeError::Dimension { expected: first.dim(), got: point.len() });
        }
        if point.iter().any(|c| !c.is_finite()) {
            return param_err("coordinates must be finite");
        }
        for (j, m) in self.members.iter_mut().enumerate() {
            if let Err(e) = m.update(point, index) {
                if j > 0 {
                    self.poisoned = true;
                }
                return Err(e);
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn poison(&mut self) {
        self.poisoned = true;
    }
}
