//! Rate-profile beamforming for general (non-reciprocal) channels.
//!
//! A boundary point of the rate region is fixed by a profile `kappa`: the
//! rates are `R1 = kappa r` and `R2 = (1 - kappa) r`, and the largest
//! achievable `r` is found by bisection. Each bisection step asks whether the
//! SNR targets implied by `r` can be met, which after dropping the rank-one
//! condition on `X = w w^H` is a semidefinite program:
//!
//! * sum power: minimize `tr(D X)` subject to both SNR constraints and
//!   compare against `P_R`;
//! * per-relay power: test feasibility of the SNR constraints together with
//!   `X_ii <= p_i / d_i`.
//!
//! Sum-power optima are reduced to an exactly equivalent rank-one matrix.
//! Per-relay optima are rounded to a beamformer by phase randomization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{
    effective_channels, rate_pair, BeamVector, ChannelRealization, EffectiveChannels, RatePoint,
    RelayConstraint, SystemConfig,
};
use crate::cmat::{self, CMatrix};
use crate::error::{Error, Result};
use crate::math;
use crate::sampling::rng_from_seed;
use crate::sdp::{self, HermitianTraceSdp, SdpOutcome, SdpStatus, TraceConstraint};

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_CANDIDATES: usize = 1000;
pub const DEFAULT_MAX_STEPS: usize = 64;
/// Inside the sum-power bisection the power minimization is capped at this
/// multiple of `P_R`.
pub const POWER_CAP_FACTOR: f64 = 2.0;

/// Split `[kappa, 1 - kappa]` of the sum rate between the two directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateProfile {
    kappa: f64,
}

impl RateProfile {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::parameter(format!("profile must lie in [0, 1], got {kappa}")));
        }
        Ok(RateProfile { kappa })
    }

    pub fn kappa(self) -> f64 {
        self.kappa
    }

    pub fn kappa_bar(self) -> f64 {
        1.0 - self.kappa
    }

    /// `min(R1 / kappa, R2 / (1 - kappa))`, ignoring a direction whose share
    /// is zero.
    pub fn profile_rate(self, p: RatePoint) -> f64 {
        let a = if self.kappa > 0.0 { p.r1 / self.kappa } else { f64::INFINITY };
        let b = if self.kappa_bar() > 0.0 { p.r2 / self.kappa_bar() } else { f64::INFINITY };
        a.min(b)
    }
}

/// Minimum SNRs `(gamma1, gamma2)` at S1 and S2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrTargets {
    pub gamma1: f64,
    pub gamma2: f64,
}

pub fn snr_targets(profile: RateProfile, r: f64) -> Result<SnrTargets> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::parameter(format!("rate must be nonnegative, got {r}")));
    }
    Ok(SnrTargets {
        gamma1: math::exp2(2.0 * profile.kappa() * r) - 1.0,
        gamma2: math::exp2(2.0 * profile.kappa_bar() * r) - 1.0,
    })
}

/// Upper bound `2 r~` on the sum rate `r`, where `r~` is the better of the
/// two one-way rates when each direction may use the whole relay budget.
pub fn rate_upper_bound(eff: &EffectiveChannels, cfg: &SystemConfig) -> f64 {
    let p_r = cfg.relay_constraint.total();
    let one_way = |f: &[Complex64], a: &[f64], sigma: f64| -> f64 {
        (0..f.len())
            .map(|i| {
                let den = sigma * eff.d[i] / p_r + a[i];
                if den > 0.0 {
                    f[i].norm_sqr() / den
                } else {
                    0.0
                }
            })
            .sum()
    };
    let snr1 = cfg.p_s2 * one_way(&eff.f2, &eff.a1, cfg.sigma_s1);
    let snr2 = cfg.p_s1 * one_way(&eff.f1, &eff.a2, cfg.sigma_s2);
    2.0 * math::half_log_rate(snr1.max(snr2))
}

/// The two SNR requirements as `tr(B_k X) >= bound_k`, S1 first.
pub fn snr_constraints(eff: &EffectiveChannels, cfg: &SystemConfig, targets: SnrTargets) -> [TraceConstraint; 2] {
    let b1 = cmat::conj_outer(&eff.f2).map(|z| z * cfg.p_s2) - cmat::real_diag(&eff.a1).map(|z| z * targets.gamma1);
    let b2 = cmat::conj_outer(&eff.f1).map(|z| z * cfg.p_s1) - cmat::real_diag(&eff.a2).map(|z| z * targets.gamma2);
    [
        TraceConstraint::at_least(b1, targets.gamma1 * cfg.sigma_s1),
        TraceConstraint::at_least(b2, targets.gamma2 * cfg.sigma_s2),
    ]
}

fn check_targets(targets: SnrTargets) -> Result<()> {
    if !(targets.gamma1 >= 0.0 && targets.gamma2 >= 0.0) || !targets.gamma1.is_finite() || !targets.gamma2.is_finite() {
        return Err(Error::parameter("SNR targets must be finite and nonnegative"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum SumPowerResult {
    Achievable { power: f64, x: CMatrix },
    Infeasible,
}

/// Least relay sum power `tr(D X)` meeting both targets.
pub fn min_sum_power(eff: &EffectiveChannels, cfg: &SystemConfig, targets: SnrTargets, tol: f64) -> Result<SumPowerResult> {
    min_sum_power_capped(eff, cfg, targets, None, tol)
}

/// [`min_sum_power`] restricted to `tr(D X) <= cap`; a minimum above the cap
/// is reported as infeasible. The cap keeps the program bounded when the
/// targets are barely reachable and the true minimum is huge.
pub fn min_sum_power_capped(
    eff: &EffectiveChannels,
    cfg: &SystemConfig,
    targets: SnrTargets,
    cap: Option<f64>,
    tol: f64,
) -> Result<SumPowerResult> {
    check_targets(targets)?;
    let k = eff.len();
    if targets.gamma1 == 0.0 && targets.gamma2 == 0.0 {
        return Ok(SumPowerResult::Achievable { power: 0.0, x: CMatrix::zeros(k, k) });
    }
    let d = cmat::real_diag(&eff.d);
    let [c1, c2] = snr_constraints(eff, cfg, targets);
    let mut problem = HermitianTraceSdp::minimize(d.clone()).subject_to(c1).subject_to(c2);
    if let Some(cap) = cap {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::parameter("power cap must be positive and finite"));
        }
        problem = problem.subject_to(TraceConstraint::at_most(d, cap));
    }
    let out = sdp::solve(&problem, tol)?;
    match out.status {
        SdpStatus::Optimal => Ok(SumPowerResult::Achievable { power: out.objective_value, x: out.x_matrix }),
        SdpStatus::Infeasible => Ok(SumPowerResult::Infeasible),
        s => Err(Error::NumericalFailure(format!("power minimization ended with {s:?}"))),
    }
}

/// Feasibility of both targets under the per-relay limits `X_ii <= p_i / d_i`.
pub fn feasibility_individual(eff: &EffectiveChannels, cfg: &SystemConfig, targets: SnrTargets, tol: f64) -> Result<SdpOutcome> {
    check_targets(targets)?;
    let p = match &cfg.relay_constraint {
        RelayConstraint::Individual(p) => p,
        RelayConstraint::SumPower(_) => {
            return Err(Error::ContractViolation("per-relay feasibility needs per-relay limits".into()))
        }
    };
    let bounds: Vec<f64> = p.iter().zip(&eff.d).map(|(p, d)| p / d).collect();
    let [c1, c2] = snr_constraints(eff, cfg, targets);
    let problem = HermitianTraceSdp::feasibility(eff.len())
        .subject_to(c1)
        .subject_to(c2)
        .with_diag_bounds(bounds);
    sdp::solve(&problem, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionConfig {
    /// Stop once the bracket is narrower than this (bits).
    pub epsilon: f64,
    /// Initial upper end of the bracket; derived from the channels if absent.
    pub r_max: Option<f64>,
    pub max_steps: usize,
    pub sdp_tol: f64,
    /// Number of random candidates when rounding per-relay solutions.
    pub candidates: usize,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        BisectionConfig {
            epsilon: DEFAULT_EPSILON,
            r_max: None,
            max_steps: DEFAULT_MAX_STEPS,
            sdp_tol: sdp::DEFAULT_TOLERANCE,
            candidates: DEFAULT_CANDIDATES,
        }
    }
}

impl BisectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::parameter("bisection tolerance must be positive"));
        }
        if let Some(r) = self.r_max {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::parameter("rate upper bound must be positive and finite"));
            }
        }
        if self.candidates == 0 {
            return Err(Error::parameter("at least one randomization candidate is needed"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionStep {
    pub r: f64,
    pub feasible: bool,
    /// Minimum relay power at this rate (sum-power path only).
    pub power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionResult {
    /// Largest rate shown feasible.
    pub r_star: f64,
    /// Relaxed optimizer at `r_star`.
    pub x: CMatrix,
    /// Final bracket `[r_star, r_up]`.
    pub r_up: f64,
    pub r_max: f64,
    pub trace: Vec<BisectionStep>,
}

impl BisectionResult {
    /// Number of SDP solves performed.
    pub fn solves(&self) -> usize {
        self.trace.len()
    }
}

fn bisect<F>(k: usize, r_max: f64, bis: &BisectionConfig, mut probe: F) -> Result<BisectionResult>
where
    F: FnMut(f64) -> Result<(bool, Option<f64>, Option<CMatrix>)>,
{
    let mut result = BisectionResult {
        r_star: 0.0,
        x: CMatrix::zeros(k, k),
        r_up: r_max,
        r_max,
        trace: Vec::new(),
    };
    if r_max <= 0.0 {
        result.r_up = 0.0;
        return Ok(result);
    }
    while result.r_up - result.r_star >= bis.epsilon && result.trace.len() < bis.max_steps {
        let r = 0.5 * (result.r_star + result.r_up);
        let (feasible, power, x) = probe(r)?;
        result.trace.push(BisectionStep { r, feasible, power });
        if feasible {
            result.r_star = r;
            if let Some(x) = x {
                result.x = x;
            }
        } else {
            result.r_up = r;
        }
    }
    Ok(result)
}

fn resolve_r_max(eff: &EffectiveChannels, cfg: &SystemConfig, bis: &BisectionConfig) -> f64 {
    bis.r_max.unwrap_or_else(|| rate_upper_bound(eff, cfg))
}

/// Largest sum rate on the profile whose minimum relay power fits `P_R`.
pub fn bisect_sum_power(eff: &EffectiveChannels, cfg: &SystemConfig, profile: RateProfile, bis: &BisectionConfig) -> Result<BisectionResult> {
    bis.validate()?;
    let p_r = match cfg.relay_constraint {
        RelayConstraint::SumPower(p) => p,
        RelayConstraint::Individual(_) => {
            return Err(Error::ContractViolation("sum-power bisection needs a sum-power limit".into()))
        }
    };
    let budget = p_r * (1.0 + 10.0 * bis.sdp_tol);
    bisect(eff.len(), resolve_r_max(eff, cfg, bis), bis, |r| {
        match min_sum_power_capped(eff, cfg, snr_targets(profile, r)?, Some(POWER_CAP_FACTOR * p_r), bis.sdp_tol)? {
            SumPowerResult::Achievable { power, x } if power <= budget => Ok((true, Some(power), Some(x))),
            SumPowerResult::Achievable { power, .. } => Ok((false, Some(power), None)),
            SumPowerResult::Infeasible => Ok((false, None, None)),
        }
    })
}

/// Largest sum rate on the profile that is feasible under per-relay limits.
pub fn bisect_individual(eff: &EffectiveChannels, cfg: &SystemConfig, profile: RateProfile, bis: &BisectionConfig) -> Result<BisectionResult> {
    bis.validate()?;
    if cfg.relay_constraint.is_sum_power() {
        return Err(Error::ContractViolation("per-relay bisection needs per-relay limits".into()));
    }
    bisect(eff.len(), resolve_r_max(eff, cfg, bis), bis, |r| {
        let out = feasibility_individual(eff, cfg, snr_targets(profile, r)?, bis.sdp_tol)?;
        match out.status {
            SdpStatus::Optimal => Ok((true, None, Some(out.x_matrix))),
            SdpStatus::Infeasible => Ok((false, None, None)),
            s => Err(Error::NumericalFailure(format!("feasibility test at r = {r} ended with {s:?}"))),
        }
    })
}

/// Columns `sqrt(lambda_i) v_i` for the eigenvalues above `rel * lambda_max`.
fn psd_factor(x: &CMatrix, rel: f64) -> CMatrix {
    let k = x.nrows();
    let eig = SymmetricEigen::new(cmat::hermitian_part(x));
    let top = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    if top <= 0.0 {
        return CMatrix::zeros(k, 0);
    }
    let keep: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] > rel * top).collect();
    let mut v = CMatrix::zeros(k, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let s = math::sqrt(eig.eigenvalues[i]);
        for r in 0..k {
            v[(r, col)] = eig.eigenvectors[(r, i)] * s;
        }
    }
    v
}

/// Coordinates of an `r x r` Hermitian matrix in an orthonormal real basis
/// of `r^2` elements: diagonal units, then symmetric and antisymmetric
/// off-diagonal pairs.
fn hermitian_basis(r: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(r * r);
    let h = core::f64::consts::FRAC_1_SQRT_2;
    for i in 0..r {
        let mut e = CMatrix::zeros(r, r);
        e[(i, i)] = Complex64::new(1.0, 0.0);
        basis.push(e);
    }
    for i in 0..r {
        for j in (i + 1)..r {
            let mut e = CMatrix::zeros(r, r);
            e[(i, j)] = Complex64::new(h, 0.0);
            e[(j, i)] = Complex64::new(h, 0.0);
            basis.push(e);
            let mut e = CMatrix::zeros(r, r);
            e[(i, j)] = Complex64::new(0.0, h);
            e[(j, i)] = Complex64::new(0.0, -h);
            basis.push(e);
        }
    }
    basis
}

/// A nonzero Hermitian `Delta` with `tr(M_j Delta) = 0` for every `M_j`.
fn null_direction(mats: &[CMatrix], r: usize) -> CMatrix {
    let basis = hermitian_basis(r);
    let dim = basis.len();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for m in mats {
        let mut v = DVector::from_fn(dim, |k, _| cmat::trace_product(m, &basis[k]));
        for q in &rows {
            let c = v.dot(q);
            v -= q * c;
        }
        let n = v.norm();
        if n > 1e-13 * (1.0 + cmat::max_abs(m)) {
            rows.push(v / n);
        }
    }
    // Project every unit vector off the constraint rows and keep the largest
    // residual; with at most three rows and r^2 >= 4 one is always nonzero.
    let mut best = DVector::zeros(dim);
    let mut best_norm = -1.0;
    for k in 0..dim {
        let mut v = DVector::zeros(dim);
        v[k] = 1.0;
        for q in &rows {
            let c = v.dot(q);
            v -= q * c;
        }
        for q in &rows {
            let c = v.dot(q);
            v -= q * c;
        }
        let n = v.norm();
        if n > best_norm {
            best_norm = n;
            best = v;
        }
    }
    let mut delta = CMatrix::zeros(r, r);
    for (k, e) in basis.iter().enumerate() {
        delta += e.map(|z| z * best[k]);
    }
    delta
}

/// Eigenvalue of largest magnitude, preferring the negative one on ties.
fn extreme_eigenvalue(m: &CMatrix) -> f64 {
    let vals = cmat::hermitian_eigenvalues(m);
    let lo = vals[0];
    let hi = vals[vals.len() - 1];
    if -lo >= hi {
        lo
    } else {
        hi
    }
}

/// Rank-reduction threshold on `X`'s spectrum. Small enough that dropping
/// the discarded part cannot move a preserved trace by a visible amount.
const RANK_THRESHOLD: f64 = 1e-14;

/// Rank-one matrix with the same traces against `constraints` and
/// `objective` as `x`, returned as the final psd matrix.
pub fn rank_one_reduce_matrix(x: &CMatrix, constraints: &[CMatrix], objective: &CMatrix) -> Result<CMatrix> {
    let w = rank_one_reduce(x, constraints, objective)?;
    Ok(cmat::outer(&w.w))
}

/// Beamformer `w` with `w w^H` matching the traces of `x` against every
/// listed matrix. Works for at most three matrices in total.
pub fn rank_one_reduce(x: &CMatrix, constraints: &[CMatrix], objective: &CMatrix) -> Result<BeamVector> {
    let k = x.nrows();
    if x.ncols() != k {
        return Err(Error::dim(k, x.ncols()));
    }
    if constraints.len() + 1 > 3 {
        return Err(Error::ContractViolation(format!(
            "rank reduction preserves at most 3 traces, got {}",
            constraints.len() + 1
        )));
    }
    for m in constraints.iter().chain(core::iter::once(objective)) {
        if m.nrows() != k || m.ncols() != k {
            return Err(Error::dim(k, m.nrows()));
        }
    }
    let mut v = psd_factor(x, RANK_THRESHOLD);
    if v.ncols() == 0 {
        return Ok(BeamVector::zeros(k));
    }
    let mats: Vec<&CMatrix> = constraints.iter().chain(core::iter::once(objective)).collect();
    while v.ncols() > 1 {
        let r = v.ncols();
        let vh = v.adjoint();
        let reduced: Vec<CMatrix> = mats.iter().map(|m| &vh * *m * &v).collect();
        let delta = null_direction(&reduced, r);
        let t = -1.0 / extreme_eigenvalue(&delta);
        let y = CMatrix::identity(r, r) + delta.map(|z| z * t);
        // One eigenvalue of y is zero up to rounding; refactor and drop it.
        let eig = SymmetricEigen::new(cmat::hermitian_part(&y));
        let top = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let keep: Vec<usize> = order
            .into_iter()
            .take(r - 1)
            .filter(|&i| eig.eigenvalues[i] > 1e-12 * top)
            .collect();
        let mut factor = CMatrix::zeros(r, keep.len());
        for (col, &i) in keep.iter().enumerate() {
            let s = math::sqrt(eig.eigenvalues[i]);
            for row in 0..r {
                factor[(row, col)] = eig.eigenvectors[(row, i)] * s;
            }
        }
        v = &v * factor;
    }
    Ok(BeamVector::new(v.column(0).iter().copied().collect()))
}

/// Worst normalized shortfall of the SNR constraints at `w`; negative when
/// both hold with margin. Constraints with a zero target are ignored.
pub fn violation_score(w: &BeamVector, eff: &EffectiveChannels, cfg: &SystemConfig, targets: SnrTargets) -> f64 {
    let x = cmat::outer(&w.w);
    snr_constraints(eff, cfg, targets)
        .iter()
        .filter(|c| c.bound > 0.0)
        .map(|c| (c.bound - cmat::trace_product(&c.matrix, &x)) / c.bound)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Phases of the principal eigenvector of `x`.
fn principal_phases(x: &CMatrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(cmat::hermitian_part(x));
    let top = (0..x.nrows()).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    match top {
        Some(j) => eig.eigenvectors.column(j).iter().map(|z| z.arg()).collect(),
        None => Vec::new(),
    }
}

/// Best of `num_candidates` random-phase beamformers with amplitudes
/// `sqrt(X_ii)`, scored by [`violation_score`]. The beamformer carrying the
/// phases of the principal eigenvector of `X` is scored first, so a tight
/// relaxation is recovered exactly.
pub fn randomize_rank_one(
    x: &CMatrix,
    eff: &EffectiveChannels,
    cfg: &SystemConfig,
    targets: SnrTargets,
    num_candidates: usize,
    seed: u64,
) -> Result<BeamVector> {
    if num_candidates < 1 {
        return Err(Error::parameter("at least one randomization candidate is needed"));
    }
    let k = eff.len();
    if x.nrows() != k || x.ncols() != k {
        return Err(Error::dim(k, x.nrows()));
    }
    let amplitudes: Vec<f64> = (0..k).map(|i| math::sqrt(x[(i, i)].re.max(0.0))).collect();
    let mut rng = rng_from_seed(seed);
    let w = BeamVector::from_polar(&amplitudes, &principal_phases(x));
    let mut best = (violation_score(&w, eff, cfg, targets), w);
    let mut theta = vec![0.0; k];
    for _ in 0..num_candidates {
        for t in theta.iter_mut() {
            *t = rng.random::<f64>() * 2.0 * PI;
        }
        let w = BeamVector::from_polar(&amplitudes, &theta);
        let v = violation_score(&w, eff, cfg, targets);
        if v < best.0 {
            best = (v, w);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonreciprocalSolution {
    pub w: BeamVector,
    /// Rates actually achieved by `w`.
    pub rates: RatePoint,
    /// Relaxation optimum; an upper bound on the profile rate of any `w`.
    pub r_star: f64,
    pub bisection: BisectionResult,
}

/// Full pipeline for one profile: bisection, then rank-one reduction under
/// a sum-power limit or randomized rounding under per-relay limits.
pub fn solve_nonreciprocal(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    profile: RateProfile,
    bis: &BisectionConfig,
    seed: u64,
) -> Result<NonreciprocalSolution> {
    let eff = effective_channels(ch, cfg)?;
    let (bisection, w) = match cfg.relay_constraint {
        RelayConstraint::SumPower(_) => {
            let b = bisect_sum_power(&eff, cfg, profile, bis)?;
            let [c1, c2] = snr_constraints(&eff, cfg, snr_targets(profile, b.r_star)?);
            let w = rank_one_reduce(&b.x, &[c1.matrix, c2.matrix], &cmat::real_diag(&eff.d))?;
            (b, w)
        }
        RelayConstraint::Individual(_) => {
            let b = bisect_individual(&eff, cfg, profile, bis)?;
            let targets = snr_targets(profile, b.r_star)?;
            let w = randomize_rank_one(&b.x, &eff, cfg, targets, bis.candidates, seed)?;
            (b, w)
        }
    };
    let rates = rate_pair(&w, &eff, cfg)?;
    Ok(NonreciprocalSolution { w, rates, r_star: bisection.r_star, bisection })
}

/// `w^H M w` for each matrix; used to compare a beamformer against the
/// traces of a relaxed solution.
pub fn quadratic_values(w: &BeamVector, mats: &[CMatrix]) -> Vec<f64> {
    mats.iter().map(|m| cmat::quad_form(m, &w.w)).collect()
}

/// Spectrum of a Hermitian matrix in ascending order.
pub fn eigenvalues(x: &CMatrix) -> Vec<f64> {
    cmat::hermitian_eigenvalues(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{relay_powers, snr_pair};
    use crate::sampling::{complex_gaussian, gen_channels, ChannelProfile};

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn unit_setup(constraint: RelayConstraint) -> (ChannelRealization, SystemConfig, EffectiveChannels) {
        let ch = ChannelRealization::reciprocal(vec![one()], vec![one()]).unwrap();
        let cfg = SystemConfig::unit_noise(1, 1.0, 1.0, constraint);
        let eff = effective_channels(&ch, &cfg).unwrap();
        (ch, cfg, eff)
    }

    fn random_setup(k: usize, seed: u64, constraint: RelayConstraint) -> (ChannelRealization, SystemConfig, EffectiveChannels) {
        let ch = gen_channels(k, seed, ChannelProfile::Symmetric, false);
        let cfg = SystemConfig::unit_noise(k, 1.0, 1.0, constraint);
        let eff = effective_channels(&ch, &cfg).unwrap();
        (ch, cfg, eff)
    }

    fn profile(k: f64) -> RateProfile {
        RateProfile::new(k).unwrap()
    }

    #[test]
    fn target_examples() {
        let t = snr_targets(profile(0.5), 1.0).unwrap();
        assert!((t.gamma1 - 1.0).abs() < 1e-15 && (t.gamma2 - 1.0).abs() < 1e-15);
        let t = snr_targets(profile(0.3), 0.0).unwrap();
        assert_eq!((t.gamma1, t.gamma2), (0.0, 0.0));
        let t = snr_targets(profile(1.0), 2.0).unwrap();
        assert!((t.gamma1 - 15.0).abs() < 1e-12 && t.gamma2 == 0.0);
        assert!(snr_targets(profile(0.5), -0.1).is_err());
        assert!(RateProfile::new(1.5).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        let (_, cfg, eff) = unit_setup(RelayConstraint::SumPower(3.0));
        assert!((rate_upper_bound(&eff, &cfg) - 1.5f64.log2()).abs() < 1e-12);
        let z = Complex64::new(0.0, 0.0);
        let ch = ChannelRealization::reciprocal(vec![z, z], vec![z, z]).unwrap();
        let cfg = SystemConfig::unit_noise(2, 1.0, 1.0, RelayConstraint::SumPower(3.0));
        let eff = effective_channels(&ch, &cfg).unwrap();
        assert_eq!(rate_upper_bound(&eff, &cfg), 0.0);
    }

    #[test]
    fn min_power_trivial_and_infeasible() {
        let (_, cfg, eff) = unit_setup(RelayConstraint::SumPower(3.0));
        let zero = SnrTargets { gamma1: 0.0, gamma2: 0.0 };
        match min_sum_power(&eff, &cfg, zero, 1e-8).unwrap() {
            SumPowerResult::Achievable { power, x } => {
                assert_eq!(power, 0.0);
                assert_eq!(x, CMatrix::zeros(1, 1));
            }
            _ => panic!(),
        }
        let one_one = SnrTargets { gamma1: 1.0, gamma2: 1.0 };
        assert_eq!(min_sum_power(&eff, &cfg, one_one, 1e-8).unwrap(), SumPowerResult::Infeasible);
        assert!(min_sum_power(&eff, &cfg, SnrTargets { gamma1: -1.0, gamma2: 0.0 }, 1e-8).is_err());
    }

    #[test]
    fn unit_bisection_matches_hand_solution() {
        let (_, cfg, eff) = unit_setup(RelayConstraint::SumPower(3.0));
        let bis = BisectionConfig { epsilon: 1e-4, ..Default::default() };
        let res = bisect_sum_power(&eff, &cfg, profile(0.5), &bis).unwrap();
        assert!((res.r_star - 1.5f64.log2()).abs() < 1e-4);
        assert!(res.r_star <= 1.5f64.log2() + 1e-9);
    }

    #[test]
    fn zero_channels_give_zero_rate() {
        let z = Complex64::new(0.0, 0.0);
        let ch = ChannelRealization::reciprocal(vec![z, z], vec![z, z]).unwrap();
        let cfg = SystemConfig::unit_noise(2, 1.0, 1.0, RelayConstraint::SumPower(3.0));
        let eff = effective_channels(&ch, &cfg).unwrap();
        let res = bisect_sum_power(&eff, &cfg, profile(0.5), &BisectionConfig::default()).unwrap();
        assert_eq!(res.r_star, 0.0);
        assert!(res.trace.is_empty());
        let cfg = cfg.with_constraint(RelayConstraint::Individual(vec![1.0, 2.0]));
        let res = bisect_individual(&eff, &cfg, profile(0.5), &BisectionConfig::default()).unwrap();
        assert_eq!(res.r_star, 0.0);
    }

    #[test]
    fn sum_power_trace_is_monotone_and_bounded() {
        for seed in 0..5 {
            let (_, cfg, eff) = random_setup(3, seed, RelayConstraint::SumPower(10.0));
            for kappa in [0.25, 0.5, 0.75] {
                let bis = BisectionConfig::default();
                let res = bisect_sum_power(&eff, &cfg, profile(kappa), &bis).unwrap();
                assert!(res.r_star <= res.r_max);
                assert!(res.r_up - res.r_star < bis.epsilon);
                let bound = (res.r_max / bis.epsilon).log2().ceil() as usize;
                assert!(res.solves() <= bound.max(1));
                let mut steps = res.trace.clone();
                steps.sort_by(|a, b| a.r.total_cmp(&b.r));
                let flips = steps.windows(2).filter(|w| w[0].feasible != w[1].feasible).count();
                assert!(flips <= 1);
                assert!(steps.first().map_or(true, |s| s.feasible || steps.iter().all(|t| !t.feasible)));
                let powers: Vec<f64> = steps.iter().filter_map(|s| s.power).collect();
                for w in powers.windows(2) {
                    assert!(w[1] >= w[0] * (1.0 - 1e-7));
                }
            }
        }
    }

    #[test]
    fn rank_one_identity_case() {
        let mut rng = rng_from_seed(3);
        let w: Vec<Complex64> = (0..3).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let x = cmat::outer(&w);
        let b = cmat::conj_outer(&[one(), one(), one()]);
        let d = cmat::real_diag(&[1.0, 2.0, 3.0]);
        let out = rank_one_reduce(&x, core::slice::from_ref(&b), &d).unwrap();
        let xo = cmat::outer(&out.w);
        assert!((cmat::trace_product(&b, &xo) - cmat::trace_product(&b, &x)).abs() < 1e-12);
        assert!((cmat::trace_product(&d, &xo) - cmat::trace_product(&d, &x)).abs() < 1e-12);
        assert!((&xo - &x).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn rank_one_preserves_traces() {
        for seed in 0..30 {
            let mut rng = rng_from_seed(seed);
            let k = 2 + (seed as usize % 4);
            let r = 2.min(k) + (seed as usize % (k - 1));
            let g = CMatrix::from_fn(k, r, |_, _| complex_gaussian(&mut rng, 1.0));
            let x = &g * g.adjoint();
            let f1: Vec<Complex64> = (0..k).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let f2: Vec<Complex64> = (0..k).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let b1 = cmat::conj_outer(&f1) - cmat::real_diag(&vec![0.3; k]);
            let b2 = cmat::conj_outer(&f2) - cmat::real_diag(&vec![0.2; k]);
            let d = cmat::real_diag(&(0..k).map(|i| 1.0 + i as f64).collect::<Vec<_>>());
            let out = rank_one_reduce_matrix(&x, &[b1.clone(), b2.clone()], &d).unwrap();
            let ev = cmat::hermitian_eigenvalues(&out);
            let top = ev[k - 1];
            assert!(ev[k - 2].abs() <= 1e-8 * top);
            for m in [&b1, &b2, &d] {
                let before = cmat::trace_product(m, &x);
                let after = cmat::trace_product(m, &out);
                assert!((before - after).abs() <= 1e-10 * (1.0 + before.abs()), "{before} vs {after}");
            }
        }
    }

    #[test]
    fn rank_one_rejects_too_many_constraints() {
        let x = CMatrix::identity(3, 3);
        let m = CMatrix::identity(3, 3);
        assert!(matches!(
            rank_one_reduce(&x, &[m.clone(), m.clone(), m.clone()], &m),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn pipeline_output_meets_targets() {
        for seed in 0..4 {
            let (ch, cfg, eff) = random_setup(3, seed + 10, RelayConstraint::SumPower(10.0));
            let bis = BisectionConfig::default();
            let sol = solve_nonreciprocal(&ch, &cfg, profile(0.4), &bis, 0).unwrap();
            let t = snr_targets(profile(0.4), sol.r_star).unwrap();
            let (s1, s2) = snr_pair(&sol.w, &eff, &cfg).unwrap();
            assert!(s1 >= t.gamma1 * (1.0 - 1e-6), "{s1} < {}", t.gamma1);
            assert!(s2 >= t.gamma2 * (1.0 - 1e-6));
            let p = relay_powers(&sol.w, &ch, &cfg).unwrap();
            assert!(p.total <= 10.0 * (1.0 + 1e-6));
        }
    }

    #[test]
    fn one_way_profile_maximizes_first_rate() {
        let (ch, cfg, eff) = random_setup(3, 21, RelayConstraint::SumPower(10.0));
        let bis = BisectionConfig { epsilon: 1e-5, ..Default::default() };
        let sol = solve_nonreciprocal(&ch, &cfg, profile(1.0), &bis, 0).unwrap();
        // One-way optimum in closed form.
        let snr_max: f64 = cfg.p_s2
            * (0..3)
                .map(|i| eff.f2[i].norm_sqr() / (cfg.sigma_s1 * eff.d[i] / 10.0 + eff.a1[i]))
                .sum::<f64>();
        let r1_max = math::half_log_rate(snr_max);
        assert!((sol.rates.r1 - r1_max).abs() < 2e-5, "{} vs {r1_max}", sol.rates.r1);
    }

    #[test]
    fn individual_feasibility_with_witness() {
        let mut rng = rng_from_seed(77);
        let p = vec![1.0, 2.0, 0.5];
        for seed in 0..5 {
            let (ch, cfg, eff) = random_setup(3, seed + 30, RelayConstraint::Individual(p.clone()));
            let w = BeamVector::new(
                (0..3)
                    .map(|i| Complex64::from_polar(math::sqrt(p[i] / eff.d[i]) * rng.random::<f64>(), rng.random::<f64>() * 6.0))
                    .collect(),
            );
            let (s1, s2) = snr_pair(&w, &eff, &cfg).unwrap();
            let t = SnrTargets { gamma1: 0.99 * s1, gamma2: 0.99 * s2 };
            let out = feasibility_individual(&eff, &cfg, t, 1e-8).unwrap();
            assert_eq!(out.status, SdpStatus::Optimal);
            let _ = ch;
        }
    }

    #[test]
    fn individual_targets_above_bound_are_infeasible() {
        let (_, cfg, eff) = random_setup(3, 5, RelayConstraint::Individual(vec![1.0, 2.0, 0.5]));
        let r = rate_upper_bound(&eff, &cfg);
        let t = snr_targets(profile(0.5), 2.2 * r).unwrap();
        assert_eq!(feasibility_individual(&eff, &cfg, t, 1e-8).unwrap().status, SdpStatus::Infeasible);
    }

    #[test]
    fn single_relay_pipelines_agree() {
        let (_, cfg, eff) = random_setup(1, 8, RelayConstraint::SumPower(2.0));
        let bis = BisectionConfig { epsilon: 1e-4, ..Default::default() };
        let a = bisect_sum_power(&eff, &cfg, profile(0.5), &bis).unwrap();
        let cfg_i = cfg.with_constraint(RelayConstraint::Individual(vec![2.0]));
        let b = bisect_individual(&eff, &cfg_i, profile(0.5), &bis).unwrap();
        assert!((a.r_star - b.r_star).abs() <= 1e-4);
    }

    #[test]
    fn individual_rate_below_sum_power_rate() {
        for seed in 0..3 {
            let p = vec![2.5, 3.0, 0.5];
            let (_, cfg, eff) = random_setup(3, seed + 40, RelayConstraint::Individual(p));
            let bis = BisectionConfig::default();
            let ind = bisect_individual(&eff, &cfg, profile(0.5), &bis).unwrap();
            let sum = bisect_sum_power(&eff, &cfg.with_constraint(RelayConstraint::SumPower(6.0)), profile(0.5), &bis).unwrap();
            assert!(ind.r_star <= sum.r_star + bis.epsilon);
        }
    }

    #[test]
    fn power_cap_only_cuts_off_expensive_targets() {
        let (_, cfg, eff) = random_setup(3, 11, RelayConstraint::SumPower(10.0));
        let t = snr_targets(profile(0.5), 0.5).unwrap();
        let free = match min_sum_power(&eff, &cfg, t, 1e-9).unwrap() {
            SumPowerResult::Achievable { power, .. } => power,
            SumPowerResult::Infeasible => panic!("targets should be reachable"),
        };
        match min_sum_power_capped(&eff, &cfg, t, Some(2.0 * free), 1e-9).unwrap() {
            SumPowerResult::Achievable { power, .. } => assert!((power - free).abs() <= 1e-6 * free),
            SumPowerResult::Infeasible => panic!("cap above the minimum must not bind"),
        }
        assert_eq!(min_sum_power_capped(&eff, &cfg, t, Some(0.5 * free), 1e-9).unwrap(), SumPowerResult::Infeasible);
        assert!(min_sum_power_capped(&eff, &cfg, t, Some(0.0), 1e-9).is_err());
    }

    #[test]
    fn randomization_recovers_a_rank_one_input() {
        let (_, cfg, eff) = random_setup(5, 12, RelayConstraint::Individual(vec![1.0; 5]));
        let mut rng = rng_from_seed(13);
        let v: Vec<Complex64> = (0..5).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let x = cmat::outer(&v);
        let (s1, s2) = snr_pair(&BeamVector::new(v.clone()), &eff, &cfg).unwrap();
        let t = SnrTargets { gamma1: s1, gamma2: s2 };
        let w = randomize_rank_one(&x, &eff, &cfg, t, 10, 14).unwrap();
        assert!(violation_score(&w, &eff, &cfg, t) <= 1e-12);
    }

    #[test]
    fn randomization_keeps_amplitudes() {
        let (_, cfg, eff) = random_setup(3, 2, RelayConstraint::Individual(vec![1.0, 1.0, 1.0]));
        let mut rng = rng_from_seed(4);
        let g = CMatrix::from_fn(3, 2, |_, _| complex_gaussian(&mut rng, 1.0));
        let x = &g * g.adjoint();
        let t = SnrTargets { gamma1: 0.1, gamma2: 0.1 };
        let w = randomize_rank_one(&x, &eff, &cfg, t, 50, 9).unwrap();
        for i in 0..3 {
            assert!((w.w[i].norm_sqr() - x[(i, i)].re).abs() < 1e-14 * (1.0 + x[(i, i)].re));
        }
        assert!(randomize_rank_one(&x, &eff, &cfg, t, 0, 9).is_err());
        let again = randomize_rank_one(&x, &eff, &cfg, t, 50, 9).unwrap();
        assert_eq!(w, again);
    }

    #[test]
    fn randomization_single_active_relay_is_phase_invariant() {
        let (_, cfg, eff) = random_setup(3, 2, RelayConstraint::Individual(vec![1.0, 1.0, 1.0]));
        let x = cmat::real_diag(&[0.0, 0.4, 0.0]);
        let t = SnrTargets { gamma1: 0.1, gamma2: 0.2 };
        let mut rng = rng_from_seed(1);
        let scores: Vec<f64> = (0..20)
            .map(|_| {
                let th: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
                violation_score(&BeamVector::from_polar(&[0.0, math::sqrt(0.4), 0.0], &th), &eff, &cfg, t)
            })
            .collect();
        for s in &scores {
            assert!((s - scores[0]).abs() < 1e-12);
        }
        let _ = x;
    }
}
