//! Closed-form beamformers for reciprocal channels.
//!
//! With `h1r = h1` and `h2r = h2`, the phase `-(arg h1_i + arg h2_i)` aligns
//! every relay for both directions at once, so only the amplitudes
//! `x_i = |w_i|` remain. Each boundary point of the rate region is obtained
//! by minimizing the weighted sum of inverse SNRs
//!
//! ```text
//! mu / snr1(x) + (1 - mu) / snr2(x)
//! ```
//!
//! which has a closed-form minimizer under both power models.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::channel::{BeamVector, ChannelRealization, EffectiveChannels, RelayConstraint, SystemConfig};
use crate::error::{Error, Result};
use crate::math;

/// Weight `mu` on `1/snr1`; `1 - mu` goes to `1/snr2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WsisWeight {
    mu: f64,
}

impl WsisWeight {
    pub fn new(mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::parameter(format!("weight must lie in [0, 1], got {mu}")));
        }
        Ok(WsisWeight { mu })
    }

    pub fn mu(self) -> f64 {
        self.mu
    }

    pub fn mu_bar(self) -> f64 {
        1.0 - self.mu
    }

    /// `nu = mu sigma_s1^2 / P_s2 + (1 - mu) sigma_s2^2 / P_s1`.
    pub fn nu(self, cfg: &SystemConfig) -> f64 {
        self.mu * cfg.sigma_s1 / cfg.p_s2 + self.mu_bar() * cfg.sigma_s2 / cfg.p_s1
    }
}

/// Relay phases `-(arg h1_i + arg h2_i)` wrapped into `(-pi, pi]`.
pub fn phase_align(ch: &ChannelRealization) -> Result<Vec<f64>> {
    ch.validate()?;
    if !ch.reciprocal {
        return Err(Error::ContractViolation(
            "phase alignment needs reciprocal channels".into(),
        ));
    }
    Ok(ch
        .h1
        .iter()
        .zip(&ch.h2)
        .map(|(a, b)| math::wrap_phase(-(a.arg() + b.arg())))
        .collect())
}

fn f_hat(eff: &EffectiveChannels) -> Result<&[f64]> {
    eff.f_hat.as_deref().ok_or_else(|| {
        Error::ContractViolation("closed-form solvers need reciprocal channels".into())
    })
}

/// Weighted inverse-SNR objective for phase-aligned amplitudes `x`.
/// Returns `+inf` when either SNR vanishes.
pub fn wsis_objective(x: &[f64], eff: &EffectiveChannels, cfg: &SystemConfig, weight: WsisWeight) -> Result<f64> {
    let fh = f_hat(eff)?;
    if x.len() != fh.len() {
        return Err(Error::dim(fh.len(), x.len()));
    }
    let mut gain = 0.0;
    let mut n1 = cfg.sigma_s1;
    let mut n2 = cfg.sigma_s2;
    for (i, &xi) in x.iter().enumerate() {
        gain += fh[i] * xi;
        n1 += eff.a1[i] * xi * xi;
        n2 += eff.a2[i] * xi * xi;
    }
    let g2 = gain * gain;
    if g2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(weight.mu() * n1 / (cfg.p_s2 * g2) + weight.mu_bar() * n2 / (cfg.p_s1 * g2))
}

/// Sum-power minimizer `x* = xi Gamma^{-1} f_hat / ||Gamma^{-1} f_hat||`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumPowerSolution {
    /// Optimal amplitudes; `x^T D x = P_R`.
    pub x: Vec<f64>,
    /// `||x*||`.
    pub xi: f64,
    /// Diagonal of `Gamma = nu D / P_R + diag(eta)`.
    pub gamma_diag: Vec<f64>,
    /// `xi / ||Gamma^{-1} f_hat||`, the scalar a control center broadcasts.
    pub broadcast: f64,
    pub nu: f64,
}

impl SumPowerSolution {
    /// Phase-aligned complex weights.
    pub fn beam(&self, ch: &ChannelRealization) -> Result<BeamVector> {
        let theta = phase_align(ch)?;
        Ok(BeamVector::from_polar(&self.x, &theta))
    }
}

/// `eta_i = mu a1_i / P_s2 + (1 - mu) a2_i / P_s1`, the relay-noise part of
/// the weighted inverse SNR.
fn eta(a1: f64, a2: f64, cfg: &SystemConfig, weight: WsisWeight) -> f64 {
    weight.mu() * a1 / cfg.p_s2 + weight.mu_bar() * a2 / cfg.p_s1
}

pub fn wsismin_sum_power(eff: &EffectiveChannels, cfg: &SystemConfig, weight: WsisWeight) -> Result<SumPowerSolution> {
    let fh = f_hat(eff)?;
    let p_r = match cfg.relay_constraint {
        RelayConstraint::SumPower(p) => p,
        RelayConstraint::Individual(_) => {
            return Err(Error::ContractViolation("sum-power solver called with per-relay limits".into()))
        }
    };
    if fh.iter().all(|&f| f == 0.0) {
        return Err(Error::DegenerateChannel(
            "no relay sees both sources (f_hat = 0)".into(),
        ));
    }
    let nu = weight.nu(cfg);
    let gamma_diag: Vec<f64> = (0..fh.len())
        .map(|i| nu * eff.d[i] / p_r + eta(eff.a1[i], eff.a2[i], cfg, weight))
        .collect();
    let direction: Vec<f64> = fh.iter().zip(&gamma_diag).map(|(f, g)| f / g).collect();
    let dir_norm = math::sqrt(direction.iter().map(|v| v * v).sum());
    let dir_power: f64 = direction.iter().zip(&eff.d).map(|(v, d)| v * v * d).sum();
    let broadcast = math::sqrt(p_r / dir_power);
    let x: Vec<f64> = direction.iter().map(|v| v * broadcast).collect();
    Ok(SumPowerSolution {
        xi: broadcast * dir_norm,
        broadcast,
        gamma_diag,
        nu,
        x,
    })
}

/// Weight relay `i` computes on its own from `h1_i`, `h2_i`, its noise
/// variance, the system constants and the broadcast scalar.
pub fn local_weight_sum_power(
    h1i: Complex64,
    h2i: Complex64,
    sigma_i: f64,
    cfg: &SystemConfig,
    weight: WsisWeight,
    broadcast: f64,
) -> Complex64 {
    let p_r = cfg.relay_constraint.total();
    let (m1, m2) = (h1i.norm_sqr(), h2i.norm_sqr());
    let beta = sigma_i + cfg.p_s1 * m1 + cfg.p_s2 * m2;
    let eta_i = eta(m1 * sigma_i, m2 * sigma_i, cfg, weight);
    let amplitude = broadcast * h1i.norm() * h2i.norm() / (weight.nu(cfg) * beta / p_r + eta_i);
    Complex64::from_polar(amplitude, -(h1i.arg() + h2i.arg()))
}

/// Per-relay power minimizer in the power-fraction variable
/// `alpha_i = sqrt(p_{R,i} / p_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualSolution {
    /// Optimal fractions, `0 <= alpha <= 1`.
    pub alpha: Vec<f64>,
    /// Number of relays at full power.
    pub k_star: usize,
    /// Threshold shared by all relays.
    pub lambda_star: f64,
    /// Relay indices (0-based) sorted by decreasing `phi`.
    pub tau: Vec<usize>,
    pub psi: Vec<f64>,
    pub g_tilde: Vec<f64>,
    pub phi: Vec<f64>,
    /// Amplitudes `x_i = alpha_i sqrt(p_i / d_i)`.
    pub x: Vec<f64>,
}

impl IndividualSolution {
    pub fn beam(&self, ch: &ChannelRealization) -> Result<BeamVector> {
        let theta = phase_align(ch)?;
        Ok(BeamVector::from_polar(&self.x, &theta))
    }

    /// `lambda_k` for every prefix length `k = 1..=K`.
    pub fn lambdas(&self) -> Vec<f64> {
        prefix_lambdas(&self.tau, &self.psi, &self.g_tilde)
    }
}

/// `(psi_i, g_tilde_i)` of one relay.
fn relay_terms(fhat: f64, a1: f64, a2: f64, d: f64, p: f64, cfg: &SystemConfig, weight: WsisWeight) -> (f64, f64) {
    let nu = weight.nu(cfg);
    let g = math::sqrt(p) * fhat / math::sqrt(d);
    let psi_sq = p * eta(a1, a2, cfg, weight) / (d * nu);
    (math::sqrt(psi_sq), g / math::sqrt(nu))
}

fn phi_of(psi: f64, g_tilde: f64) -> f64 {
    if g_tilde == 0.0 {
        0.0
    } else {
        g_tilde / (psi * psi)
    }
}

fn prefix_lambdas(tau: &[usize], psi: &[f64], g_tilde: &[f64]) -> Vec<f64> {
    let mut num = 1.0;
    let mut den = 0.0;
    tau.iter()
        .map(|&j| {
            num += psi[j] * psi[j];
            den += g_tilde[j];
            num / den
        })
        .collect()
}

pub fn wsismin_individual(eff: &EffectiveChannels, cfg: &SystemConfig, weight: WsisWeight) -> Result<IndividualSolution> {
    let fh = f_hat(eff)?;
    let p = match &cfg.relay_constraint {
        RelayConstraint::Individual(p) => p,
        RelayConstraint::SumPower(_) => {
            return Err(Error::ContractViolation("per-relay solver called with a sum-power limit".into()))
        }
    };
    let k = fh.len();
    let (psi, g_tilde): (Vec<f64>, Vec<f64>) = (0..k)
        .map(|i| relay_terms(fh[i], eff.a1[i], eff.a2[i], eff.d[i], p[i], cfg, weight))
        .unzip();
    let phi: Vec<f64> = psi.iter().zip(&g_tilde).map(|(&s, &g)| phi_of(s, g)).collect();
    if phi.iter().all(|&f| f == 0.0) {
        return Err(Error::DegenerateChannel("every relay has phi = 0".into()));
    }

    let mut tau: Vec<usize> = (0..k).collect();
    // Stable: ties keep ascending relay index.
    tau.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]));

    let lambdas = prefix_lambdas(&tau, &psi, &g_tilde);
    // phi_{K+1} = 0 makes the last comparison `lambda_K < inf`.
    let k_star = (1..=k)
        .find(|&kk| {
            let next_phi = if kk < k { phi[tau[kk]] } else { 0.0 };
            lambdas[kk - 1] * next_phi < 1.0
        })
        .ok_or_else(|| Error::NumericalFailure("no threshold index satisfied the stopping rule".into()))?;
    let lambda_star = lambdas[k_star - 1];

    let mut alpha = alloc::vec![0.0; k];
    for (rank, &j) in tau.iter().enumerate() {
        alpha[j] = if rank < k_star { 1.0 } else { lambda_star * phi[j] };
    }
    let x = (0..k).map(|i| alpha[i] * math::sqrt(p[i] / eff.d[i])).collect();

    Ok(IndividualSolution {
        alpha,
        k_star,
        lambda_star,
        tau,
        psi,
        g_tilde,
        phi,
        x,
    })
}

/// Weight relay `i` computes from local channels, its power limit and the
/// broadcast threshold `lambda_star`.
pub fn local_weight_individual(
    h1i: Complex64,
    h2i: Complex64,
    sigma_i: f64,
    p_i: f64,
    cfg: &SystemConfig,
    weight: WsisWeight,
    lambda_star: f64,
) -> Complex64 {
    let (m1, m2) = (h1i.norm_sqr(), h2i.norm_sqr());
    let d = sigma_i + cfg.p_s1 * m1 + cfg.p_s2 * m2;
    let (psi, g_tilde) = relay_terms(h1i.norm() * h2i.norm(), m1 * sigma_i, m2 * sigma_i, d, p_i, cfg, weight);
    let phi = phi_of(psi, g_tilde);
    let alpha = if lambda_star * phi >= 1.0 { 1.0 } else { lambda_star * phi };
    Complex64::from_polar(alpha * math::sqrt(p_i / d), -(h1i.arg() + h2i.arg()))
}

/// Optimal weighted inverse-SNR beamformer for whichever relay constraint
/// `cfg` carries.
pub fn optimal_beam(ch: &ChannelRealization, eff: &EffectiveChannels, cfg: &SystemConfig, weight: WsisWeight) -> Result<BeamVector> {
    match cfg.relay_constraint {
        RelayConstraint::SumPower(_) => wsismin_sum_power(eff, cfg, weight)?.beam(ch),
        RelayConstraint::Individual(_) => wsismin_individual(eff, cfg, weight)?.beam(ch),
    }
}
