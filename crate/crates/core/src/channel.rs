//! Physical-layer model: channels, system parameters and the closed-form
//! SNR, rate and relay-power expressions.
//!
//! Relay `i` receives `t_i = h1_i s1 + h2_i s2 + v_i`, forwards `w_i t_i`, and
//! each source removes its own known contribution before decoding. With
//! `f1 = h1 ⊙ h2r` and `f2 = h2 ⊙ h1r` the end-to-end SNRs are
//!
//! ```text
//! snr1 = P_s2 |f2^T w|^2 / (sigma_s1^2 + w^H A1 w)      (S2 -> S1)
//! snr2 = P_s1 |f1^T w|^2 / (sigma_s2^2 + w^H A2 w)      (S1 -> S2)
//! ```
//!
//! with `A1 = diag(|h1r_i|^2 sigma_i^2)`, `A2 = diag(|h2r_i|^2 sigma_i^2)`, and
//! the relay cluster spends `w^H D w` with
//! `D = diag(|h1_i|^2 P_s1 + |h2_i|^2 P_s2 + sigma_i^2)`.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

/// Forward (`h1`, `h2`: source to relay) and backward (`h1r`, `h2r`: relay
/// to source) channel vectors of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h1: Vec<Complex64>,
    pub h2: Vec<Complex64>,
    pub h1r: Vec<Complex64>,
    pub h2r: Vec<Complex64>,
    /// `true` when `h1r == h1` and `h2r == h2`.
    pub reciprocal: bool,
}

impl ChannelRealization {
    pub fn new(
        h1: Vec<Complex64>,
        h2: Vec<Complex64>,
        h1r: Vec<Complex64>,
        h2r: Vec<Complex64>,
    ) -> Result<Self> {
        let reciprocal = h1 == h1r && h2 == h2r;
        let ch = ChannelRealization {
            h1,
            h2,
            h1r,
            h2r,
            reciprocal,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Reciprocal realization: backward channels equal the forward ones.
    pub fn reciprocal(h1: Vec<Complex64>, h2: Vec<Complex64>) -> Result<Self> {
        let ch = ChannelRealization {
            h1r: h1.clone(),
            h2r: h2.clone(),
            h1,
            h2,
            reciprocal: true,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Number of relays `K`.
    pub fn len(&self) -> usize {
        self.h1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h1.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.h1.len();
        if k == 0 {
            return Err(Error::parameter("channel vectors must have at least one relay"));
        }
        for v in [&self.h2, &self.h1r, &self.h2r] {
            if v.len() != k {
                return Err(Error::dim(k, v.len()));
            }
        }
        let all = self.h1.iter().chain(&self.h2).chain(&self.h1r).chain(&self.h2r);
        if all.clone().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::parameter("channel coefficients must be finite"));
        }
        if self.reciprocal && (self.h1 != self.h1r || self.h2 != self.h2r) {
            return Err(Error::ContractViolation(
                "realization flagged reciprocal but backward channels differ".into(),
            ));
        }
        Ok(())
    }

    /// Exchanges the roles of the two sources.
    pub fn swapped(&self) -> Self {
        ChannelRealization {
            h1: self.h2.clone(),
            h2: self.h1.clone(),
            h1r: self.h2r.clone(),
            h2r: self.h1r.clone(),
            reciprocal: self.reciprocal,
        }
    }
}

/// Relay power limit.
#[derive(Debug, Clone, PartialEq)]
pub enum RelayConstraint {
    /// Total cluster power `P_R`.
    SumPower(f64),
    /// Per-relay limits `p_i`.
    Individual(Vec<f64>),
}

impl RelayConstraint {
    /// `P_R`, or `sum p_i` for per-relay limits.
    pub fn total(&self) -> f64 {
        match self {
            RelayConstraint::SumPower(p) => *p,
            RelayConstraint::Individual(p) => p.iter().sum(),
        }
    }

    pub fn is_sum_power(&self) -> bool {
        matches!(self, RelayConstraint::SumPower(_))
    }
}

/// Source powers, noise variances and the relay power constraint. All
/// quantities are linear (watts / variance), never dB.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub p_s1: f64,
    pub p_s2: f64,
    /// Relay noise variances `sigma_i^2`.
    pub sigma_relay: Vec<f64>,
    pub sigma_s1: f64,
    pub sigma_s2: f64,
    pub relay_constraint: RelayConstraint,
}

impl SystemConfig {
    /// Unit noise everywhere.
    pub fn unit_noise(k: usize, p_s1: f64, p_s2: f64, relay_constraint: RelayConstraint) -> Self {
        SystemConfig {
            p_s1,
            p_s2,
            sigma_relay: alloc::vec![1.0; k],
            sigma_s1: 1.0,
            sigma_s2: 1.0,
            relay_constraint,
        }
    }

    pub fn with_constraint(&self, relay_constraint: RelayConstraint) -> Self {
        SystemConfig {
            relay_constraint,
            ..self.clone()
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::parameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("p_s1", self.p_s1)?;
        positive("p_s2", self.p_s2)?;
        positive("sigma_s1", self.sigma_s1)?;
        positive("sigma_s2", self.sigma_s2)?;
        if self.sigma_relay.len() != k {
            return Err(Error::dim(k, self.sigma_relay.len()));
        }
        for &s in &self.sigma_relay {
            positive("relay noise variance", s)?;
        }
        match &self.relay_constraint {
            RelayConstraint::SumPower(p) => positive("relay sum power", *p)?,
            RelayConstraint::Individual(p) => {
                if p.len() != k {
                    return Err(Error::dim(k, p.len()));
                }
                for &pi in p {
                    positive("relay power limit", pi)?;
                }
            }
        }
        Ok(())
    }
}

/// Channel quantities that all beamforming problems are written in.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    /// `h1 ⊙ h2r`: the S1 -> S2 cascade.
    pub f1: Vec<Complex64>,
    /// `h2 ⊙ h1r`: the S2 -> S1 cascade.
    pub f2: Vec<Complex64>,
    /// `|h1_i| |h2_i|`, reciprocal realizations only.
    pub f_hat: Option<Vec<f64>>,
    /// Diagonal of `A1`: `|h1r_i|^2 sigma_i^2`.
    pub a1: Vec<f64>,
    /// Diagonal of `A2`: `|h2r_i|^2 sigma_i^2`.
    pub a2: Vec<f64>,
    /// Diagonal of `D`: relay `i` spends `|w_i|^2 d_i`.
    pub d: Vec<f64>,
}

impl EffectiveChannels {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

pub fn effective_channels(ch: &ChannelRealization, cfg: &SystemConfig) -> Result<EffectiveChannels> {
    ch.validate()?;
    let k = ch.len();
    cfg.validate(k)?;

    let f1 = ch.h1.iter().zip(&ch.h2r).map(|(a, b)| a * b).collect();
    let f2 = ch.h2.iter().zip(&ch.h1r).map(|(a, b)| a * b).collect();
    let f_hat = ch
        .reciprocal
        .then(|| ch.h1.iter().zip(&ch.h2).map(|(a, b)| a.norm() * b.norm()).collect());
    let a1 = ch.h1r.iter().zip(&cfg.sigma_relay).map(|(h, s)| h.norm_sqr() * s).collect();
    let a2 = ch.h2r.iter().zip(&cfg.sigma_relay).map(|(h, s)| h.norm_sqr() * s).collect();
    let d = (0..k)
        .map(|i| ch.h1[i].norm_sqr() * cfg.p_s1 + ch.h2[i].norm_sqr() * cfg.p_s2 + cfg.sigma_relay[i])
        .collect();

    Ok(EffectiveChannels {
        f1,
        f2,
        f_hat,
        a1,
        a2,
        d,
    })
}

/// Complex relay weight vector `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamVector {
    pub w: Vec<Complex64>,
}

impl BeamVector {
    pub fn new(w: Vec<Complex64>) -> Self {
        BeamVector { w }
    }

    pub fn zeros(k: usize) -> Self {
        BeamVector {
            w: alloc::vec![Complex64::new(0.0, 0.0); k],
        }
    }

    /// `w_i = x_i e^{j theta_i}`.
    pub fn from_polar(amplitudes: &[f64], phases: &[f64]) -> Self {
        BeamVector {
            w: amplitudes
                .iter()
                .zip(phases)
                .map(|(&x, &th)| Complex64::from_polar(x, th))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.w.iter().map(|z| z.norm()).collect()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        BeamVector {
            w: self.w.iter().map(|z| z * c).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Achievable rate pair in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
}

impl RatePoint {
    pub const ORIGIN: RatePoint = RatePoint { r1: 0.0, r2: 0.0 };

    pub fn new(r1: f64, r2: f64) -> Self {
        RatePoint { r1, r2 }
    }

    pub fn from_snr(snr1: f64, snr2: f64) -> Self {
        RatePoint {
            r1: math::half_log_rate(snr1),
            r2: math::half_log_rate(snr2),
        }
    }

    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }

    pub fn mirrored(&self) -> Self {
        RatePoint {
            r1: self.r2,
            r2: self.r1,
        }
    }
}

/// Pair of inverse SNRs; both components strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseSnrPoint {
    pub t1: f64,
    pub t2: f64,
}

impl InverseSnrPoint {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1 > 0.0 && t2 > 0.0) || !t1.is_finite() || !t2.is_finite() {
            return Err(Error::Domain(format!(
                "inverse SNR components must be positive and finite, got ({t1}, {t2})"
            )));
        }
        Ok(InverseSnrPoint { t1, t2 })
    }
}

fn check_len(w: &BeamVector, k: usize) -> Result<()> {
    if w.len() != k {
        return Err(Error::dim(k, w.len()));
    }
    Ok(())
}

/// End-to-end SNRs `(snr1, snr2)` at S1 and S2.
pub fn snr_pair(w: &BeamVector, eff: &EffectiveChannels, cfg: &SystemConfig) -> Result<(f64, f64)> {
    check_len(w, eff.len())?;
    let mut g1 = Complex64::new(0.0, 0.0);
    let mut g2 = Complex64::new(0.0, 0.0);
    let mut n1 = cfg.sigma_s1;
    let mut n2 = cfg.sigma_s2;
    for (i, wi) in w.w.iter().enumerate() {
        g1 += eff.f2[i] * wi;
        g2 += eff.f1[i] * wi;
        let p = wi.norm_sqr();
        n1 += eff.a1[i] * p;
        n2 += eff.a2[i] * p;
    }
    Ok((cfg.p_s2 * g1.norm_sqr() / n1, cfg.p_s1 * g2.norm_sqr() / n2))
}

pub fn rate_pair(w: &BeamVector, eff: &EffectiveChannels, cfg: &SystemConfig) -> Result<RatePoint> {
    let (s1, s2) = snr_pair(w, eff, cfg)?;
    Ok(RatePoint::from_snr(s1, s2))
}

/// Per-relay and total transmit power of the relay cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayPowers {
    pub per_relay: Vec<f64>,
    pub total: f64,
}

pub fn relay_powers(w: &BeamVector, ch: &ChannelRealization, cfg: &SystemConfig) -> Result<RelayPowers> {
    ch.validate()?;
    let k = ch.len();
    check_len(w, k)?;
    if cfg.sigma_relay.len() != k {
        return Err(Error::dim(k, cfg.sigma_relay.len()));
    }
    let per_relay: Vec<f64> = (0..k)
        .map(|i| {
            let d = ch.h1[i].norm_sqr() * cfg.p_s1 + ch.h2[i].norm_sqr() * cfg.p_s2 + cfg.sigma_relay[i];
            w.w[i].norm_sqr() * d
        })
        .collect();
    let total = per_relay.iter().sum();
    Ok(RelayPowers { per_relay, total })
}
