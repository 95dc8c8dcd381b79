//! Low-complexity beamformers that need no optimization.
//!
//! Amplitudes follow a fixed power rule; phases are aligned exactly on
//! reciprocal channels and chosen relay by relay otherwise.

use alloc::vec::Vec;

use crate::channel::{BeamVector, ChannelRealization, RelayConstraint, SystemConfig};
use crate::error::{Error, Result};
use crate::math;
use crate::reciprocal::phase_align;

fn relay_load(ch: &ChannelRealization, cfg: &SystemConfig, i: usize) -> f64 {
    cfg.p_s1 * ch.h1[i].norm_sqr() + cfg.p_s2 * ch.h2[i].norm_sqr() + cfg.sigma_relay[i]
}

fn phases(ch: &ChannelRealization, cfg: &SystemConfig, amplitudes: &[f64]) -> Result<Vec<f64>> {
    if ch.reciprocal {
        phase_align(ch)
    } else {
        Ok(greedy_phase(ch, cfg, amplitudes)?.w.iter().map(|z| z.arg()).collect())
    }
}

/// Every relay transmits `P_R / K`.
pub fn equal_power(ch: &ChannelRealization, cfg: &SystemConfig) -> Result<BeamVector> {
    ch.validate()?;
    cfg.validate(ch.len())?;
    let p_r = match cfg.relay_constraint {
        RelayConstraint::SumPower(p) => p,
        RelayConstraint::Individual(_) => {
            return Err(Error::ContractViolation("equal power needs a sum-power limit".into()))
        }
    };
    let k = ch.len();
    let x: Vec<f64> = (0..k).map(|i| math::sqrt(p_r / (k as f64 * relay_load(ch, cfg, i)))).collect();
    Ok(BeamVector::from_polar(&x, &phases(ch, cfg, &x)?))
}

/// Every relay transmits its own maximum `p_i`.
pub fn max_power(ch: &ChannelRealization, cfg: &SystemConfig) -> Result<BeamVector> {
    ch.validate()?;
    cfg.validate(ch.len())?;
    let p = match &cfg.relay_constraint {
        RelayConstraint::Individual(p) => p,
        RelayConstraint::SumPower(_) => {
            return Err(Error::ContractViolation("max power needs per-relay limits".into()))
        }
    };
    let x: Vec<f64> = (0..ch.len()).map(|i| math::sqrt(p[i] / relay_load(ch, cfg, i))).collect();
    Ok(BeamVector::from_polar(&x, &phases(ch, cfg, &x)?))
}

/// Each relay matches the phase of whichever direction it would serve
/// better on its own, favouring S1 on ties.
pub fn greedy_phase(ch: &ChannelRealization, cfg: &SystemConfig, amplitudes: &[f64]) -> Result<BeamVector> {
    ch.validate()?;
    if amplitudes.len() != ch.len() {
        return Err(Error::dim(ch.len(), amplitudes.len()));
    }
    let theta: Vec<f64> = (0..ch.len())
        .map(|i| {
            let x2 = amplitudes[i] * amplitudes[i];
            let s = cfg.sigma_relay[i];
            let to_s1 = x2 * cfg.p_s2 * (ch.h2[i] * ch.h1r[i]).norm_sqr() / (cfg.sigma_s1 + x2 * ch.h1r[i].norm_sqr() * s);
            let to_s2 = x2 * cfg.p_s1 * (ch.h1[i] * ch.h2r[i]).norm_sqr() / (cfg.sigma_s2 + x2 * ch.h2r[i].norm_sqr() * s);
            let t = if to_s1 >= to_s2 {
                -(ch.h2[i].arg() + ch.h1r[i].arg())
            } else {
                -(ch.h1[i].arg() + ch.h2r[i].arg())
            };
            math::wrap_phase(t)
        })
        .collect();
    Ok(BeamVector::from_polar(amplitudes, &theta))
}
