//! Symbol-level Monte Carlo simulation of the two-slot relay link.
//!
//! Used to validate the analytic SNR expressions in [`crate::channel`].

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::channel::{BeamVector, ChannelRealization, SystemConfig};
use crate::error::{Error, Result};
use crate::sampling::{complex_gaussian, rng_from_seed};

/// Smallest accepted number of simulated symbols.
pub const MIN_SYMBOLS: usize = 10_000;

/// SNRs measured at S1 and S2 from simulated received samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalSnr {
    pub snr1: f64,
    pub snr2: f64,
    pub symbols: usize,
}

/// Simulates `n_symbols` uses of the link with CSCG source symbols of power
/// `P_S1` and `P_S2`.
///
/// Each source cancels its own self-interference; the remaining signal is
/// split into the desired component (the other source's symbol times the
/// end-to-end coefficient, known to the genie) and a residual whose power
/// is the measured interference-plus-noise.
pub fn simulate_link(
    w: &BeamVector,
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    n_symbols: usize,
    seed: u64,
) -> Result<EmpiricalSnr> {
    if n_symbols < MIN_SYMBOLS {
        return Err(Error::parameter(format!(
            "at least {MIN_SYMBOLS} symbols are needed, got {n_symbols}"
        )));
    }
    ch.validate()?;
    let k = ch.len();
    cfg.validate(k)?;
    if w.len() != k {
        return Err(Error::dim(k, w.len()));
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut self1 = zero;
    let mut self2 = zero;
    let mut desired1 = zero;
    let mut desired2 = zero;
    for i in 0..k {
        self1 += ch.h1r[i] * w.w[i] * ch.h1[i];
        self2 += ch.h2r[i] * w.w[i] * ch.h2[i];
        desired1 += ch.h1r[i] * w.w[i] * ch.h2[i];
        desired2 += ch.h2r[i] * w.w[i] * ch.h1[i];
    }

    let mut rng = rng_from_seed(seed);
    let mut signal1 = 0.0;
    let mut signal2 = 0.0;
    let mut residual1 = 0.0;
    let mut residual2 = 0.0;
    let mut forwarded: Vec<Complex64> = alloc::vec![zero; k];
    for _ in 0..n_symbols {
        let s1 = complex_gaussian(&mut rng, cfg.p_s1);
        let s2 = complex_gaussian(&mut rng, cfg.p_s2);
        for (i, f) in forwarded.iter_mut().enumerate() {
            let v = complex_gaussian(&mut rng, cfg.sigma_relay[i]);
            *f = w.w[i] * (ch.h1[i] * s1 + ch.h2[i] * s2 + v);
        }
        let z1 = complex_gaussian(&mut rng, cfg.sigma_s1);
        let z2 = complex_gaussian(&mut rng, cfg.sigma_s2);
        let mut y1 = z1;
        let mut y2 = z2;
        for ((f, g1), g2) in forwarded.iter().zip(&ch.h1r).zip(&ch.h2r) {
            y1 += g1 * f;
            y2 += g2 * f;
        }
        let clean1 = y1 - self1 * s1;
        let clean2 = y2 - self2 * s2;
        let d1 = desired1 * s2;
        let d2 = desired2 * s1;
        signal1 += d1.norm_sqr();
        signal2 += d2.norm_sqr();
        residual1 += (clean1 - d1).norm_sqr();
        residual2 += (clean2 - d2).norm_sqr();
    }

    Ok(EmpiricalSnr {
        snr1: signal1 / residual1,
        snr2: signal2 / residual2,
        symbols: n_symbols,
    })
}
