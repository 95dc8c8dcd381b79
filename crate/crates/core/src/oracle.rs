//! Brute-force baselines for certifying the optimized solvers at small `K`.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{rate_pair, BeamVector, EffectiveChannels, RatePoint, RelayConstraint, SystemConfig};
use crate::error::{Error, Result};
use crate::math;
use crate::nonreciprocal::{RateProfile, SnrTargets};
use crate::reciprocal::WsisWeight;
use crate::sampling::{complex_gaussian, rng_from_seed};

pub const MAX_GRID_RELAYS: usize = 3;
pub const MIN_GRID_RESOLUTION: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Weighted inverse-SNR objective for real amplitudes, with the weights
/// folded in: `(c0 + sum c_i x_i^2) / (sum f_i x_i)^2`.
struct Objective {
    f: Vec<f64>,
    c: Vec<f64>,
    c0: f64,
}

impl Objective {
    fn new(eff: &EffectiveChannels, cfg: &SystemConfig, weight: WsisWeight) -> Result<Self> {
        let f = eff
            .f_hat
            .clone()
            .ok_or_else(|| Error::ContractViolation("grid search needs reciprocal channels".into()))?;
        let (u, v) = (weight.mu() / cfg.p_s2, weight.mu_bar() / cfg.p_s1);
        Ok(Objective {
            c: (0..f.len()).map(|i| u * eff.a1[i] + v * eff.a2[i]).collect(),
            c0: u * cfg.sigma_s1 + v * cfg.sigma_s2,
            f,
        })
    }

    #[inline]
    fn eval(num: f64, gain: f64) -> f64 {
        if gain > 0.0 {
            num / (gain * gain)
        } else {
            f64::INFINITY
        }
    }
}

/// Exhaustive search for the weighted inverse-SNR minimizer on a grid:
/// spherical angles over the sum-power ellipsoid, or an `alpha` lattice
/// over the per-relay box.
pub fn grid_wsismin(eff: &EffectiveChannels, cfg: &SystemConfig, weight: WsisWeight, resolution: usize) -> Result<GridResult> {
    let k = eff.len();
    if k > MAX_GRID_RELAYS {
        return Err(Error::TooLarge { size: k, limit: MAX_GRID_RELAYS });
    }
    if resolution < MIN_GRID_RESOLUTION {
        return Err(Error::parameter("grid resolution must be at least 100"));
    }
    let obj = Objective::new(eff, cfg, weight)?;
    match &cfg.relay_constraint {
        RelayConstraint::SumPower(p_r) => Ok(grid_sum_power(&obj, &eff.d, *p_r, resolution)),
        RelayConstraint::Individual(p) => {
            let caps: Vec<f64> = (0..k).map(|i| math::sqrt(p[i] / eff.d[i])).collect();
            Ok(grid_box(&obj, &caps, resolution))
        }
    }
}

fn grid_sum_power(obj: &Objective, d: &[f64], p_r: f64, res: usize) -> GridResult {
    let k = d.len();
    let scale: Vec<f64> = d.iter().map(|di| math::sqrt(p_r / di)).collect();
    let angle = |i: usize| FRAC_PI_2 * i as f64 / res as f64;
    let mut best = GridResult { x: scale.clone(), objective: f64::INFINITY };
    let mut consider = |u: &[f64]| {
        let x: Vec<f64> = u.iter().zip(&scale).map(|(u, s)| u * s).collect();
        let gain: f64 = x.iter().zip(&obj.f).map(|(x, f)| x * f).sum();
        let num = obj.c0 + x.iter().zip(&obj.c).map(|(x, c)| c * x * x).sum::<f64>();
        let v = Objective::eval(num, gain);
        if v < best.objective {
            best = GridResult { x, objective: v };
        }
    };
    match k {
        1 => consider(&[1.0]),
        2 => {
            for i in 0..=res {
                let a = angle(i);
                consider(&[math::cos(a), math::sin(a)]);
            }
        }
        _ => {
            for i in 0..=res {
                let a = angle(i);
                for j in 0..=res {
                    let b = angle(j);
                    consider(&[math::cos(a), math::sin(a) * math::cos(b), math::sin(a) * math::sin(b)]);
                }
            }
        }
    }
    best
}

fn grid_box(obj: &Objective, caps: &[f64], res: usize) -> GridResult {
    let k = caps.len();
    let step: Vec<f64> = caps.iter().map(|c| c / res as f64).collect();
    let mut best_v = f64::INFINITY;
    let mut best_idx = [0usize; MAX_GRID_RELAYS];
    let lvl = |axis: usize, i: usize| step[axis] * i as f64;
    // Partial sums are carried from outer to inner loops.
    let (f, c) = (&obj.f, &obj.c);
    let last = k - 1;
    let mut idx = [0usize; MAX_GRID_RELAYS];
    let mut outer = |idx: &mut [usize; MAX_GRID_RELAYS], gain0: f64, num0: f64| {
        for i in 0..=res {
            let x = lvl(last, i);
            let v = Objective::eval(num0 + c[last] * x * x, gain0 + f[last] * x);
            if v < best_v {
                best_v = v;
                idx[last] = i;
                best_idx = *idx;
            }
        }
    };
    match k {
        1 => outer(&mut idx, 0.0, obj.c0),
        2 => {
            for i in 0..=res {
                let x = lvl(0, i);
                idx[0] = i;
                outer(&mut idx, f[0] * x, obj.c0 + c[0] * x * x);
            }
        }
        _ => {
            for i in 0..=res {
                let x0 = lvl(0, i);
                idx[0] = i;
                for j in 0..=res {
                    let x1 = lvl(1, j);
                    idx[1] = j;
                    outer(&mut idx, f[0] * x0 + f[1] * x1, obj.c0 + c[0] * x0 * x0 + c[1] * x1 * x1);
                }
            }
        }
    }
    GridResult { x: (0..k).map(|a| lvl(a, best_idx[a])).collect(), objective: best_v }
}

/// Scales `w` up to the largest multiple that respects the relay limits.
fn to_full_power(w: &mut [Complex64], eff: &EffectiveChannels, cfg: &SystemConfig) {
    let t = match &cfg.relay_constraint {
        RelayConstraint::SumPower(p_r) => {
            let used: f64 = w.iter().zip(&eff.d).map(|(z, d)| z.norm_sqr() * d).sum();
            if used > 0.0 {
                math::sqrt(p_r / used)
            } else {
                0.0
            }
        }
        RelayConstraint::Individual(p) => w
            .iter()
            .zip(&eff.d)
            .zip(p)
            .filter(|((z, _), _)| z.norm_sqr() > 0.0)
            .map(|((z, d), p)| math::sqrt(p / (z.norm_sqr() * d)))
            .fold(f64::INFINITY, f64::min),
    };
    let t = if t.is_finite() { t } else { 0.0 };
    for z in w.iter_mut() {
        *z *= t;
    }
}

fn random_direction<R: Rng>(rng: &mut R, k: usize) -> Vec<Complex64> {
    (0..k).map(|_| complex_gaussian(rng, 1.0)).collect()
}

/// Best profile rate `min(R1 / kappa, R2 / (1 - kappa))` over `samples`
/// random full-power beamformers, the first of which is `w = 0`. Every
/// returned value is achieved by an actual beamformer.
pub fn random_search_rate(eff: &EffectiveChannels, cfg: &SystemConfig, profile: RateProfile, samples: usize, seed: u64) -> Result<f64> {
    let k = eff.len();
    let mut best = profile.profile_rate(rate_pair(&BeamVector::zeros(k), eff, cfg)?);
    let mut rng = rng_from_seed(seed);
    for _ in 1..samples {
        let mut w = random_direction(&mut rng, k);
        to_full_power(&mut w, eff, cfg);
        let v = profile.profile_rate(rate_pair(&BeamVector::new(w), eff, cfg)?);
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

/// Rate pairs of `samples` random feasible beamformers: the zero vector,
/// then random directions at a uniformly random fraction of full power.
pub fn enumerate_rate_cloud(eff: &EffectiveChannels, cfg: &SystemConfig, samples: usize, seed: u64) -> Result<Vec<RatePoint>> {
    let k = eff.len();
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(samples);
    if samples == 0 {
        return Ok(out);
    }
    out.push(rate_pair(&BeamVector::zeros(k), eff, cfg)?);
    for _ in 1..samples {
        let mut w = random_direction(&mut rng, k);
        to_full_power(&mut w, eff, cfg);
        let frac = math::sqrt(rng.random::<f64>());
        for z in w.iter_mut() {
            *z *= frac;
        }
        out.push(rate_pair(&BeamVector::new(w), eff, cfg)?);
    }
    Ok(out)
}

/// Relay sum power needed by the direction `u` to meet both targets, or
/// `None` if no multiple of `u` does.
pub fn power_for_direction(u: &[Complex64], eff: &EffectiveChannels, cfg: &SystemConfig, targets: SnrTargets) -> Option<f64> {
    let g1: f64 = u.iter().zip(&eff.f2).map(|(w, f)| f * w).sum::<Complex64>().norm_sqr();
    let g2: f64 = u.iter().zip(&eff.f1).map(|(w, f)| f * w).sum::<Complex64>().norm_sqr();
    let quad = |a: &[f64]| -> f64 { u.iter().zip(a).map(|(w, a)| w.norm_sqr() * a).sum() };
    let need = |gamma: f64, p: f64, g: f64, noise: f64, a: f64| -> Option<f64> {
        if gamma == 0.0 {
            return Some(0.0);
        }
        let margin = p * g - gamma * a;
        (margin > 0.0).then(|| gamma * noise / margin)
    };
    let t1 = need(targets.gamma1, cfg.p_s2, g1, cfg.sigma_s1, quad(&eff.a1))?;
    let t2 = need(targets.gamma2, cfg.p_s1, g2, cfg.sigma_s2, quad(&eff.a2))?;
    Some(t1.max(t2) * quad(&eff.d))
}

/// Least relay sum power meeting `targets` found by random restarts with a
/// shrinking-step local search. An upper bound on the true minimum.
pub fn min_power_search(eff: &EffectiveChannels, cfg: &SystemConfig, targets: SnrTargets, restarts: usize, seed: u64) -> Option<f64> {
    let k = eff.len();
    let mut rng = rng_from_seed(seed);
    let mut best: Option<f64> = None;
    for _ in 0..restarts.max(1) {
        let mut u = random_direction(&mut rng, k);
        let mut cur = power_for_direction(&u, eff, cfg, targets).unwrap_or(f64::INFINITY);
        let mut step = 0.5;
        while step > 1e-7 {
            let mut improved = false;
            for _ in 0..8 * k {
                let cand: Vec<Complex64> = u.iter().map(|z| z + complex_gaussian(&mut rng, step * step)).collect();
                if let Some(p) = power_for_direction(&cand, eff, cfg, targets) {
                    if p < cur {
                        cur = p;
                        u = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if cur.is_finite() && best.map_or(true, |b| cur < b) {
            best = Some(cur);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{effective_channels, ChannelRealization};
    use crate::reciprocal::{wsis_objective, wsismin_individual, wsismin_sum_power};
    use crate::sampling::{gen_channels, ChannelProfile};
    use alloc::vec;

    fn setup(k: usize, seed: u64, c: RelayConstraint) -> (SystemConfig, EffectiveChannels) {
        let ch = gen_channels(k, seed, ChannelProfile::Symmetric, true);
        let cfg = SystemConfig::unit_noise(k, 1.0, 1.0, c);
        let eff = effective_channels(&ch, &cfg).unwrap();
        (cfg, eff)
    }

    fn w(mu: f64) -> WsisWeight {
        WsisWeight::new(mu).unwrap()
    }

    #[test]
    fn refuses_large_or_coarse() {
        let (cfg, eff) = setup(4, 1, RelayConstraint::SumPower(4.0));
        assert!(matches!(grid_wsismin(&eff, &cfg, w(0.5), 100), Err(Error::TooLarge { .. })));
        let (cfg, eff) = setup(2, 1, RelayConstraint::SumPower(4.0));
        assert!(grid_wsismin(&eff, &cfg, w(0.5), 99).is_err());
    }

    #[test]
    fn single_relay_matches_closed_form() {
        let one = Complex64::new(1.0, 0.0);
        let ch = ChannelRealization::reciprocal(vec![one], vec![one]).unwrap();
        let cfg = SystemConfig::unit_noise(1, 1.0, 1.0, RelayConstraint::SumPower(3.0));
        let eff = effective_channels(&ch, &cfg).unwrap();
        let g = grid_wsismin(&eff, &cfg, w(0.5), 100).unwrap();
        let cf = wsismin_sum_power(&eff, &cfg, w(0.5)).unwrap();
        assert!((g.x[0] - cf.x[0]).abs() < 1e-15);
        assert!((g.objective - wsis_objective(&cf.x, &eff, &cfg, w(0.5)).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn two_relay_sum_power_agreement() {
        for seed in 0..10 {
            let (cfg, eff) = setup(2, seed, RelayConstraint::SumPower(5.0));
            for mu in [0.2, 0.5, 0.8] {
                let g = grid_wsismin(&eff, &cfg, w(mu), 400).unwrap();
                let cf = wsismin_sum_power(&eff, &cfg, w(mu)).unwrap();
                let v = wsis_objective(&cf.x, &eff, &cfg, w(mu)).unwrap();
                assert!(v <= g.objective * (1.0 + 1e-12));
                assert!(g.objective <= v * (1.0 + 1e-3));
            }
        }
    }

    #[test]
    fn three_relay_individual_agreement() {
        for seed in 0..3 {
            let (cfg, eff) = setup(3, seed, RelayConstraint::Individual(vec![1.0, 2.5, 0.5]));
            let g = grid_wsismin(&eff, &cfg, w(0.4), 200).unwrap();
            let cf = wsismin_individual(&eff, &cfg, w(0.4)).unwrap();
            let v = wsis_objective(&cf.x, &eff, &cfg, w(0.4)).unwrap();
            assert!(v <= g.objective * (1.0 + 1e-12));
            assert!(g.objective <= v * (1.0 + 1e-3));
        }
    }

    #[test]
    fn refinement_never_hurts() {
        let (cfg, eff) = setup(2, 3, RelayConstraint::Individual(vec![1.0, 2.0]));
        let coarse = grid_wsismin(&eff, &cfg, w(0.3), 100).unwrap();
        let fine = grid_wsismin(&eff, &cfg, w(0.3), 200).unwrap();
        assert!(fine.objective <= coarse.objective);
        let (cfg, eff) = setup(3, 3, RelayConstraint::SumPower(2.0));
        let coarse = grid_wsismin(&eff, &cfg, w(0.3), 100).unwrap();
        let fine = grid_wsismin(&eff, &cfg, w(0.3), 200).unwrap();
        assert!(fine.objective <= coarse.objective);
    }

    #[test]
    fn zero_seed_search_is_zero() {
        let (cfg, eff) = setup(2, 1, RelayConstraint::SumPower(4.0));
        let p = RateProfile::new(0.5).unwrap();
        assert_eq!(random_search_rate(&eff, &cfg, p, 1, 7).unwrap(), 0.0);
        assert!(random_search_rate(&eff, &cfg, p, 100, 7).unwrap() > 0.0);
        assert_eq!(
            random_search_rate(&eff, &cfg, p, 100, 7).unwrap(),
            random_search_rate(&eff, &cfg, p, 100, 7).unwrap()
        );
    }

    #[test]
    fn cloud_is_feasible_and_starts_at_origin() {
        let (cfg, eff) = setup(2, 1, RelayConstraint::Individual(vec![1.0, 3.0]));
        let cloud = enumerate_rate_cloud(&eff, &cfg, 200, 3).unwrap();
        assert_eq!(cloud[0], RatePoint::ORIGIN);
        assert_eq!(cloud.len(), 200);
        assert_eq!(cloud, enumerate_rate_cloud(&eff, &cfg, 200, 3).unwrap());
    }

    #[test]
    fn cloud_respects_one_way_maxima() {
        let (cfg, eff) = setup(2, 6, RelayConstraint::SumPower(4.0));
        let cloud = enumerate_rate_cloud(&eff, &cfg, 5000, 11).unwrap();
        let r1_max = math::half_log_rate(
            cfg.p_s2 * (0..2).map(|i| eff.f2[i].norm_sqr() / (cfg.sigma_s1 * eff.d[i] / 4.0 + eff.a1[i])).sum::<f64>(),
        );
        assert!(cloud.iter().all(|p| p.r1 <= r1_max + 1e-12));
    }
}
