//! Seeded channel generation.

use alloc::vec::Vec;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::ChannelRealization;
use crate::math;

/// Variance layout of the CSCG channel draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelProfile {
    /// Every coefficient is `CN(0, 1)`.
    #[default]
    Symmetric,
    /// `h1`, `h1r ~ CN(0, 1)` and `h2_i`, `h2r_i ~ CN(0, i)` for 1-based relay `i`.
    Asymmetric,
}

impl ChannelProfile {
    fn variances(self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let ones = alloc::vec![1.0; k];
        match self {
            ChannelProfile::Symmetric => (ones.clone(), ones),
            ChannelProfile::Asymmetric => (ones, (1..=k).map(|i| i as f64).collect()),
        }
    }
}

/// Draws one `CN(0, variance)` sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = math::sqrt(0.5 * variance);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Seeded deterministic generator used everywhere in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws `h1`, `h2`, `h1r`, `h2r` in that order. With `reciprocal` the
/// backward draws are discarded and replaced by the forward channels, so a
/// reciprocal and a non-reciprocal realization from the same seed share
/// their forward channels.
pub fn gen_channels(k: usize, seed: u64, profile: ChannelProfile, reciprocal: bool) -> ChannelRealization {
    let mut rng = rng_from_seed(seed);
    let (var1, var2) = profile.variances(k);
    let mut draw = |var: &[f64]| -> Vec<Complex64> { var.iter().map(|&v| complex_gaussian(&mut rng, v)).collect() };
    let h1 = draw(&var1);
    let h2 = draw(&var2);
    let h1r = draw(&var1);
    let h2r = draw(&var2);
    if reciprocal {
        ChannelRealization {
            h1r: h1.clone(),
            h2r: h2.clone(),
            h1,
            h2,
            reciprocal: true,
        }
    } else {
        ChannelRealization {
            h1,
            h2,
            h1r,
            h2r,
            reciprocal: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_flag_copies_forward_channels() {
        let ch = gen_channels(4, 9, ChannelProfile::Symmetric, true);
        assert!(ch.reciprocal);
        assert_eq!(ch.h1, ch.h1r);
        assert_eq!(ch.h2, ch.h2r);
        ch.validate().unwrap();
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = gen_channels(5, 42, ChannelProfile::Asymmetric, false);
        let b = gen_channels(5, 42, ChannelProfile::Asymmetric, false);
        assert_eq!(a, b);
        let c = gen_channels(5, 43, ChannelProfile::Asymmetric, false);
        assert_ne!(a, c);
    }

    #[test]
    fn matched_draws_share_forward_channels() {
        let r = gen_channels(3, 5, ChannelProfile::Symmetric, true);
        let n = gen_channels(3, 5, ChannelProfile::Symmetric, false);
        assert_eq!(r.h1, n.h1);
        assert_eq!(r.h2, n.h2);
        assert_ne!(r.h1r, n.h1r);
    }

    #[test]
    fn sample_variance_close_to_profile() {
        let n = 10_000;
        let mut acc = [0.0f64; 4];
        for s in 0..n {
            let ch = gen_channels(1, s, ChannelProfile::Symmetric, false);
            acc[0] += ch.h1[0].norm_sqr();
            acc[1] += ch.h2[0].norm_sqr();
            acc[2] += ch.h1r[0].norm_sqr();
            acc[3] += ch.h2r[0].norm_sqr();
        }
        for a in acc {
            let var = a / n as f64;
            assert!((var - 1.0).abs() < 0.05, "sample variance {var}");
        }
    }

    #[test]
    fn asymmetric_profile_scales_second_source() {
        let n = 4_000;
        let k = 3;
        let mut acc = alloc::vec![0.0f64; k];
        for s in 0..n {
            let ch = gen_channels(k, s, ChannelProfile::Asymmetric, false);
            for (a, h) in acc.iter_mut().zip(&ch.h2) {
                *a += h.norm_sqr();
            }
        }
        for (i, a) in acc.iter().enumerate() {
            let var = a / n as f64;
            let expected = (i + 1) as f64;
            assert!((var / expected - 1.0).abs() < 0.08, "relay {i}: {var}");
        }
    }
}
