//! Distributed beamforming for amplify-and-forward two-way relay networks.
//!
//! Two single-antenna sources exchange messages through `K` single-antenna
//! relays using analog network coding. This crate computes optimal relay
//! weight vectors and the two-dimensional achievable rate region:
//!
//! * [`reciprocal`]: closed-form weighted inverse-SNR minimizers for
//!   reciprocal (TDD) channels, under a sum-power or per-relay power limit,
//!   together with the per-relay "partially distributed" weight rules.
//! * [`nonreciprocal`]: rate-profile bisection over semidefinite relaxations
//!   for non-reciprocal channels, with exact rank-one reconstruction
//!   (sum power) or randomized rounding (per-relay power).
//! * [`sdp`]: a small dense interior-point solver for Hermitian trace SDPs.
//! * [`region`]: region sweeps, Pareto filtering, planar hulls and the
//!   inverse-SNR/rate mapping properties.
//! * [`heuristics`] and [`oracle`]: cheap sub-optimal schemes and brute-force
//!   baselines.
//!
//! The crate is `no_std` and only needs `alloc`. All randomness is driven by
//! explicit `u64` seeds.
#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod channel;
pub mod error;
pub mod heuristics;
pub mod link;
pub mod nonreciprocal;
pub mod oracle;
pub mod reciprocal;
pub mod region;
pub mod sampling;
pub mod sdp;

mod cmat;
mod math;

pub use channel::{
    effective_channels, rate_pair, relay_powers, snr_pair, BeamVector, ChannelRealization,
    EffectiveChannels, InverseSnrPoint, RatePoint, RelayConstraint, RelayPowers, SystemConfig,
};
pub use cmat::CMatrix;
pub use error::{Error, Result};
pub use num_complex::Complex64;
