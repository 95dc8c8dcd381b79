//! Experiment configuration, read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twrbf_core::channel::{RelayConstraint, SystemConfig};
use twrbf_core::nonreciprocal::BisectionConfig;
use twrbf_core::region::{default_kappa_grid, default_mu_grid};
use twrbf_core::sampling::ChannelProfile;
use twrbf_core::sdp;

use crate::error::{Error, Result};

/// Converts a power in dB relative to unit noise into linear units.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    #[default]
    Symmetric,
    Asymmetric,
}

impl From<Profile> for ChannelProfile {
    fn from(p: Profile) -> Self {
        match p {
            Profile::Symmetric => ChannelProfile::Symmetric,
            Profile::Asymmetric => ChannelProfile::Asymmetric,
        }
    }
}

/// Relay power limit as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RelayPower {
    /// Total relay power in dB.
    SumDb(f64),
    /// Per-relay limits in watts (linear units).
    IndividualW(Vec<f64>),
}

impl RelayPower {
    pub fn to_constraint(&self) -> RelayConstraint {
        match self {
            RelayPower::SumDb(db) => RelayConstraint::SumPower(db_to_linear(*db)),
            RelayPower::IndividualW(p) => RelayConstraint::Individual(p.clone()),
        }
    }
}

/// Noise variances at the relays and the two sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    /// One value shared by all relays, or one per relay.
    #[serde(default = "unit_relay_noise")]
    pub relay: RelayNoise,
    #[serde(default = "one")]
    pub s1: f64,
    #[serde(default = "one")]
    pub s2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RelayNoise {
    Shared(f64),
    PerRelay(Vec<f64>),
}

impl Default for Noise {
    fn default() -> Self {
        Noise { relay: unit_relay_noise(), s1: 1.0, s2: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

fn unit_relay_noise() -> RelayNoise {
    RelayNoise::Shared(1.0)
}

/// Which optimizer produces boundary points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Closed forms on reciprocal channels, the SDP pipeline otherwise.
    #[default]
    Auto,
    ClosedForm,
    Sdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// Path without extension; `.csv` and/or `.json` are appended.
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k_relays: usize,
    pub seed: u64,
    pub n_realizations: usize,
    pub reciprocal: bool,
    #[serde(default)]
    pub channel_profile: Profile,
    /// `[P_S1, P_S2]` in dB.
    #[serde(default)]
    pub source_power_db: [f64; 2],
    pub relay_constraint: RelayPower,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default = "default_mu_grid")]
    pub mu_grid: Vec<f64>,
    #[serde(default = "default_kappa_grid")]
    pub kappa_grid: Vec<f64>,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_sdp_tol")]
    pub sdp_tol: f64,
    #[serde(default = "default_candidates")]
    pub randomization_candidates: usize,
    /// Also evaluate equal-power (sum limit) or max-power (per-relay limits)
    /// beamforming.
    #[serde(default = "yes")]
    pub heuristics: bool,
    /// Emit one hull per realization next to the averaged one.
    #[serde(default)]
    pub per_realization_hulls: bool,
    #[serde(default)]
    pub output: Option<Output>,
}

fn default_epsilon() -> f64 {
    twrbf_core::nonreciprocal::DEFAULT_EPSILON
}

fn default_sdp_tol() -> f64 {
    sdp::DEFAULT_TOLERANCE
}

fn default_candidates() -> usize {
    twrbf_core::nonreciprocal::DEFAULT_CANDIDATES
}

fn yes() -> bool {
    true
}

/// Which pipeline a validated config resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    ClosedForm,
    Sdp,
}

impl ExperimentConfig {
    /// A config with the defaults of every optional field.
    pub fn new(k_relays: usize, seed: u64, n_realizations: usize, reciprocal: bool, relay_constraint: RelayPower) -> Self {
        ExperimentConfig {
            k_relays,
            seed,
            n_realizations,
            reciprocal,
            channel_profile: Profile::default(),
            source_power_db: [0.0, 0.0],
            relay_constraint,
            noise: Noise::default(),
            mu_grid: default_mu_grid(),
            kappa_grid: default_kappa_grid(),
            solver: Solver::default(),
            epsilon: default_epsilon(),
            sdp_tol: default_sdp_tol(),
            randomization_candidates: default_candidates(),
            heuristics: true,
            per_realization_hulls: false,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn pipeline(&self) -> Pipeline {
        match self.solver {
            Solver::ClosedForm => Pipeline::ClosedForm,
            Solver::Sdp => Pipeline::Sdp,
            Solver::Auto if self.reciprocal => Pipeline::ClosedForm,
            Solver::Auto => Pipeline::Sdp,
        }
    }

    /// Sweep grid of the resolved pipeline.
    pub fn grid(&self) -> &[f64] {
        match self.pipeline() {
            Pipeline::ClosedForm => &self.mu_grid,
            Pipeline::Sdp => &self.kappa_grid,
        }
    }

    pub fn system(&self) -> SystemConfig {
        let sigma_relay = match &self.noise.relay {
            RelayNoise::Shared(v) => vec![*v; self.k_relays],
            RelayNoise::PerRelay(v) => v.clone(),
        };
        SystemConfig {
            p_s1: db_to_linear(self.source_power_db[0]),
            p_s2: db_to_linear(self.source_power_db[1]),
            sigma_relay,
            sigma_s1: self.noise.s1,
            sigma_s2: self.noise.s2,
            relay_constraint: self.relay_constraint.to_constraint(),
        }
    }

    pub fn bisection(&self) -> BisectionConfig {
        BisectionConfig {
            epsilon: self.epsilon,
            sdp_tol: self.sdp_tol,
            candidates: self.randomization_candidates,
            ..BisectionConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k_relays == 0 {
            return bad("k_relays must be at least 1".into());
        }
        if self.n_realizations == 0 {
            return bad("n_realizations must be at least 1".into());
        }
        if self.source_power_db.iter().any(|p| !p.is_finite()) {
            return bad("source powers must be finite".into());
        }
        if let RelayNoise::PerRelay(v) = &self.noise.relay {
            if v.len() != self.k_relays {
                return bad(format!("{} relay noise variances for {} relays", v.len(), self.k_relays));
            }
        }
        if let RelayPower::IndividualW(p) = &self.relay_constraint {
            if p.len() != self.k_relays {
                return bad(format!("{} per-relay limits for {} relays", p.len(), self.k_relays));
            }
        }
        if self.solver == Solver::ClosedForm && !self.reciprocal {
            return bad("the closed-form solver needs reciprocal channels".into());
        }
        for (name, grid) in [("mu_grid", &self.mu_grid), ("kappa_grid", &self.kappa_grid)] {
            if grid.is_empty() || grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad(format!("{name} must be a nonempty list of values in [0, 1]"));
            }
        }
        if !(self.sdp_tol >= 1e-10 && self.sdp_tol <= 1e-4) {
            return bad(format!("sdp_tol must lie in [1e-10, 1e-4], got {}", self.sdp_tol));
        }
        if let Some(out) = &self.output {
            if out.path.as_os_str().is_empty() {
                return bad("output path is empty".into());
            }
        }
        self.bisection().validate()?;
        self.system().validate(self.k_relays)?;
        Ok(())
    }
}
