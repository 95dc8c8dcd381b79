use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use twrbf::config::{db_to_linear, ExperimentConfig, OutputFormat, Profile};
use twrbf::experiment::run_experiment;
use twrbf::io::{self, to_pairs};
use twrbf_core::channel::{
    effective_channels, rate_pair, relay_powers, snr_pair, BeamVector, ChannelRealization, RelayConstraint, SystemConfig,
};
use twrbf_core::link::simulate_link;
use twrbf_core::nonreciprocal::{bisect_sum_power, solve_nonreciprocal, BisectionConfig, RateProfile};
use twrbf_core::oracle::{grid_wsismin, random_search_rate};
use twrbf_core::reciprocal::{optimal_beam, wsis_objective, wsismin_individual, wsismin_sum_power, WsisWeight};
use twrbf_core::sampling::gen_channels;

/// Distributed beamforming and rate regions for two-way relay networks.
#[derive(Parser)]
#[command(name = "twrbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo rate-region experiment from a JSON config.
    Region(RegionArgs),
    /// Optimal beamformer for one channel realization and one weight or profile.
    Solve(SolveArgs),
    /// Compare an optimized result against a brute-force baseline.
    Oracle(OracleArgs),
    /// Compare simulated SNRs of a beamformer with the analytic formulas.
    Simulate(SimulateArgs),
    /// Draw a channel realization and write it as JSON.
    Channels(ChannelsArgs),
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output path (without extension).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Both => OutputFormat::Both,
        }
    }
}

/// Source powers, noise variances and the relay power limit.
#[derive(Args)]
struct SystemArgs {
    #[arg(long, default_value_t = 0.0)]
    ps1_db: f64,
    #[arg(long, default_value_t = 0.0)]
    ps2_db: f64,
    /// Relay sum-power limit in dB.
    #[arg(long, conflicts_with = "individual_w")]
    sum_power_db: Option<f64>,
    /// Per-relay power limits in watts, comma separated.
    #[arg(long, value_delimiter = ',')]
    individual_w: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    relay_noise: f64,
    #[arg(long, default_value_t = 1.0)]
    s1_noise: f64,
    #[arg(long, default_value_t = 1.0)]
    s2_noise: f64,
}

impl SystemArgs {
    fn system(&self, k: usize) -> Result<SystemConfig> {
        let relay_constraint = match (&self.sum_power_db, &self.individual_w) {
            (Some(db), None) => RelayConstraint::SumPower(db_to_linear(*db)),
            (None, Some(p)) => RelayConstraint::Individual(p.clone()),
            _ => bail!("give exactly one of --sum-power-db and --individual-w"),
        };
        let cfg = SystemConfig {
            p_s1: db_to_linear(self.ps1_db),
            p_s2: db_to_linear(self.ps2_db),
            sigma_relay: vec![self.relay_noise; k],
            sigma_s1: self.s1_noise,
            sigma_s2: self.s2_noise,
            relay_constraint,
        };
        cfg.validate(k)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct BisectionArgs {
    /// Bisection stopping width in bits.
    #[arg(long, default_value_t = twrbf_core::nonreciprocal::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = twrbf_core::sdp::DEFAULT_TOLERANCE)]
    sdp_tol: f64,
    /// Random candidates for per-relay rounding.
    #[arg(long, default_value_t = twrbf_core::nonreciprocal::DEFAULT_CANDIDATES)]
    candidates: usize,
}

impl BisectionArgs {
    fn config(&self) -> BisectionConfig {
        BisectionConfig {
            epsilon: self.epsilon,
            sdp_tol: self.sdp_tol,
            candidates: self.candidates,
            ..BisectionConfig::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    ReciprocalSum,
    ReciprocalInd,
    NonrecipSum,
    NonrecipInd,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    channels: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Weight on S1's inverse SNR (reciprocal modes).
    #[arg(long)]
    mu: Option<f64>,
    /// Share of the sum rate assigned to S1 (non-reciprocal modes).
    #[arg(long)]
    kappa: Option<f64>,
    /// Seed for the randomized rounding of `nonrecip-ind`.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    bisection: BisectionArgs,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    channels: PathBuf,
    /// Check the closed-form minimizer at this weight against a grid search.
    #[arg(long, conflicts_with = "kappa")]
    mu: Option<f64>,
    #[arg(long, default_value_t = 400)]
    resolution: usize,
    /// Check the relaxation bound at this profile against random search.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    bisection: BisectionArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    channels: PathBuf,
    /// Beamformer file: `{"w": [[re, im], ...]}` or the bare array.
    #[arg(long)]
    w: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    symbols: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    system: SystemArgs,
}

#[derive(Args)]
struct ChannelsArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ProfileArg::Symmetric)]
    profile: ProfileArg,
    #[arg(long)]
    reciprocal: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Symmetric,
    Asymmetric,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => io::write_json(path, value)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{}", serde_json::to_string_pretty(value)?)?;
        }
    }
    Ok(())
}

fn load_channels(path: &Path) -> Result<ChannelRealization> {
    io::read_channels(path).with_context(|| format!("reading channels from {}", path.display()))
}

fn region(args: RegionArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(path) = args.output {
        let format = args.format.map(Into::into).or(cfg.output.as_ref().map(|o| o.format)).unwrap_or_default();
        cfg.output = Some(twrbf::config::Output { path, format });
    } else if let (Some(f), Some(out)) = (args.format, cfg.output.as_mut()) {
        out.format = f.into();
    }
    let dataset = run_experiment(&cfg)?;
    let failures = dataset.failures().count();
    match &cfg.output {
        Some(out) => {
            for path in io::write_dataset(&out.path, out.format, &cfg, &dataset)? {
                eprintln!("wrote {}", path.display());
            }
            eprintln!(
                "hull area {:.6} bits^2 from {} realizations, {} failed solves",
                dataset.hull_area, cfg.n_realizations, failures
            );
        }
        None => emit(&io::Envelope { config: cfg, dataset }, None)?,
    }
    Ok(())
}

fn beam_report(w: &BeamVector, ch: &ChannelRealization, cfg: &SystemConfig) -> Result<serde_json::Value> {
    let eff = effective_channels(ch, cfg)?;
    let rates = rate_pair(w, &eff, cfg)?;
    let (snr1, snr2) = snr_pair(w, &eff, cfg)?;
    let power = relay_powers(w, ch, cfg)?;
    Ok(json!({
        "w": to_pairs(&w.w),
        "rates": rates,
        "snr": [snr1, snr2],
        "relay_power": { "per_relay": power.per_relay, "total": power.total },
    }))
}

fn solve(args: SolveArgs) -> Result<()> {
    let ch = load_channels(&args.channels)?;
    let cfg = args.system.system(ch.len())?;
    let sum = cfg.relay_constraint.is_sum_power();
    match args.mode {
        Mode::ReciprocalSum | Mode::NonrecipSum if !sum => bail!("this mode needs --sum-power-db"),
        Mode::ReciprocalInd | Mode::NonrecipInd if sum => bail!("this mode needs --individual-w"),
        _ => {}
    }
    let eff = effective_channels(&ch, &cfg)?;
    let mut report = match args.mode {
        Mode::ReciprocalSum | Mode::ReciprocalInd => {
            let Some(mu) = args.mu else { bail!("reciprocal modes need --mu") };
            if !ch.reciprocal {
                bail!("reciprocal modes need reciprocal channels");
            }
            let weight = WsisWeight::new(mu)?;
            let w = optimal_beam(&ch, &eff, &cfg, weight)?;
            let mut r = beam_report(&w, &ch, &cfg)?;
            r["mu"] = json!(mu);
            r["objective"] = json!(wsis_objective(&w.amplitudes(), &eff, &cfg, weight)?);
            r
        }
        Mode::NonrecipSum | Mode::NonrecipInd => {
            let Some(kappa) = args.kappa else { bail!("non-reciprocal modes need --kappa") };
            let seed = match (args.mode, args.seed) {
                (Mode::NonrecipInd, None) => bail!("nonrecip-ind is randomized and needs --seed"),
                (_, s) => s.unwrap_or(0),
            };
            let sol = solve_nonreciprocal(&ch, &cfg, RateProfile::new(kappa)?, &args.bisection.config(), seed)?;
            let mut r = beam_report(&sol.w, &ch, &cfg)?;
            r["kappa"] = json!(kappa);
            r["r_star"] = json!(sol.r_star);
            r["bisection_steps"] = json!(sol.bisection.solves());
            r
        }
    };
    report["mode"] = json!(args.mode);
    emit(&report, args.out.as_deref())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let ch = load_channels(&args.channels)?;
    let cfg = args.system.system(ch.len())?;
    let eff = effective_channels(&ch, &cfg)?;
    let report = match (args.mu, args.kappa) {
        (Some(mu), None) => {
            let weight = WsisWeight::new(mu)?;
            let closed = match cfg.relay_constraint {
                RelayConstraint::SumPower(_) => wsis_objective(&wsismin_sum_power(&eff, &cfg, weight)?.x, &eff, &cfg, weight)?,
                RelayConstraint::Individual(_) => wsis_objective(&wsismin_individual(&eff, &cfg, weight)?.x, &eff, &cfg, weight)?,
            };
            let grid = grid_wsismin(&eff, &cfg, weight, args.resolution)?;
            json!({
                "check": "weighted-inverse-snr",
                "mu": mu,
                "resolution": args.resolution,
                "closed_form_objective": closed,
                "grid_objective": grid.objective,
                "grid_x": grid.x,
                "relative_excess": (closed - grid.objective) / grid.objective,
            })
        }
        (None, Some(kappa)) => {
            let Some(seed) = args.seed else { bail!("random search needs --seed") };
            if !cfg.relay_constraint.is_sum_power() {
                bail!("the profile-rate check needs --sum-power-db");
            }
            let profile = RateProfile::new(kappa)?;
            let bis = args.bisection.config();
            let b = bisect_sum_power(&eff, &cfg, profile, &bis)?;
            let found = random_search_rate(&eff, &cfg, profile, args.samples, seed)?;
            json!({
                "check": "profile-rate",
                "kappa": kappa,
                "samples": args.samples,
                "seed": seed,
                "r_star": b.r_star,
                "epsilon": bis.epsilon,
                "random_search_rate": found,
                "within_bound": found <= b.r_star + bis.epsilon,
                "ratio": if b.r_star > 0.0 { found / b.r_star } else { f64::NAN },
            })
        }
        _ => bail!("give exactly one of --mu and --kappa"),
    };
    emit(&report, None)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let ch = load_channels(&args.channels)?;
    let cfg = args.system.system(ch.len())?;
    let w = io::read_beam(&args.w).with_context(|| format!("reading beamformer from {}", args.w.display()))?;
    let emp = simulate_link(&w, &ch, &cfg, args.symbols, args.seed)?;
    let (a1, a2) = snr_pair(&w, &effective_channels(&ch, &cfg)?, &cfg)?;
    let rel = |e: f64, a: f64| if a > 0.0 { (e - a) / a } else { f64::NAN };
    emit(
        &json!({
            "symbols": emp.symbols,
            "seed": args.seed,
            "empirical_snr": [emp.snr1, emp.snr2],
            "analytic_snr": [a1, a2],
            "relative_error": [rel(emp.snr1, a1), rel(emp.snr2, a2)],
        }),
        None,
    )
}

fn channels(args: ChannelsArgs) -> Result<()> {
    if args.k == 0 {
        bail!("--k must be at least 1");
    }
    let profile = match args.profile {
        ProfileArg::Symmetric => Profile::Symmetric,
        ProfileArg::Asymmetric => Profile::Asymmetric,
    };
    let ch = gen_channels(args.k, args.seed, profile.into(), args.reciprocal);
    emit(&io::ChannelFile::from_realization(&ch), args.out.as_deref())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Region(a) => region(a),
        Command::Solve(a) => solve(a),
        Command::Oracle(a) => oracle(a),
        Command::Simulate(a) => simulate(a),
        Command::Channels(a) => channels(a),
    }
}
