//! Monte Carlo rate-region experiments.
//!
//! Each realization draws its channels from a seed taken off a master
//! generator, so realization `i` is the same regardless of how many others
//! run or in which order the work pool finishes them. Boundary points are
//! averaged per grid value across realizations, then hulled.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twrbf_core::channel::{
    effective_channels, rate_pair, ChannelRealization, RatePoint, RelayConstraint, SystemConfig,
};
use twrbf_core::heuristics::{equal_power, max_power};
use twrbf_core::nonreciprocal::{solve_nonreciprocal, BisectionConfig, RateProfile};
use twrbf_core::reciprocal::{optimal_beam, WsisWeight};
use twrbf_core::region::{polygon_area, region_hull};
use twrbf_core::sampling::{gen_channels, rng_from_seed};

use crate::config::{ExperimentConfig, Pipeline};
use crate::error::Result;

/// What a dataset row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    /// Boundary point for one grid value.
    Boundary,
    /// Vertex of a convex hull, counter-clockwise from the origin.
    Hull,
    Heuristic,
    /// A solve that failed; `note` carries the error.
    Failure,
}

/// One line of the output table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// `mu` for closed-form sweeps, `kappa` for the SDP pipeline.
    pub mu_or_kappa: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub scheme: String,
    pub realization_count: usize,
    pub seed: u64,
    pub kind: RowKind,
    /// Set on rows that belong to a single realization.
    pub realization: Option<usize>,
    pub note: Option<String>,
}

/// Seeds of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationSeeds {
    pub channel: u64,
    pub randomization: u64,
}

/// Seeds for the first `n` realizations under a master seed.
pub fn realization_seeds(master: u64, n: usize) -> Vec<RealizationSeeds> {
    let mut rng = rng_from_seed(master);
    (0..n)
        .map(|_| RealizationSeeds { channel: rng.next_u64(), randomization: rng.next_u64() })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub parameter: Option<f64>,
    pub message: String,
}

/// Everything computed for one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationResult {
    pub index: usize,
    pub seeds: RealizationSeeds,
    pub channels: ChannelRealization,
    /// One entry per grid value; `None` where the solve failed.
    pub points: Vec<Option<RatePoint>>,
    pub heuristic: Option<RatePoint>,
    pub failures: Vec<Failure>,
}

/// Averaged boundary point for one grid value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedPoint {
    pub parameter: f64,
    pub rate: RatePoint,
    /// Realizations that contributed.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub pipeline: Pipeline,
    /// Name of the optimal scheme (`closed-form` or `sdp`).
    pub scheme: String,
    pub seed: u64,
    pub n_realizations: usize,
    pub boundary: Vec<AveragedPoint>,
    pub hull: Vec<RatePoint>,
    pub hull_area: f64,
    /// Name and averaged rate of the heuristic, if evaluated.
    pub heuristic: Option<(String, RatePoint)>,
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.kind == RowKind::Failure)
    }
}

pub fn heuristic_name(constraint: &RelayConstraint) -> &'static str {
    match constraint {
        RelayConstraint::SumPower(_) => "equal-power",
        RelayConstraint::Individual(_) => "max-power",
    }
}

fn scheme_name(p: Pipeline) -> &'static str {
    match p {
        Pipeline::ClosedForm => "closed-form",
        Pipeline::Sdp => "sdp",
    }
}

fn boundary_point(
    ch: &ChannelRealization,
    sys: &SystemConfig,
    pipeline: Pipeline,
    parameter: f64,
    bis: &BisectionConfig,
    seed: u64,
) -> twrbf_core::Result<RatePoint> {
    match pipeline {
        Pipeline::ClosedForm => {
            let eff = effective_channels(ch, sys)?;
            let w = optimal_beam(ch, &eff, sys, WsisWeight::new(parameter)?)?;
            rate_pair(&w, &eff, sys)
        }
        Pipeline::Sdp => Ok(solve_nonreciprocal(ch, sys, RateProfile::new(parameter)?, bis, seed)?.rates),
    }
}

fn heuristic_point(ch: &ChannelRealization, sys: &SystemConfig) -> twrbf_core::Result<RatePoint> {
    let w = match sys.relay_constraint {
        RelayConstraint::SumPower(_) => equal_power(ch, sys)?,
        RelayConstraint::Individual(_) => max_power(ch, sys)?,
    };
    rate_pair(&w, &effective_channels(ch, sys)?, sys)
}

/// Runs one realization. Grid value `j` of the SDP pipeline draws its
/// randomization from `seeds.randomization + j`.
pub fn run_realization(cfg: &ExperimentConfig, index: usize, seeds: RealizationSeeds) -> RealizationResult {
    let sys = cfg.system();
    let bis = cfg.bisection();
    let pipeline = cfg.pipeline();
    let channels = gen_channels(cfg.k_relays, seeds.channel, cfg.channel_profile.into(), cfg.reciprocal);
    let mut failures = Vec::new();
    let points = cfg
        .grid()
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let seed = seeds.randomization.wrapping_add(j as u64);
            boundary_point(&channels, &sys, pipeline, v, &bis, seed)
                .map_err(|e| failures.push(Failure { parameter: Some(v), message: e.to_string() }))
                .ok()
        })
        .collect();
    let heuristic = if cfg.heuristics {
        heuristic_point(&channels, &sys)
            .map_err(|e| failures.push(Failure { parameter: None, message: e.to_string() }))
            .ok()
    } else {
        None
    };
    RealizationResult { index, seeds, channels, points, heuristic, failures }
}

/// Runs every realization on the rayon pool, in index order.
pub fn run_realizations(cfg: &ExperimentConfig) -> Result<Vec<RealizationResult>> {
    cfg.validate()?;
    let seeds = realization_seeds(cfg.seed, cfg.n_realizations);
    Ok(seeds
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| run_realization(cfg, i, s))
        .collect())
}

fn mean(points: impl Iterator<Item = RatePoint>) -> Option<(RatePoint, usize)> {
    let (mut s1, mut s2, mut n) = (0.0, 0.0, 0usize);
    for p in points {
        s1 += p.r1;
        s2 += p.r2;
        n += 1;
    }
    (n > 0).then(|| (RatePoint::new(s1 / n as f64, s2 / n as f64), n))
}

/// Averages realizations into a dataset.
pub fn aggregate(cfg: &ExperimentConfig, results: &[RealizationResult]) -> Result<Dataset> {
    let pipeline = cfg.pipeline();
    let scheme = scheme_name(pipeline).to_string();
    let seed = cfg.seed;
    let row = |kind, scheme: &str, param: Option<f64>, p: Option<RatePoint>, count, realization| Row {
        mu_or_kappa: param,
        r1: p.map(|p| p.r1),
        r2: p.map(|p| p.r2),
        scheme: scheme.to_string(),
        realization_count: count,
        seed,
        kind,
        realization,
        note: None,
    };

    let mut boundary = Vec::new();
    for (j, &v) in cfg.grid().iter().enumerate() {
        if let Some((rate, count)) = mean(results.iter().filter_map(|r| r.points[j])) {
            boundary.push(AveragedPoint { parameter: v, rate, count });
        }
    }
    let contributing = results.iter().filter(|r| r.points.iter().any(Option::is_some)).count();
    let hull = if boundary.is_empty() {
        Vec::new()
    } else {
        region_hull(&boundary.iter().map(|b| b.rate).collect::<Vec<_>>())?
    };
    let hname = heuristic_name(&cfg.relay_constraint.to_constraint());
    let heuristic = mean(results.iter().filter_map(|r| r.heuristic));

    let mut rows = Vec::new();
    for b in &boundary {
        rows.push(row(RowKind::Boundary, &scheme, Some(b.parameter), Some(b.rate), b.count, None));
    }
    for v in &hull {
        rows.push(row(RowKind::Hull, &scheme, None, Some(*v), contributing, None));
    }
    if let Some((p, n)) = heuristic {
        rows.push(row(RowKind::Heuristic, hname, None, Some(p), n, None));
    }
    if cfg.per_realization_hulls {
        for r in results {
            let pts: Vec<RatePoint> = r.points.iter().flatten().copied().collect();
            if pts.is_empty() {
                continue;
            }
            for (j, p) in r.points.iter().enumerate() {
                if let Some(p) = p {
                    rows.push(row(RowKind::Boundary, &scheme, Some(cfg.grid()[j]), Some(*p), 1, Some(r.index)));
                }
            }
            for v in region_hull(&pts)? {
                rows.push(row(RowKind::Hull, &scheme, None, Some(v), 1, Some(r.index)));
            }
            if let Some(h) = r.heuristic {
                rows.push(row(RowKind::Heuristic, hname, None, Some(h), 1, Some(r.index)));
            }
        }
    }
    for r in results {
        for f in &r.failures {
            let mut fr = row(RowKind::Failure, &scheme, f.parameter, None, 0, Some(r.index));
            fr.note = Some(f.message.clone());
            rows.push(fr);
        }
    }

    Ok(Dataset {
        pipeline,
        scheme,
        seed,
        n_realizations: cfg.n_realizations,
        hull_area: polygon_area(&hull),
        boundary,
        hull,
        heuristic: heuristic.map(|(p, _)| (hname.to_string(), p)),
        rows,
    })
}

/// Runs the experiment described by `cfg`. Individual solver failures are
/// recorded as rows and do not abort the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Dataset> {
    let results = run_realizations(cfg)?;
    aggregate(cfg, &results)
}
