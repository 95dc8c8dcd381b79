//! Rate-region construction and the geometry behind it.
//!
//! A region is the convex hull of achievable rate pairs together with the
//! origin and the two axis points `(R1max, 0)` and `(0, R2max)`; rates can
//! always be lowered and time-sharing convexifies the rest. Boundary
//! points come from sweeping a weight (`mu` for the reciprocal closed forms)
//! or a rate profile (`kappa` for the SDP pipeline).
//!
//! The module also exposes executable checks of the two structural facts
//! the reciprocal construction relies on: the map from inverse SNRs to rates
//! reverses component-wise dominance, and it sends straight decreasing
//! segments to decreasing convex curves.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::{
    effective_channels, rate_pair, ChannelRealization, InverseSnrPoint, RatePoint, RelayConstraint,
    SystemConfig,
};
use crate::error::{Error, Result};
use crate::math;
use crate::nonreciprocal::{solve_nonreciprocal, BisectionConfig, RateProfile};
use crate::reciprocal::{optimal_beam, WsisWeight};

/// Merge radius for duplicate hull points.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// `(0.5 log2(1 + 1/t1), 0.5 log2(1 + 1/t2))`.
pub fn map_u(p: InverseSnrPoint) -> RatePoint {
    RatePoint::new(math::half_log_rate(1.0 / p.t1), math::half_log_rate(1.0 / p.t2))
}

/// `a` is at least `b` in both rates and strictly better in one.
pub fn dominates(a: RatePoint, b: RatePoint) -> bool {
    a.r1 >= b.r1 && a.r2 >= b.r2 && (a.r1 > b.r1 || a.r2 > b.r2)
}

/// Points not dominated by any other point of the input. Exact duplicates
/// are all kept.
pub fn pareto_filter(points: &[RatePoint]) -> Vec<RatePoint> {
    points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(*q, **p)))
        .copied()
        .collect()
}

fn cross(o: RatePoint, a: RatePoint, b: RatePoint) -> f64 {
    (a.r1 - o.r1) * (b.r2 - o.r2) - (a.r2 - o.r2) * (b.r1 - o.r1)
}

fn dist(a: RatePoint, b: RatePoint) -> f64 {
    math::hypot(a.r1 - b.r1, a.r2 - b.r2)
}

/// Convex hull in counter-clockwise order starting from the
/// lexicographically smallest point. Near-duplicates are merged and
/// collinear boundary points dropped.
pub fn convex_hull(points: &[RatePoint]) -> Result<Vec<RatePoint>> {
    if points.is_empty() {
        return Err(Error::parameter("convex hull of an empty point set"));
    }
    if points.iter().any(|p| !p.r1.is_finite() || !p.r2.is_finite()) {
        return Err(Error::parameter("hull points must be finite"));
    }
    let mut pts: Vec<RatePoint> = points.to_vec();
    pts.sort_by(|a, b| a.r1.total_cmp(&b.r1).then(a.r2.total_cmp(&b.r2)));
    let mut uniq: Vec<RatePoint> = Vec::with_capacity(pts.len());
    for p in pts {
        if uniq.iter().rev().take(8).all(|q| dist(*q, p) > MERGE_TOLERANCE) {
            uniq.push(p);
        }
    }
    if uniq.len() < 3 {
        return Ok(uniq);
    }
    let mut hull: Vec<RatePoint> = Vec::with_capacity(2 * uniq.len());
    for &p in &uniq {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in uniq.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    Ok(hull)
}

/// Hull of `points` plus the origin and both axis anchors.
pub fn region_hull(points: &[RatePoint]) -> Result<Vec<RatePoint>> {
    let r1 = points.iter().map(|p| p.r1).fold(0.0f64, f64::max);
    let r2 = points.iter().map(|p| p.r2).fold(0.0f64, f64::max);
    let mut all = points.to_vec();
    all.push(RatePoint::ORIGIN);
    all.push(RatePoint::new(r1, 0.0));
    all.push(RatePoint::new(0.0, r2));
    convex_hull(&all)
}

/// Shoelace area of a polygon given in order.
pub fn polygon_area(poly: &[RatePoint]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.r1 * b.r2 - b.r1 * a.r2
        })
        .sum();
    0.5 * twice.abs()
}

fn segment_distance(p: RatePoint, a: RatePoint, b: RatePoint) -> f64 {
    let (dx, dy) = (b.r1 - a.r1, b.r2 - a.r2);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p.r1 - a.r1) * dx + (p.r2 - a.r2) * dy) / len2).clamp(0.0, 1.0);
    dist(p, RatePoint::new(a.r1 + t * dx, a.r2 + t * dy))
}

/// Euclidean distance from `p` to a counter-clockwise convex polygon; zero
/// inside.
pub fn distance_to_polygon(poly: &[RatePoint], p: RatePoint) -> f64 {
    match poly.len() {
        0 => f64::INFINITY,
        1 => dist(poly[0], p),
        2 => segment_distance(p, poly[0], poly[1]),
        n => {
            let inside = (0..n).all(|i| cross(poly[i], poly[(i + 1) % n], p) >= 0.0);
            if inside {
                0.0
            } else {
                (0..n)
                    .map(|i| segment_distance(p, poly[i], poly[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

pub fn polygon_contains(poly: &[RatePoint], p: RatePoint, tol: f64) -> bool {
    distance_to_polygon(poly, p) <= tol
}

/// Largest `t` with `t * p` inside a counter-clockwise convex polygon that
/// contains the origin; infinite when the ray never leaves it.
pub fn radial_extent(poly: &[RatePoint], p: RatePoint) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut t = f64::INFINITY;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (ex, ey) = (b.r1 - a.r1, b.r2 - a.r2);
        let c = ex * p.r2 - ey * p.r1;
        let e = ex * a.r2 - ey * a.r1;
        if c < 0.0 {
            t = t.min(e / c);
        }
    }
    t.max(0.0)
}

/// Relative radial shortfall `1 - 1 / radial_extent` of a point inside a
/// region; zero on the boundary.
pub fn radial_gap(poly: &[RatePoint], p: RatePoint) -> f64 {
    let t = radial_extent(poly, p);
    if t.is_finite() && t > 0.0 {
        1.0 - 1.0 / t
    } else {
        0.0
    }
}

/// Hausdorff distance between two convex polygons.
pub fn hull_deviation(a: &[RatePoint], b: &[RatePoint]) -> f64 {
    let one_way = |x: &[RatePoint], y: &[RatePoint]| {
        x.iter().map(|p| distance_to_polygon(y, *p)).fold(0.0f64, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Which scalar parameterizes a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Weighted inverse-SNR weight `mu`.
    Weight,
    /// Rate profile `kappa`.
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// `mu` or `kappa`.
    pub parameter: f64,
    pub rate: RatePoint,
    /// Relaxation bound on the profile rate, for profile sweeps.
    pub r_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionEstimate {
    pub kind: SweepKind,
    pub sweep: Vec<SweepPoint>,
    pub raw_points: Vec<RatePoint>,
    pub hull_vertices: Vec<RatePoint>,
    pub sum_power: bool,
    pub seed: Option<u64>,
}

impl RegionEstimate {
    pub fn from_sweep(kind: SweepKind, sweep: Vec<SweepPoint>, sum_power: bool, seed: Option<u64>) -> Result<Self> {
        let raw_points: Vec<RatePoint> = sweep.iter().map(|s| s.rate).collect();
        let hull_vertices = region_hull(&raw_points)?;
        Ok(RegionEstimate { kind, sweep, raw_points, hull_vertices, sum_power, seed })
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.hull_vertices)
    }

    pub fn contains(&self, p: RatePoint, tol: f64) -> bool {
        polygon_contains(&self.hull_vertices, p, tol)
    }

    pub fn max_rates(&self) -> RatePoint {
        RatePoint::new(
            self.raw_points.iter().map(|p| p.r1).fold(0.0, f64::max),
            self.raw_points.iter().map(|p| p.r2).fold(0.0, f64::max),
        )
    }
}

/// `0, 1/(n-1), ..., 1`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn default_mu_grid() -> Vec<f64> {
    uniform_grid(11)
}

pub fn default_kappa_grid() -> Vec<f64> {
    uniform_grid(21)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::parameter("sweep grid is empty"));
    }
    if let Some(g) = grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::parameter(format!("sweep values must lie in [0, 1], got {g}")));
    }
    Ok(())
}

/// Region from the closed-form weighted inverse-SNR minimizers.
pub fn sweep_reciprocal(ch: &ChannelRealization, cfg: &SystemConfig, mu_grid: &[f64]) -> Result<RegionEstimate> {
    check_grid(mu_grid)?;
    let eff = effective_channels(ch, cfg)?;
    let sweep = mu_grid
        .iter()
        .map(|&mu| {
            let beam = optimal_beam(ch, &eff, cfg, WsisWeight::new(mu)?)?;
            Ok(SweepPoint { parameter: mu, rate: rate_pair(&beam, &eff, cfg)?, r_star: None })
        })
        .collect::<Result<Vec<_>>>()?;
    RegionEstimate::from_sweep(SweepKind::Weight, sweep, cfg.relay_constraint.is_sum_power(), None)
}

/// Region from the rate-profile pipeline. Profile `i` of the grid draws
/// its randomization from `seed + i`.
pub fn sweep_nonreciprocal(
    ch: &ChannelRealization,
    cfg: &SystemConfig,
    kappa_grid: &[f64],
    bis: &BisectionConfig,
    seed: u64,
) -> Result<RegionEstimate> {
    check_grid(kappa_grid)?;
    let sweep = kappa_grid
        .iter()
        .enumerate()
        .map(|(i, &kappa)| {
            let sol = solve_nonreciprocal(ch, cfg, RateProfile::new(kappa)?, bis, seed.wrapping_add(i as u64))?;
            Ok(SweepPoint { parameter: kappa, rate: sol.rates, r_star: Some(sol.r_star) })
        })
        .collect::<Result<Vec<_>>>()?;
    let sum_power = matches!(cfg.relay_constraint, RelayConstraint::SumPower(_));
    RegionEstimate::from_sweep(SweepKind::Profile, sweep, sum_power, Some(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DominanceReport {
    pub pairs_checked: usize,
    /// Pairs where dominance in one space is not mirrored in the other.
    pub violations: usize,
}

impl DominanceReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn inverse_dominates(a: InverseSnrPoint, b: InverseSnrPoint) -> bool {
    a.t1 <= b.t1 && a.t2 <= b.t2 && (a.t1 < b.t1 || a.t2 < b.t2)
}

/// Checks, over every ordered pair, that `a` has smaller inverse SNRs than
/// `b` exactly when `map_u(a)` has larger rates than `map_u(b)`.
pub fn check_dominance_preservation(points: &[InverseSnrPoint]) -> DominanceReport {
    let rates: Vec<RatePoint> = points.iter().map(|p| map_u(*p)).collect();
    let mut report = DominanceReport { pairs_checked: 0, violations: 0 };
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i == j {
                continue;
            }
            report.pairs_checked += 1;
            if inverse_dominates(points[i], points[j]) != dominates(rates[i], rates[j]) {
                report.violations += 1;
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub samples: usize,
    /// False when the segment is not decreasing in inverse-SNR space, in
    /// which case nothing is asserted.
    pub applicable: bool,
    pub decreasing: bool,
    pub convex: bool,
    /// Smallest normalized turn between consecutive sample triples;
    /// nonnegative for a convex curve.
    pub worst_turn: f64,
}

impl ConvexityReport {
    pub fn passed(&self) -> bool {
        !self.applicable || (self.decreasing && self.convex)
    }
}

/// Samples the straight segment `a -> b` in inverse-SNR space, maps it to
/// rate space and checks the image is a decreasing convex function of `R1`.
pub fn check_segment_convexity(a: InverseSnrPoint, b: InverseSnrPoint, samples: usize) -> Result<ConvexityReport> {
    InverseSnrPoint::new(a.t1, a.t2)?;
    InverseSnrPoint::new(b.t1, b.t2)?;
    if samples < 3 {
        return Err(Error::parameter("need at least three samples"));
    }
    let (d1, d2) = (b.t1 - a.t1, b.t2 - a.t2);
    let mut report = ConvexityReport { samples, applicable: true, decreasing: true, convex: true, worst_turn: 0.0 };
    if d1 == 0.0 || d2 == 0.0 {
        // Points, horizontal and vertical segments map onto straight lines.
        return Ok(report);
    }
    if d1 * d2 > 0.0 {
        report.applicable = false;
        return Ok(report);
    }
    let mut pts: Vec<RatePoint> = (0..samples)
        .map(|i| {
            let s = i as f64 / (samples - 1) as f64;
            map_u(InverseSnrPoint { t1: a.t1 + s * d1, t2: a.t2 + s * d2 })
        })
        .collect();
    pts.sort_by(|p, q| p.r1.total_cmp(&q.r1));
    report.decreasing = pts.windows(2).all(|w| w[1].r2 <= w[0].r2 + 1e-12);
    let mut worst = f64::INFINITY;
    for w in pts.windows(3) {
        let norm = dist(w[0], w[1]) * dist(w[1], w[2]);
        if norm > 0.0 {
            worst = worst.min(cross(w[0], w[1], w[2]) / norm);
        }
    }
    report.worst_turn = if worst.is_finite() { worst } else { 0.0 };
    report.convex = report.worst_turn >= -1e-9;
    Ok(report)
}
