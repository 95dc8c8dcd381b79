//! Dense semidefinite programs over a complex Hermitian variable.
//!
//! Problems have the form
//!
//! ```text
//! minimize    tr(C X)
//! subject to  tr(B_j X) >= b_j  or  tr(B_j X) <= b_j
//!             X_ii <= u_i            (optional)
//!             X psd
//! ```
//!
//! and are solved through the real symmetric lifting
//! `A + jB -> [[A, -B], [B, A]]` with an interior-point method.

mod ipm;

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::cmat::{self, CMatrix};
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `tr(B X) >= b`
    AtLeast,
    /// `tr(B X) <= b`
    AtMost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConstraint {
    pub matrix: CMatrix,
    pub sense: Sense,
    pub bound: f64,
}

impl TraceConstraint {
    pub fn at_least(matrix: CMatrix, bound: f64) -> Self {
        TraceConstraint { matrix, sense: Sense::AtLeast, bound }
    }

    pub fn at_most(matrix: CMatrix, bound: f64) -> Self {
        TraceConstraint { matrix, sense: Sense::AtMost, bound }
    }

    /// Signed violation at `x`; nonpositive when satisfied.
    pub fn violation(&self, x: &CMatrix) -> f64 {
        let v = cmat::trace_product(&self.matrix, x);
        match self.sense {
            Sense::AtLeast => self.bound - v,
            Sense::AtMost => v - self.bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianTraceSdp {
    pub dim: usize,
    /// `None` for a pure feasibility problem.
    pub objective: Option<CMatrix>,
    pub constraints: Vec<TraceConstraint>,
    pub diag_bounds: Option<Vec<f64>>,
}

impl HermitianTraceSdp {
    pub fn feasibility(dim: usize) -> Self {
        HermitianTraceSdp { dim, objective: None, constraints: Vec::new(), diag_bounds: None }
    }

    pub fn minimize(objective: CMatrix) -> Self {
        HermitianTraceSdp {
            dim: objective.nrows(),
            objective: Some(objective),
            constraints: Vec::new(),
            diag_bounds: None,
        }
    }

    pub fn subject_to(mut self, c: TraceConstraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn with_diag_bounds(mut self, bounds: Vec<f64>) -> Self {
        self.diag_bounds = Some(bounds);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.dim;
        if k == 0 {
            return Err(Error::Validation("problem dimension must be positive".into()));
        }
        if k > MAX_DIM {
            return Err(Error::TooLarge { size: k, limit: MAX_DIM });
        }
        let check = |m: &CMatrix, what: &str| -> Result<()> {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::dim(k, if m.nrows() != k { m.nrows() } else { m.ncols() }));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Validation(format!("{what} has non-finite entries")));
            }
            if cmat::hermitian_defect(m) > 1e-12 * cmat::max_abs(m).max(1.0) {
                return Err(Error::Validation(format!("{what} is not Hermitian")));
            }
            Ok(())
        };
        if let Some(c) = &self.objective {
            check(c, "objective")?;
        }
        for (j, c) in self.constraints.iter().enumerate() {
            check(&c.matrix, &format!("constraint {j}"))?;
            if !c.bound.is_finite() {
                return Err(Error::Validation(format!("constraint {j} has a non-finite bound")));
            }
        }
        if let Some(u) = &self.diag_bounds {
            if u.len() != k {
                return Err(Error::dim(k, u.len()));
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation("diagonal bounds must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// No feasible point exists; the outcome carries a dual certificate.
    Infeasible,
    /// The objective decreases without bound over the feasible set.
    Unbounded,
    /// The iteration cap was reached or the iteration stopped making progress.
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpOutcome {
    pub status: SdpStatus,
    pub x_matrix: CMatrix,
    /// `tr(C X)`, zero for feasibility problems and `+inf` when infeasible.
    pub objective_value: f64,
    /// Dual objective `sum_j b_j y_j` over constraints and diagonal bounds.
    pub dual_objective: f64,
    /// One multiplier per trace constraint, nonnegative for `AtLeast`.
    pub constraint_duals: Vec<f64>,
    /// One multiplier per diagonal bound, nonpositive.
    pub bound_duals: Vec<f64>,
    /// Dual slack `S` with `tr(X S)` equal to the duality gap.
    pub dual_slack: CMatrix,
    /// Farkas ray over the constraints followed by the bounds, scaled so
    /// that `sum_j b_j y_j = 1`. Present only when infeasible.
    pub certificate: Option<Vec<f64>>,
    pub kkt_residual: f64,
    pub complementarity: f64,
    pub iterations: usize,
}

impl SdpOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: DEFAULT_TOLERANCE, max_iterations: DEFAULT_MAX_ITERATIONS }
    }
}

/// `M = A + jB` as the real symmetric `[[A, -B], [B, A]]`.
pub fn embed_matrix(m: &CMatrix) -> DMatrix<f64> {
    let k = m.nrows();
    DMatrix::from_fn(2 * k, 2 * k, |r, c| {
        let z = m[(r % k, c % k)];
        match (r < k, c < k) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`embed_matrix`] that also averages out any part of `xhat`
/// outside the embedded subspace.
pub fn recover(xhat: &DMatrix<f64>) -> Result<CMatrix> {
    let n = xhat.nrows();
    if n % 2 != 0 || xhat.ncols() != n {
        return Err(Error::Validation("lifted matrix must be square with even size".into()));
    }
    let k = n / 2;
    Ok(CMatrix::from_fn(k, k, |i, j| {
        Complex64::new(
            0.5 * (xhat[(i, j)] + xhat[(i + k, j + k)]),
            0.5 * (xhat[(i + k, j)] - xhat[(i, j + k)]),
        )
    }))
}

/// One row `0.5 tr(M X) + slack * s = bound` of the lifted problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RealRow {
    pub matrix: DMatrix<f64>,
    /// `-1` for `>=`, `+1` for `<=`.
    pub slack: f64,
    pub bound: f64,
}

/// The real symmetric problem of size `2K` equivalent to a
/// [`HermitianTraceSdp`]. Trace constraints come first, then diagonal
/// bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RealEmbedding {
    pub dim: usize,
    /// Objective matrix, already halved.
    pub objective: DMatrix<f64>,
    pub rows: Vec<RealRow>,
}

pub fn real_embed(p: &HermitianTraceSdp) -> Result<RealEmbedding> {
    p.validate()?;
    let k = p.dim;
    let objective = p
        .objective
        .as_ref()
        .map(|c| embed_matrix(c) * 0.5)
        .unwrap_or_else(|| DMatrix::zeros(2 * k, 2 * k));
    let mut rows: Vec<RealRow> = p
        .constraints
        .iter()
        .map(|c| RealRow {
            matrix: embed_matrix(&c.matrix) * 0.5,
            slack: match c.sense {
                Sense::AtLeast => -1.0,
                Sense::AtMost => 1.0,
            },
            bound: c.bound,
        })
        .collect();
    if let Some(u) = &p.diag_bounds {
        for (i, &ui) in u.iter().enumerate() {
            let mut e = DMatrix::zeros(2 * k, 2 * k);
            e[(i, i)] = 0.5;
            e[(i + k, i + k)] = 0.5;
            rows.push(RealRow { matrix: e, slack: 1.0, bound: ui });
        }
    }
    Ok(RealEmbedding { dim: 2 * k, objective, rows })
}

pub fn solve(p: &HermitianTraceSdp, tol: f64) -> Result<SdpOutcome> {
    solve_with(p, &SolverOptions { tolerance: tol, ..SolverOptions::default() })
}

pub fn solve_with(p: &HermitianTraceSdp, opts: &SolverOptions) -> Result<SdpOutcome> {
    if !(1e-10..=1e-4).contains(&opts.tolerance) {
        return Err(Error::parameter(format!(
            "tolerance must lie in [1e-10, 1e-4], got {}",
            opts.tolerance
        )));
    }
    let emb = real_embed(p)?;
    let k = p.dim;
    let m = emb.rows.len();
    let cone = ipm::ConeProblem {
        n: emb.dim,
        c: emb.objective.clone(),
        c_lp: DVector::zeros(m),
        a: emb.rows.iter().map(|r| r.matrix.clone()).collect(),
        g: DMatrix::from_fn(m, m, |i, j| if i == j { emb.rows[i].slack } else { 0.0 }),
        b: DVector::from_iterator(m, emb.rows.iter().map(|r| r.bound)),
    };
    let sol = ipm::solve(&cone, opts.tolerance, opts.max_iterations);
    let nc = p.constraints.len();

    let status = match sol.termination {
        ipm::Termination::Optimal => SdpStatus::Optimal,
        ipm::Termination::PrimalInfeasible => SdpStatus::Infeasible,
        ipm::Termination::DualInfeasible => SdpStatus::Unbounded,
        ipm::Termination::IterationLimit | ipm::Termination::Stalled => SdpStatus::MaxIterations,
    };

    let y: Vec<f64> = sol.y.iter().copied().collect();
    if status == SdpStatus::Infeasible {
        return Ok(SdpOutcome {
            status,
            x_matrix: CMatrix::zeros(k, k),
            objective_value: f64::INFINITY,
            dual_objective: 1.0,
            constraint_duals: y[..nc].to_vec(),
            bound_duals: y[nc..].to_vec(),
            dual_slack: CMatrix::zeros(k, k),
            certificate: Some(y),
            kkt_residual: sol.kkt_residual,
            complementarity: 0.0,
            iterations: sol.iterations,
        });
    }

    let x_matrix = cmat::hermitian_part(&recover(&sol.x)?);
    let dual_slack = cmat::hermitian_part(&recover(&sol.z)?.map(|z| z * 2.0));
    let objective_value = p
        .objective
        .as_ref()
        .map(|c| cmat::trace_product(c, &x_matrix))
        .unwrap_or(0.0);
    let dual_objective = emb.rows.iter().zip(&y).map(|(r, yj)| r.bound * yj).sum();
    let complementarity = sol.x.dot(&sol.z) + sol.s.dot(&sol.zs);
    Ok(SdpOutcome {
        status,
        x_matrix,
        objective_value,
        dual_objective,
        constraint_duals: y[..nc].to_vec(),
        bound_duals: y[nc..].to_vec(),
        dual_slack,
        certificate: None,
        kkt_residual: sol.kkt_residual,
        complementarity,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{complex_gaussian, rng_from_seed};
    use alloc::vec;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(k: usize, seed: u64) -> CMatrix {
        let mut rng = rng_from_seed(seed);
        let g = CMatrix::from_fn(k, k, |_, _| complex_gaussian(&mut rng, 1.0));
        cmat::hermitian_part(&g)
    }

    fn random_psd(k: usize, seed: u64) -> CMatrix {
        let mut rng = rng_from_seed(seed);
        let g = CMatrix::from_fn(k, k, |_, _| complex_gaussian(&mut rng, 1.0));
        &g * g.adjoint()
    }

    #[test]
    fn embed_scalar() {
        let m = CMatrix::from_element(1, 1, c(2.0, 0.0));
        let e = embed_matrix(&m);
        assert_eq!(e, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn embed_duplicates_spectrum() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]);
        let e = embed_matrix(&m);
        assert_eq!(e, e.transpose());
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(e).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expect = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_identity_and_round_trip() {
        for seed in 0..20 {
            let m = random_hermitian(4, seed);
            let x = random_psd(4, seed + 100);
            let lhs = cmat::trace_product(&m, &x);
            let rhs = 0.5 * embed_matrix(&m).dot(&embed_matrix(&x));
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
            let back = recover(&embed_matrix(&m)).unwrap();
            assert!((back - &m).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let p = HermitianTraceSdp::feasibility(2).subject_to(TraceConstraint::at_least(m, 1.0));
        assert!(matches!(real_embed(&p), Err(Error::Validation(_))));
        assert!(matches!(solve(&p, 1e-8), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = HermitianTraceSdp::feasibility(65);
        assert!(matches!(solve(&p, 1e-8), Err(Error::TooLarge { .. })));
        let p = HermitianTraceSdp::feasibility(1);
        assert!(matches!(solve(&p, 1e-3), Err(Error::Parameter(_))));
        assert!(matches!(solve(&p, 1e-12), Err(Error::Parameter(_))));
        let p = HermitianTraceSdp::feasibility(2).with_diag_bounds(vec![1.0]);
        assert!(matches!(solve(&p, 1e-8), Err(Error::Dimension { .. })));
        let p = HermitianTraceSdp::feasibility(1)
            .subject_to(TraceConstraint::at_least(CMatrix::identity(1, 1), f64::NAN));
        assert!(matches!(solve(&p, 1e-8), Err(Error::Validation(_))));
    }

    #[test]
    fn scalar_lp_in_disguise() {
        let p = HermitianTraceSdp::minimize(CMatrix::identity(1, 1))
            .subject_to(TraceConstraint::at_least(CMatrix::identity(1, 1), 1.0));
        let out = solve(&p, 1e-8).unwrap();
        assert_eq!(out.status, SdpStatus::Optimal);
        assert!((out.objective_value - 1.0).abs() < 1e-7);
        assert!((out.x_matrix[(0, 0)].re - 1.0).abs() < 1e-7);
        assert!((out.dual_objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        let p = HermitianTraceSdp::feasibility(1)
            .subject_to(TraceConstraint::at_least(CMatrix::identity(1, 1), 2.0))
            .with_diag_bounds(vec![1.0]);
        let out = solve(&p, 1e-8).unwrap();
        assert_eq!(out.status, SdpStatus::Infeasible);
        let y = out.certificate.unwrap();
        // b^T y = 1 with A^T y <= 0 on the psd part.
        assert!((2.0 * y[0] + 1.0 * y[1] - 1.0).abs() < 1e-9);
        assert!(y[0] + y[1] <= 1e-8);
    }

    #[test]
    fn zero_matrix_constraint_with_positive_bound_is_infeasible() {
        let p = HermitianTraceSdp::feasibility(2)
            .subject_to(TraceConstraint::at_least(CMatrix::zeros(2, 2), 1.0));
        assert_eq!(solve(&p, 1e-8).unwrap().status, SdpStatus::Infeasible);
    }

    #[test]
    fn minimum_eigenvalue_of_hermitian_matrix() {
        for seed in 0..10 {
            let m = random_hermitian(5, seed);
            let lam = cmat::hermitian_eigenvalues(&m)[0];
            let p = HermitianTraceSdp::minimize(m.clone())
                .subject_to(TraceConstraint::at_most(CMatrix::identity(5, 5), 1.0))
                .subject_to(TraceConstraint::at_least(CMatrix::identity(5, 5), 1.0));
            let out = solve(&p, 1e-9).unwrap();
            assert_eq!(out.status, SdpStatus::Optimal);
            assert!((out.objective_value - lam).abs() < 1e-7 * (1.0 + lam.abs()));
        }
    }

    #[test]
    fn negative_objective_without_bounds_is_unbounded() {
        let p = HermitianTraceSdp::minimize(-CMatrix::identity(2, 2))
            .subject_to(TraceConstraint::at_least(CMatrix::identity(2, 2), 1.0));
        assert_eq!(solve(&p, 1e-8).unwrap().status, SdpStatus::Unbounded);
    }

    fn random_problem(k: usize, seed: u64) -> HermitianTraceSdp {
        let mut rng = rng_from_seed(seed);
        let f: Vec<Complex64> = (0..k).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let g: Vec<Complex64> = (0..k).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let d: Vec<f64> = (0..k).map(|i| 1.0 + 0.5 * i as f64).collect();
        HermitianTraceSdp::minimize(cmat::real_diag(&d))
            .subject_to(TraceConstraint::at_least(
                cmat::conj_outer(&f) - cmat::real_diag(&vec![0.2; k]),
                0.5,
            ))
            .subject_to(TraceConstraint::at_least(
                cmat::conj_outer(&g) - cmat::real_diag(&vec![0.1; k]),
                0.3,
            ))
    }

    #[test]
    fn optimal_outcome_invariants() {
        for seed in 0..20 {
            let p = random_problem(3, seed);
            let out = solve(&p, 1e-8).unwrap();
            if out.status != SdpStatus::Optimal {
                assert_eq!(out.status, SdpStatus::Infeasible);
                continue;
            }
            let x = &out.x_matrix;
            let ev = cmat::hermitian_eigenvalues(x);
            assert!(ev[0] >= -1e-8 * ev[ev.len() - 1].abs().max(1e-300));
            for c in &p.constraints {
                assert!(c.violation(x) <= 1e-7 * (1.0 + c.bound.abs()));
            }
            assert!(out.kkt_residual <= 1e-8);
            assert!(out.dual_objective <= out.objective_value + 1e-7);
            let gap = cmat::trace_product(x, &out.dual_slack);
            assert!(gap <= 1e-8 * (1.0 + out.objective_value.abs()) * 10.0);
            assert!(out.constraint_duals.iter().all(|&y| y >= -1e-9));
        }
    }

    #[test]
    fn tightening_a_bound_never_lowers_the_optimum() {
        for seed in 0..10 {
            let base = random_problem(3, seed + 50);
            let mut prev = f64::NEG_INFINITY;
            for scale in [0.5, 1.0, 2.0, 4.0] {
                let mut p = base.clone();
                p.constraints[0].bound *= scale;
                let out = solve(&p, 1e-8).unwrap();
                let v = match out.status {
                    SdpStatus::Optimal => out.objective_value,
                    SdpStatus::Infeasible => f64::INFINITY,
                    s => panic!("unexpected {s:?}"),
                };
                assert!(v >= prev - 1e-7 * (1.0 + prev.abs()));
                prev = v;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn embedding_round_trip(k in 1usize..6, seed in any::<u64>()) {
            let m = random_hermitian(k, seed);
            let back = recover(&embed_matrix(&m)).unwrap();
            prop_assert!((back - &m).iter().all(|z| z.norm() < 1e-14));
        }

        #[test]
        fn embedding_trace_identity(k in 1usize..6, seed in any::<u64>()) {
            let m = random_hermitian(k, seed);
            let x = random_psd(k, seed ^ 0x9e37);
            let lhs = cmat::trace_product(&m, &x);
            let rhs = 0.5 * embed_matrix(&m).dot(&embed_matrix(&x));
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
