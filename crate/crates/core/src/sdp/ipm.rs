//! Primal-dual interior-point method for real conic programs over
//! `S^n_+ x R^l_+`:
//!
//! ```text
//! minimize   <C, X> + c_lp . s
//! subject to <A_j, X> + (G s)_j = b_j,   X psd,  s >= 0
//! ```
//!
//! The iteration works on the homogeneous self-dual embedding from an
//! infeasible start, with HKM search directions and a Mehrotra
//! predictor-corrector. Feasible problems drive `tau > 0`; primal or dual
//! infeasibility shows up as `kappa > 0` and yields a Farkas certificate.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::math;

pub(crate) struct ConeProblem {
    pub n: usize,
    pub c: DMatrix<f64>,
    pub c_lp: DVector<f64>,
    pub a: Vec<DMatrix<f64>>,
    /// `m x l` coupling of the nonnegative variables.
    pub g: DMatrix<f64>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Termination {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    Stalled,
}

pub(crate) struct IpmSolution {
    pub termination: Termination,
    pub x: DMatrix<f64>,
    pub s: DVector<f64>,
    /// Equality multipliers. On `PrimalInfeasible` this is the Farkas ray
    /// normalized so that `b . y = 1`.
    pub y: DVector<f64>,
    pub z: DMatrix<f64>,
    pub zs: DVector<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
}

#[derive(Clone)]
struct Cone {
    m: DMatrix<f64>,
    v: DVector<f64>,
}

impl Cone {
    fn dot(&self, o: &Cone) -> f64 {
        self.m.dot(&o.m) + self.v.dot(&o.v)
    }

    fn norm(&self) -> f64 {
        math::sqrt(self.dot(self))
    }

    fn scale(&self, k: f64) -> Cone {
        Cone { m: &self.m * k, v: &self.v * k }
    }

    fn add_scaled(&self, k: f64, o: &Cone) -> Cone {
        Cone { m: &self.m + &o.m * k, v: &self.v + &o.v * k }
    }
}

struct Scaled {
    a: Vec<DMatrix<f64>>,
    g: DMatrix<f64>,
    b: DVector<f64>,
    c: Cone,
}

impl Scaled {
    fn apply(&self, x: &Cone) -> DVector<f64> {
        let mut out = &self.g * &x.v;
        for (j, aj) in self.a.iter().enumerate() {
            out[j] += aj.dot(&x.m);
        }
        out
    }

    fn adjoint(&self, y: &DVector<f64>, n: usize) -> Cone {
        let mut m = DMatrix::zeros(n, n);
        for (j, aj) in self.a.iter().enumerate() {
            m += aj * y[j];
        }
        Cone { m, v: self.g.tr_mul(y) }
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Largest `alpha` with `L L^T + alpha D` psd, `+inf` if unbounded.
fn psd_step(chol: &Cholesky<f64, Dyn>, d: &DMatrix<f64>) -> Option<f64> {
    let l = chol.l();
    let t = l.solve_lower_triangular(d)?;
    let s = l.solve_lower_triangular(&t.transpose())?;
    let eig = SymmetricEigen::new(sym(s));
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Some(if lo >= 0.0 { f64::INFINITY } else { -1.0 / lo })
}

fn ray_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

fn scalar_step(v: f64, dv: f64) -> f64 {
    if dv < 0.0 {
        -v / dv
    } else {
        f64::INFINITY
    }
}

/// Factorization of the Schur complement `M`. When `M` is numerically
/// singular (for instance with duplicated constraints) a tiny diagonal shift
/// is factored instead and solves are refined against the original matrix.
struct SchurSolver {
    m: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    shifted: bool,
}

impl SchurSolver {
    fn new(m: DMatrix<f64>) -> Option<Self> {
        let scale = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        let mut shift = 0.0;
        loop {
            let mut shifted = m.clone();
            for i in 0..m.nrows() {
                shifted[(i, i)] += shift;
            }
            if let Some(chol) = Cholesky::new(shifted) {
                let usable = (0..m.nrows()).all(|i| chol.l_dirty()[(i, i)] > 1e-150);
                if usable {
                    return Some(SchurSolver { m, chol, shifted: shift > 0.0 });
                }
            }
            shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
            if shift > 1e-6 * scale {
                return None;
            }
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut x = self.chol.solve(rhs);
        if self.shifted {
            for _ in 0..3 {
                let r = rhs - &self.m * &x;
                x += self.chol.solve(&r);
            }
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

/// Iterations without improvement after which a growing residual counts as
/// a stall.
const STALL_WINDOW: usize = 5;

/// An unfinished run whose best iterate came within this factor of the
/// tolerance is reported as solved, with its actual residual.
const ACCEPTABLE_FACTOR: f64 = 100.0;

struct Snapshot {
    x: Cone,
    z: Cone,
    y: DVector<f64>,
    tau: f64,
    iteration: usize,
    kkt_residual: f64,
}

struct Direction {
    dx: Cone,
    dz: Cone,
    dy: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

pub(crate) fn solve(p: &ConeProblem, tol: f64, max_iter: usize) -> IpmSolution {
    let n = p.n;
    let m = p.a.len();
    let l = p.c_lp.len();

    let mut row_scale = vec![1.0; m];
    let mut a = Vec::with_capacity(m);
    let mut g = p.g.clone();
    let mut b = p.b.clone();
    for j in 0..m {
        let nrm = math::sqrt(p.a[j].norm_squared() + p.g.row(j).norm_squared());
        let r = if nrm > 0.0 { 1.0 / nrm } else { 1.0 };
        row_scale[j] = r;
        a.push(&p.a[j] * r);
        let scaled_row = g.row(j) * r;
        g.set_row(j, &scaled_row);
        b[j] *= r;
    }
    let c_norm = math::sqrt(p.c.norm_squared() + p.c_lp.norm_squared());
    let cs = 1.0 / c_norm.max(1.0);
    let bs = 1.0 / b.norm().max(1.0);
    b *= bs;
    let data = Scaled {
        a,
        g,
        b,
        c: Cone { m: &p.c * cs, v: &p.c_lp * cs },
    };
    let b_norm = data.b.norm();
    let c_norm = data.c.norm();

    let mut x = Cone { m: DMatrix::identity(n, n), v: DVector::from_element(l, 1.0) };
    let mut z = x.clone();
    let mut y = DVector::zeros(m);
    let mut tau = 1.0;
    let mut kappa = 1.0;
    let nu = (n + l + 1) as f64;

    let mut termination = Termination::IterationLimit;
    let mut kkt_residual = f64::INFINITY;
    let mut iterations = 0;
    let mut best: Option<Snapshot> = None;

    for it in 0..=max_iter {
        iterations = it;
        let ax = data.apply(&x);
        let aty = data.adjoint(&y, n);
        let rp = &ax - &data.b * tau;
        let rd = aty.add_scaled(1.0, &z).add_scaled(-tau, &data.c);
        let cx = data.c.dot(&x);
        let by = data.b.dot(&y);
        let rg = cx - by + kappa;
        let xz = x.dot(&z);
        let mu = (xz + tau * kappa) / nu;

        let pres = rp.norm() / tau / (1.0 + b_norm);
        let dres = rd.norm() / tau / (1.0 + c_norm);
        let pobj = cx / tau;
        let dobj = by / tau;
        let gap = ((pobj - dobj).abs() / (1.0 + pobj.abs().min(dobj.abs())))
            .max(xz / (tau * tau) / (1.0 + pobj.abs()));
        kkt_residual = pres.max(dres).max(gap);
        if kkt_residual <= tol {
            termination = Termination::Optimal;
            break;
        }
        match &best {
            Some(b) if b.kkt_residual <= kkt_residual => {
                let endgame = b.kkt_residual <= ACCEPTABLE_FACTOR * tol;
                if endgame && it - b.iteration >= STALL_WINDOW && kkt_residual > 10.0 * b.kkt_residual {
                    termination = Termination::Stalled;
                    break;
                }
            }
            _ => {
                best = Some(Snapshot {
                    x: x.clone(),
                    z: z.clone(),
                    y: y.clone(),
                    tau,
                    iteration: it,
                    kkt_residual,
                })
            }
        }
        if by > 0.0 && aty.add_scaled(1.0, &z).norm() / by <= tol {
            termination = Termination::PrimalInfeasible;
            break;
        }
        if cx < 0.0 && data.apply(&x).norm() / (-cx) <= tol {
            termination = Termination::DualInfeasible;
            break;
        }
        if it == max_iter {
            break;
        }

        let (chol_x, chol_z) = match (Cholesky::new(x.m.clone()), Cholesky::new(z.m.clone())) {
            (Some(cx), Some(cz)) => (cx, cz),
            _ => {
                termination = Termination::Stalled;
                break;
            }
        };
        let z_inv = chol_z.inverse();
        let ratio = x.v.component_div(&z.v);
        let w = |v: &Cone| Cone {
            m: sym(&x.m * &v.m * &z_inv),
            v: v.v.component_mul(&ratio),
        };

        let mut schur = DMatrix::zeros(m, m);
        let xa: Vec<DMatrix<f64>> = data.a.iter().map(|aj| &x.m * aj * &z_inv).collect();
        let gw = DMatrix::from_fn(m, l, |i, k| data.g[(i, k)] * ratio[k]);
        let lp_block = &gw * data.g.transpose();
        for i in 0..m {
            for j in 0..=i {
                let v = 0.5 * (data.a[i].dot(&xa[j]) + data.a[j].dot(&xa[i])) + lp_block[(i, j)];
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let Some(schur_solver) = SchurSolver::new(schur) else {
            termination = Termination::Stalled;
            break;
        };
        // Newton system, bordered by the homogenizing variable:
        //   M dy - (A W c + b) dtau = r1
        //   (A W c - b)^T dy - (c W c + kappa / tau) dtau = r2
        // The scalar complement is assembled as a sum of nonnegative terms
        // because the direct difference cancels catastrophically near
        // convergence.
        let wc = w(&data.c);
        let awc = data.apply(&wc);
        let (Some(u), Some(m_inv_b)) = (schur_solver.solve(&awc), schur_solver.solve(&data.b)) else {
            termination = Termination::Stalled;
            break;
        };
        let c_perp = data.c.add_scaled(-1.0, &data.adjoint(&u, n));
        let denom = -(c_perp.dot(&w(&c_perp)).max(0.0) + data.b.dot(&m_inv_b).max(0.0) + kappa / tau);
        let q = &awc - &data.b;
        let m_inv_h = &u + &m_inv_b;

        let wrd = w(&rd);
        let awrd = data.apply(&wrd);
        let cwrd = data.c.dot(&wrd);

        let direction = |rx: &Cone, rtk: f64, eta: f64| -> Option<Direction> {
            let top = -&rp * eta - data.apply(rx) - &awrd * eta;
            let bottom = -eta * rg - data.c.dot(rx) - eta * cwrd - rtk / tau;
            let v1 = schur_solver.solve(&top)?;
            let dtau = (bottom - q.dot(&v1)) / denom;
            let dy = v1 + &m_inv_h * dtau;
            let dz = rd
                .scale(-eta)
                .add_scaled(-1.0, &data.adjoint(&dy, n))
                .add_scaled(dtau, &data.c);
            let dx = rx.add_scaled(-1.0, &w(&dz));
            if !(dx.norm().is_finite() && dz.norm().is_finite() && dtau.is_finite()) {
                return None;
            }
            Some(Direction { dkappa: (rtk - kappa * dtau) / tau, dx, dz, dy, dtau })
        };

        let max_step = |d: &Direction| -> Option<f64> {
            let sx = psd_step(&chol_x, &d.dx.m)?;
            let sz = psd_step(&chol_z, &d.dz.m)?;
            Some(
                sx.min(sz)
                    .min(ray_step(&x.v, &d.dx.v))
                    .min(ray_step(&z.v, &d.dz.v))
                    .min(scalar_step(tau, d.dtau))
                    .min(scalar_step(kappa, d.dkappa)),
            )
        };

        let predictor_rhs = x.scale(-1.0);
        let Some(aff) = direction(&predictor_rhs, -tau * kappa, 1.0) else {
            termination = Termination::Stalled;
            break;
        };
        let Some(step_aff) = max_step(&aff) else {
            termination = Termination::Stalled;
            break;
        };
        let alpha_aff = step_aff.min(1.0);
        let mu_aff = (x.add_scaled(alpha_aff, &aff.dx).dot(&z.add_scaled(alpha_aff, &aff.dz))
            + (tau + alpha_aff * aff.dtau) * (kappa + alpha_aff * aff.dkappa))
            / nu;
        let sigma = {
            let r = (mu_aff / mu).clamp(0.0, 1.0);
            r * r * r
        };

        let corr_m = sym(&aff.dx.m * &aff.dz.m * &z_inv);
        let rx = Cone {
            m: &z_inv * (sigma * mu) - &x.m - corr_m,
            v: DVector::from_fn(l, |k, _| {
                (sigma * mu - x.v[k] * z.v[k] - aff.dx.v[k] * aff.dz.v[k]) / z.v[k]
            }),
        };
        let rtk = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
        let Some(dir) = direction(&rx, rtk, 1.0 - sigma) else {
            termination = Termination::Stalled;
            break;
        };
        let Some(step) = max_step(&dir) else {
            termination = Termination::Stalled;
            break;
        };
        let alpha = (0.99 * step).min(1.0);
        if alpha < 1e-12 {
            termination = Termination::Stalled;
            break;
        }

        x = x.add_scaled(alpha, &dir.dx);
        x.m = sym(x.m);
        z = z.add_scaled(alpha, &dir.dz);
        z.m = sym(z.m);
        y += &dir.dy * alpha;
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
    }

    if matches!(termination, Termination::IterationLimit | Termination::Stalled) {
        if let Some(b) = best.filter(|b| b.kkt_residual <= ACCEPTABLE_FACTOR * tol) {
            termination = Termination::Optimal;
            x = b.x;
            z = b.z;
            y = b.y;
            tau = b.tau;
            kkt_residual = b.kkt_residual;
        }
    }

    match termination {
        Termination::PrimalInfeasible => {
            let mut ray = DVector::from_fn(m, |j, _| y[j] * row_scale[j]);
            let by = p.b.dot(&ray);
            ray /= by;
            IpmSolution {
                termination,
                x: DMatrix::zeros(n, n),
                s: DVector::zeros(l),
                y: ray,
                z: z.m,
                zs: z.v,
                iterations,
                kkt_residual,
            }
        }
        _ => {
            let px = 1.0 / (tau * bs);
            let dz = 1.0 / (tau * cs);
            IpmSolution {
                termination,
                x: &x.m * px,
                s: &x.v * px,
                y: DVector::from_fn(m, |j, _| y[j] * row_scale[j] * dz),
                z: &z.m * dz,
                zs: &z.v * dz,
                iterations,
                kkt_residual,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp_only(c: &[f64], a: &[&[f64]], b: &[f64]) -> ConeProblem {
        let m = a.len();
        let l = c.len();
        ConeProblem {
            n: 1,
            c: DMatrix::zeros(1, 1),
            c_lp: DVector::from_column_slice(c),
            a: vec![DMatrix::zeros(1, 1); m],
            g: DMatrix::from_fn(m, l, |i, j| a[i][j]),
            b: DVector::from_column_slice(b),
        }
    }

    #[test]
    fn small_lp() {
        // min x1 + 2 x2  s.t. x1 + x2 = 1
        let p = lp_only(&[1.0, 2.0], &[&[1.0, 1.0]], &[1.0]);
        let sol = solve(&p, 1e-9, 100);
        assert_eq!(sol.termination, Termination::Optimal);
        assert!((sol.s[0] - 1.0).abs() < 1e-7 && sol.s[1].abs() < 1e-7);
        assert!((sol.y[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_lp() {
        // x1 + x2 = -1 with x >= 0
        let p = lp_only(&[1.0, 1.0], &[&[1.0, 1.0]], &[-1.0]);
        let sol = solve(&p, 1e-9, 100);
        assert_eq!(sol.termination, Termination::PrimalInfeasible);
        assert!((p.b.dot(&sol.y) - 1.0).abs() < 1e-12);
        // A^T y <= 0 componentwise.
        let aty = p.g.tr_mul(&sol.y);
        assert!(aty.iter().all(|v| *v <= 1e-9));
    }

    #[test]
    fn unbounded_lp() {
        // min -x1  s.t. x1 - x2 = 0
        let p = lp_only(&[-1.0, 0.0], &[&[1.0, -1.0]], &[0.0]);
        let sol = solve(&p, 1e-9, 100);
        assert_eq!(sol.termination, Termination::DualInfeasible);
    }

    #[test]
    fn tiny_sdp_min_eigenvalue() {
        // min <C, X> s.t. tr X = 1 gives lambda_min(C).
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let p = ConeProblem {
            n: 2,
            c: c.clone(),
            c_lp: DVector::zeros(0),
            a: vec![DMatrix::identity(2, 2)],
            g: DMatrix::zeros(1, 0),
            b: DVector::from_element(1, 1.0),
        };
        let sol = solve(&p, 1e-10, 100);
        assert_eq!(sol.termination, Termination::Optimal);
        let lam = 2.5 - math::sqrt(1.25);
        assert!((c.dot(&sol.x) - lam).abs() < 1e-8);
        assert!((sol.y[0] - lam).abs() < 1e-8);
    }
}
