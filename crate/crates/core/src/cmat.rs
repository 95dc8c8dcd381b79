//! Dense complex matrix helpers shared by the SDP pipeline.

use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Dense complex matrix; Hermitian unless stated otherwise.
pub type CMatrix = DMatrix<Complex64>;

/// `conj(f) f^T`, so that `tr(F w w^H) = |f^T w|^2`.
pub(crate) fn conj_outer(f: &[Complex64]) -> CMatrix {
    let k = f.len();
    CMatrix::from_fn(k, k, |i, j| f[i].conj() * f[j])
}

pub(crate) fn real_diag(d: &[f64]) -> CMatrix {
    let k = d.len();
    CMatrix::from_fn(k, k, |i, j| {
        if i == j {
            Complex64::new(d[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `Re tr(M X)`; exact for Hermitian pairs.
pub(crate) fn trace_product(m: &CMatrix, x: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (m[(i, j)] * x[(j, i)]).re;
        }
    }
    acc
}

/// `w^H M w`.
pub(crate) fn quad_form(m: &CMatrix, w: &[Complex64]) -> f64 {
    let n = w.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += m[(i, j)] * w[j];
        }
        acc += w[i].conj() * row;
    }
    acc.re
}

pub(crate) fn outer(w: &[Complex64]) -> CMatrix {
    let k = w.len();
    CMatrix::from_fn(k, k, |i, j| w[i] * w[j].conj())
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}
