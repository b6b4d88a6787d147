//! Small dense Hermitian helpers shared by the state and measurement code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{QdcError, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalues below this are numerical noise and are clamped to zero.
pub const NEG_EIG_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Eigenvalues of a Hermitian matrix, sorted descending. Only the lower
/// triangle is read.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut vals: Vec<f64> = match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        2 => {
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = m[(1, 0)].norm();
            let mean = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            vec![mean + r, mean - r]
        }
        _ => m.clone().symmetric_eigenvalues().iter().copied().collect(),
    };
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// Full eigendecomposition `(values, vectors)` of a Hermitian matrix.
pub fn hermitian_eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// Principal square root of a PSD Hermitian matrix. Negative eigenvalues
/// within [`NEG_EIG_TOL`] (relative to the largest) are dropped; anything
/// more negative is an error.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let n = m.nrows();
    if n == 1 {
        let v = m[(0, 0)].re;
        if v < -NEG_EIG_TOL {
            return Err(QdcError::NotPositiveSemidefinite(v));
        }
        return Ok(CMatrix::from_element(1, 1, real(v.max(0.0).sqrt())));
    }
    let (vals, vecs) = hermitian_eigh(m);
    let scale = vals.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    let mut out = CMatrix::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        if v < -NEG_EIG_TOL * scale {
            return Err(QdcError::NotPositiveSemidefinite(v));
        }
        if v <= 0.0 {
            continue;
        }
        let col = vecs.column(k);
        out += (col * col.adjoint()) * real(v.sqrt());
    }
    Ok(out)
}

/// Returns a factor `F` (rank x n) with `F^dagger F = m` for a PSD matrix.
/// Columns of `F` are vectors whose pairwise inner products reproduce `m`.
pub fn gram_factor(m: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let n = m.nrows();
    let (vals, vecs) = hermitian_eigh(m);
    let mut rows: Vec<usize> = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        if v < -NEG_EIG_TOL {
            return Err(QdcError::NotPositiveSemidefinite(v));
        }
        if v > rank_tol {
            rows.push(k);
        }
    }
    if rows.is_empty() {
        rows.push(0);
    }
    let mut f = CMatrix::zeros(rows.len(), n);
    for (r, &k) in rows.iter().enumerate() {
        let s = vals[k].max(0.0).sqrt();
        for j in 0..n {
            f[(r, j)] = vecs[(j, k)].conj() * s;
        }
    }
    Ok(f)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Elementwise product of two equally shaped matrices.
pub fn hadamard(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.component_mul(b)
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal divided out.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { real(1.0) };
        for i in 0..dim {
            u[(i, j)] *= ph;
        }
    }
    u
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    let n = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &CMatrix::identity(n, n)) <= tol
}
