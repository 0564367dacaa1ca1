//! Dense complex linear algebra helpers on top of `nalgebra`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const C0: Complex64 = Complex64::new(0.0, 0.0);
pub const C1: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    let mut out = m.clone();
    hermitize(&mut out);
    out
}

/// Symmetrizes `m` in place so it is exactly Hermitian.
pub fn hermitize(m: &mut CMat) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = c(m[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of the Hermitian part of `m`, unordered.
pub fn hermitian_eigenvalues(m: &CMat) -> DVector<f64> {
    hermitian_part(m).symmetric_eigenvalues()
}

fn min_max(values: &DVector<f64>) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// True when `m` is Hermitian and its smallest eigenvalue is no lower than
/// `-rel_tol * max|eigenvalue|`.
pub fn is_hermitian_psd(m: &CMat, rel_tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    if m.nrows() == 0 {
        return true;
    }
    let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(f64::MIN_POSITIVE);
    if hermitian_defect(m) > 1e-9 * scale {
        return false;
    }
    let (lo, hi) = min_max(&hermitian_eigenvalues(m));
    lo >= -rel_tol * hi.abs().max(lo.abs())
}

/// Hermitian PSD square root via eigendecomposition; eigenvalues below zero
/// are clipped. Fails when the most negative eigenvalue exceeds `1e-8` of
/// the spectral radius.
pub fn hermitian_sqrt(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "square root of a {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let (lo, hi) = min_max(&eig.eigenvalues);
    let radius = hi.abs().max(lo.abs());
    if lo < -1e-8 * radius {
        return Err(Error::NotPsd { min_eig: lo, max_eig: hi });
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (col, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = libm::sqrt(lam.max(0.0));
        scaled.column_mut(col).scale_mut(s);
    }
    let mut out = &scaled * v.adjoint();
    hermitize(&mut out);
    Ok(out)
}

/// Condition number of the Hermitian part of `m` (ratio of extreme
/// eigenvalue magnitudes).
pub fn hermitian_condition(m: &CMat) -> f64 {
    let eig = hermitian_eigenvalues(m);
    let mags = eig.iter().map(|v| v.abs());
    let (lo, hi) = mags.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

enum Factorization {
    Cholesky(Cholesky<Complex64, Dyn>),
    Lu(LU<Complex64, Dyn, Dyn>),
}

/// Factorization of a (nominally) Hermitian positive-definite matrix.
///
/// Tries Cholesky first and falls back to partially pivoted LU when the
/// matrix is not numerically positive definite.
pub struct HpdFactor {
    inner: Factorization,
}

impl HpdFactor {
    pub fn new(m: &CMat, what: &'static str) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some(chol) = hermitian_part(m).cholesky() {
            let diag_ok = chol.l_dirty().diagonal().iter().all(|d| d.re.is_finite() && d.re > 0.0 && d.im.abs() <= 1e-10 * d.re);
            if diag_ok {
                return Ok(Self { inner: Factorization::Cholesky(chol) });
            }
        }
        let lu = m.clone().lu();
        if lu.is_invertible() {
            let u = lu.u();
            let (lo, hi) = u
                .diagonal()
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), z| (lo.min(z.norm()), hi.max(z.norm())));
            if lo > 1e-14 * hi {
                return Ok(Self { inner: Factorization::Lu(lu) });
            }
        }
        Err(Error::Singular { what, cond: hermitian_condition(m) })
    }

    pub fn solve(&self, b: &CVec) -> CVec {
        match &self.inner {
            Factorization::Cholesky(ch) => ch.solve(b),
            Factorization::Lu(lu) => lu.solve(b).expect("LU factor was checked invertible"),
        }
    }

    pub fn solve_mat(&self, b: &CMat) -> CMat {
        match &self.inner {
            Factorization::Cholesky(ch) => ch.solve(b),
            Factorization::Lu(lu) => lu.solve(b).expect("LU factor was checked invertible"),
        }
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self.inner, Factorization::Cholesky(_))
    }
}

/// Solves `m x = b` for Hermitian positive-definite `m`.
pub fn solve_hpd(m: &CMat, b: &CVec, what: &'static str) -> Result<CVec> {
    Ok(HpdFactor::new(m, what)?.solve(b))
}

/// `Re(v^H m v)`.
pub fn quad_form(v: &CVec, m: &CMat) -> f64 {
    let n = v.len();
    let mut acc = C0;
    for col in 0..n {
        let vc = v[col];
        if vc == C0 {
            continue;
        }
        let mut inner = C0;
        for row in 0..n {
            inner += v[row].conj() * m[(row, col)];
        }
        acc += inner * vc;
    }
    acc.re
}

/// `sum_n d_n |v_n|^2` for a real diagonal `d`.
pub fn diag_quad_form(v: &CVec, d: &[f64]) -> f64 {
    v.iter().zip(d).map(|(z, &w)| w * z.norm_sqr()).sum()
}

/// `v^H w` (conjugate on the left operand).
#[inline]
pub fn inner(v: &CVec, w: &CVec) -> Complex64 {
    v.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let mut acc = C0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `diag(d) m diag(d)` for a real diagonal `d`.
pub fn scale_rows_cols(m: &CMat, d: &[f64]) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (d[i] * d[j]))
}

/// Adds `w * x x^H` to `m`.
pub fn add_outer(m: &mut CMat, x: &CVec, w: f64) {
    let n = x.len();
    for j in 0..n {
        let xj = x[j].conj() * w;
        for i in 0..n {
            m[(i, j)] += x[i] * xj;
        }
    }
}

/// Relative Frobenius distance `||a - b||_F / ||b||_F`.
pub fn rel_frobenius(a: &CMat, b: &CMat) -> f64 {
    let denom = b.norm();
    let diff = (a - b).norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

/// One draw of a circularly-symmetric complex Gaussian with the given variance.
#[inline]
pub fn cn_scalar<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = libm::sqrt(0.5 * variance);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// A length-`n` vector of i.i.d. `CN(0, 1)` entries.
pub fn cn_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| cn_scalar(rng, 1.0))
}

/// `CN(0, diag(var))` draw.
pub fn cn_vector_diag<R: Rng + ?Sized>(rng: &mut R, var: &[f64]) -> CVec {
    CVec::from_iterator(var.len(), var.iter().map(|&v| cn_scalar(rng, v.max(0.0))))
}

/// Column-major flattening used for determinism checks and tests.
pub fn to_vec(m: &CMat) -> Vec<Complex64> {
    m.iter().copied().collect()
}
