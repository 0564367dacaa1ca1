//! MRC, distortion-unaware MMSE and distortion-and-aging-aware MMSE
//! combiners.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::linalg::{self, inner, quad_form, CMat, CVec, HpdFactor};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReceiverKind {
    Mrc,
    DuMmse,
    DaaMmse,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 3] = [ReceiverKind::Mrc, ReceiverKind::DuMmse, ReceiverKind::DaaMmse];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::Mrc => "mrc",
            ReceiverKind::DuMmse => "du-mmse",
            ReceiverKind::DaaMmse => "daa-mmse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(s))
    }

    /// Whether the combiner changes with the data instant.
    pub fn depends_on_instant(self) -> bool {
        matches!(self, ReceiverKind::DaaMmse)
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-BS quantities shared by every trial.
#[derive(Debug, Clone)]
pub struct BsStatics {
    /// Diagonal of `A`.
    pub alpha: Vec<f64>,
    /// Diagonal of `T = A (I - A)`.
    pub t: Vec<f64>,
    /// `sum_{l,i} p C_err + sigma^2 I`.
    pub du_base: CMat,
    /// `sum_{l,i} s C_err` with `s = alpha_u (1 + kappa_u^2) p`.
    pub s_cerr: CMat,
    /// `sum_{l,i} s C_g`.
    pub s_cg: CMat,
    /// `p`, `s`, `alpha_u`, `kappa_b^2`, `sigma^2`.
    pub p_data: f64,
    pub s: f64,
    pub alpha_ue: f64,
    pub kappa_bs2: f64,
    pub noise: f64,
}

impl BsStatics {
    pub fn new<'a>(
        alpha: Vec<f64>,
        c_err: impl IntoIterator<Item = &'a CMat>,
        c_g: impl IntoIterator<Item = &'a CMat>,
        p_data: f64,
        alpha_ue: f64,
        kappa_ue: f64,
        kappa_bs: f64,
        noise: f64,
    ) -> Self {
        let n = alpha.len();
        let s = alpha_ue * (1.0 + kappa_ue * kappa_ue) * p_data;
        let mut sum_err = CMat::zeros(n, n);
        for c in c_err {
            sum_err += c;
        }
        let mut sum_g = CMat::zeros(n, n);
        for c in c_g {
            sum_g += c;
        }
        let mut du_base = &sum_err * Complex64::new(p_data, 0.0);
        for m in 0..n {
            du_base[(m, m)] += Complex64::new(noise, 0.0);
        }
        linalg::hermitize(&mut du_base);
        let t = alpha.iter().map(|a| a * (1.0 - a)).collect();
        Self {
            alpha,
            t,
            du_base,
            s_cerr: sum_err * Complex64::new(s, 0.0),
            s_cg: sum_g * Complex64::new(s, 0.0),
            p_data,
            s,
            alpha_ue,
            kappa_bs2: kappa_bs * kappa_bs,
            noise,
        }
    }

    pub fn antennas(&self) -> usize {
        self.alpha.len()
    }
}

/// `v = g_hat`.
pub fn mrc(g_hat: &CVec) -> CVec {
    g_hat.clone()
}

/// `sum_{l,i} p g_hat g_hat^H + sum_{l,i} p C_err + sigma^2 I`.
pub fn du_mmse_matrix(st: &BsStatics, hats: &[&CVec]) -> CMat {
    let mut m = st.du_base.clone();
    for h in hats {
        linalg::add_outer(&mut m, h, st.p_data);
    }
    m
}

/// Conventional MMSE combiner for the UE whose estimate is `hats[target]`.
pub fn du_mmse(st: &BsStatics, hats: &[&CVec], target: usize) -> Result<CVec> {
    let f = HpdFactor::new(&du_mmse_matrix(st, hats), "DU-MMSE matrix")?;
    Ok(f.solve(hats[target]))
}

/// `B + c c^H`, the interference-plus-signal covariance shared by every UE
/// of a BS at data instant with correlation `theta`:
///
/// `A S A + kappa_b^2 A diag(S) A + T ((1 + kappa_b^2) diag(S) + sigma^2 I)
/// + sigma^2 A^2` with `S = theta^2 (s sum g_hat g_hat^H + sum s C_err) +
/// theta_bar^2 sum s C_g`.
pub fn daa_full_matrix(st: &BsStatics, hats: &[&CVec], theta: f64, theta_bar: f64) -> CMat {
    let n = st.antennas();
    let (t2, tb2) = (theta * theta, theta_bar * theta_bar);
    let mut s = &st.s_cerr * Complex64::new(t2, 0.0);
    if tb2 > 0.0 {
        s += &st.s_cg * Complex64::new(tb2, 0.0);
    }
    for h in hats {
        linalg::add_outer(&mut s, h, st.s * t2);
    }
    let mut b = linalg::scale_rows_cols(&s, &st.alpha);
    for m in 0..n {
        let a = st.alpha[m];
        let d = s[(m, m)].re;
        let extra = st.kappa_bs2 * a * a * d + st.t[m] * ((1.0 + st.kappa_bs2) * d + st.noise) + st.noise * a * a;
        b[(m, m)] += Complex64::new(extra, 0.0);
    }
    linalg::hermitize(&mut b);
    b
}

/// `c = alpha_u theta sqrt(p) A g_hat`.
pub fn daa_target(st: &BsStatics, g_hat: &CVec, theta: f64) -> CVec {
    let f = st.alpha_ue * theta * libm::sqrt(st.p_data);
    CVec::from_fn(g_hat.len(), |m, _| g_hat[m] * (f * st.alpha[m]))
}

/// `B = (B + c c^H) - c c^H` for one UE.
pub fn daa_b_matrix(full: &CMat, c: &CVec) -> CMat {
    let mut b = full.clone();
    linalg::add_outer(&mut b, c, -1.0);
    b
}

/// `v = (B + c c^H)^{-1} c`, the MMSE scaling of the SINR-optimal direction
/// `B^{-1} c` (they differ by the positive factor `1 + c^H B^{-1} c`).
pub fn daa_from_full(full: &HpdFactor, c: &CVec) -> CVec {
    full.solve(c)
}

/// DAA-MMSE combiner for the UE whose estimate is `hats[target]`.
pub fn daa_mmse(st: &BsStatics, hats: &[&CVec], target: usize, theta: f64, theta_bar: f64) -> Result<CVec> {
    let full = daa_full_matrix(st, hats, theta, theta_bar);
    let f = HpdFactor::new(&full, "DAA-MMSE matrix")?;
    Ok(daa_from_full(&f, &daa_target(st, hats[target], theta)))
}

/// `|v^H c|^2 / (v^H B v)`.
pub fn conditional_sinr(v: &CVec, c: &CVec, b: &CMat) -> f64 {
    let den = quad_form(v, b);
    if den <= 0.0 {
        return 0.0;
    }
    inner(v, c).norm_sqr() / den
}
