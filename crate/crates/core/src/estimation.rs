//! Impaired uplink training and the phase-unaware LMMSE estimator.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{AgingModel, ChannelModel};
use crate::hardware::{d_from_channels, HardwareProfile};
use crate::linalg::{self, cn_vector_diag, CMat, CVec, HpdFactor};
use crate::system::Layout;
use crate::{Error, Result};

/// Time-multiplexed pilots: UE `k` of every cell transmits at instant
/// `t_k = k + 1`, and channels are estimated at `lambda = tau_p + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotPlan {
    /// 1-based pilot instants `t_k`.
    pub instants: Vec<usize>,
    /// Unit-modulus pilot symbols.
    pub symbols: Vec<Complex64>,
    pub power_w: f64,
    pub lambda: usize,
}

impl PilotPlan {
    pub fn new(users: usize, tau_p: usize, power_w: f64) -> Result<Self> {
        if users > tau_p {
            return Err(Error::InvalidConfig(format!("{users} users need at least {users} pilot instants, tau_p={tau_p}")));
        }
        Ok(Self {
            instants: (1..=users).collect(),
            symbols: alloc::vec![Complex64::new(1.0, 0.0); users],
            power_w,
            lambda: tau_p + 1,
        })
    }

    /// `lambda - t_k`.
    pub fn lag(&self, k: usize) -> usize {
        self.lambda - self.instants[k]
    }
}

/// `Psi` for pilot index `k` at one BS, given `C_g` of every co-pilot UE.
///
/// `Psi = sum_l alpha_u (1 + kappa_u^2) p A C_l A + kappa_b^2 A D A +
/// sigma^2 A^2 + A (I - A) C`, where `D = sum_l alpha_u (1 + kappa_u^2) p
/// diag(C_l)` and `C = (1 + kappa_b^2) D + sigma^2 I`.
pub fn psi_matrix(covs: &[&CMat], alpha_bs: &[f64], hw: &HardwareProfile, p_pilot: f64, noise: f64) -> Result<CMat> {
    let n = alpha_bs.len();
    if covs.iter().any(|c| c.nrows() != n || c.ncols() != n) {
        return Err(Error::DimensionMismatch(format!("covariances do not match {n} antennas")));
    }
    let s = hw.ue_output_power(p_pilot);
    let mut sum = CMat::zeros(n, n);
    for c in covs {
        sum += *c * Complex64::new(s, 0.0);
    }
    let kb2 = hw.kappa_bs * hw.kappa_bs;
    let mut psi = linalg::scale_rows_cols(&sum, alpha_bs);
    for m in 0..n {
        let a = alpha_bs[m];
        let d = sum[(m, m)].re;
        let extra = kb2 * a * a * d + noise * a * a + a * (1.0 - a) * ((1.0 + kb2) * d + noise);
        psi[(m, m)] += Complex64::new(extra, 0.0);
    }
    linalg::hermitize(&mut psi);
    Ok(psi)
}

/// Received pilot at one BS when the co-pilot UEs' channels at the pilot
/// instant are `g_tk`. Runs every UE through its transmit chain, adds AWGN,
/// then the BS RF and ADC chains.
pub fn receive_pilot<R: Rng + ?Sized>(
    g_tk: &[&CVec],
    symbol: Complex64,
    p_pilot: f64,
    hw: &HardwareProfile,
    noise: f64,
    rng: &mut R,
) -> Result<CVec> {
    let n = g_tk.first().map_or(0, |g| g.len());
    let mut clean = CVec::zeros(n);
    for g in g_tk {
        let s = hw.ue_transmit_chain(symbol, p_pilot, rng);
        clean.axpy(s.signal, *g, Complex64::new(1.0, 0.0));
    }
    clean += cn_vector_diag(rng, &alloc::vec![noise; n]);
    let s = hw.ue_output_power(p_pilot);
    let d = d_from_channels(g_tk.iter().map(|g| (*g, s)), n);
    Ok(hw.bs_receive_chain(&clean, &d, noise, rng)?.y)
}

/// `g_hat = W y_p`.
pub fn lmmse_estimate(y_p: &CVec, weight: &CMat) -> CVec {
    weight * y_p
}

/// Estimator matrices for every `(l, k, j)`, fixed for a scenario.
#[derive(Debug, Clone)]
pub struct Estimator {
    layout: Layout,
    psi: Vec<CMat>,
    weights: Vec<CMat>,
    c_hat: Vec<CMat>,
    c_err: Vec<CMat>,
    pilot_theta: Vec<f64>,
}

impl Estimator {
    pub fn new(
        model: &ChannelModel,
        plan: &PilotPlan,
        hw: &HardwareProfile,
        aging: &AgingModel,
        noise: f64,
    ) -> Result<Self> {
        let lay = model.layout;
        let alpha = hw.alpha_bs(lay.antennas)?;
        let au = hw.alpha_ue();
        let p = plan.power_w;
        let pilot_theta: Vec<f64> = (0..lay.users).map(|k| aging.theta(plan.lag(k))).collect();
        let mut psi = Vec::with_capacity(lay.users * lay.cells);
        let mut weights = alloc::vec![CMat::zeros(0, 0); lay.links()];
        let mut c_hat = weights.clone();
        let mut c_err = weights.clone();
        for k in 0..lay.users {
            let scale = au * libm::sqrt(p) * pilot_theta[k];
            for j in 0..lay.cells {
                let covs: Vec<&CMat> = (0..lay.cells).map(|l| model.cov_g(l, k, j)).collect();
                let m = psi_matrix(&covs, &alpha, hw, p, noise)?;
                let f = HpdFactor::new(&m, "pilot covariance")?;
                for l in 0..lay.cells {
                    let cg = model.cov_g(l, k, j);
                    let ac = scale_rows(cg, &alpha);
                    // W = scale C_g A Psi^-1 = (scale Psi^-1 A C_g)^H
                    let w = f.solve_mat(&ac).adjoint() * Complex64::new(scale, 0.0);
                    let mut ch = &w * &ac * Complex64::new(scale, 0.0);
                    linalg::hermitize(&mut ch);
                    let mut ce = cg - &ch;
                    linalg::hermitize(&mut ce);
                    let idx = lay.link(l, k, j);
                    weights[idx] = w;
                    c_hat[idx] = ch;
                    c_err[idx] = ce;
                }
                psi.push(m);
            }
        }
        Ok(Self { layout: lay, psi, weights, c_hat, c_err, pilot_theta })
    }

    /// `Psi` for pilot `k` at BS `j`.
    pub fn psi(&self, k: usize, j: usize) -> &CMat {
        &self.psi[k * self.layout.cells + j]
    }

    pub fn weight(&self, l: usize, k: usize, j: usize) -> &CMat {
        &self.weights[self.layout.link(l, k, j)]
    }

    pub fn c_hat(&self, l: usize, k: usize, j: usize) -> &CMat {
        &self.c_hat[self.layout.link(l, k, j)]
    }

    pub fn c_err(&self, l: usize, k: usize, j: usize) -> &CMat {
        &self.c_err[self.layout.link(l, k, j)]
    }

    /// `theta[lambda - t_k]`.
    pub fn pilot_theta(&self, k: usize) -> f64 {
        self.pilot_theta[k]
    }

    pub fn estimate(&self, y_p: &CVec, l: usize, k: usize, j: usize) -> CVec {
        lmmse_estimate(y_p, self.weight(l, k, j))
    }
}

/// `A m` for a real diagonal `A`.
fn scale_rows(m: &CMat, d: &[f64]) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * d[i])
}
