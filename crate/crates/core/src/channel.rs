//! Correlated Rician channels with random LoS phases, the cascaded IRS
//! channel, and Jakes aging.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::config::{db_to_linear, SystemConfig};
use crate::linalg::{self, cn_vector, CMat, CVec};
use crate::scenario::{arrival, upa_steering, LinkStatistics, Site};
use crate::special::bessel_j0;
use crate::system::Layout;
use crate::{Error, Result};

/// Jakes temporal correlation `theta[m] = J0(2 pi f_d T_s m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgingModel {
    pub doppler_hz: f64,
    pub sample_period_s: f64,
}

impl AgingModel {
    pub fn new(doppler_hz: f64, sample_period_s: f64) -> Self {
        Self { doppler_hz, sample_period_s }
    }

    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self::new(cfg.doppler_hz(), cfg.sample_period_s)
    }

    /// Correlation between samples `lag` instants apart.
    pub fn theta(&self, lag: usize) -> f64 {
        if lag == 0 || self.doppler_hz == 0.0 {
            return 1.0;
        }
        bessel_j0(TAU * self.doppler_hz * self.sample_period_s * lag as f64)
    }

    /// Innovation weight `sqrt(1 - theta^2)`.
    pub fn theta_bar(&self, lag: usize) -> f64 {
        let t = self.theta(lag);
        libm::sqrt((1.0 - t * t).max(0.0))
    }
}

pub fn temporal_corr(aging: &AgingModel, lag: usize) -> f64 {
    aging.theta(lag)
}

/// Diagonal IRS reflection `diag(exp(j theta_m))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShifts {
    pub angles: Vec<f64>,
}

impl PhaseShifts {
    pub fn zero(m: usize) -> Self {
        Self { angles: alloc::vec![0.0; m] }
    }

    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        Self { angles: (0..m).map(|_| rng.random::<f64>() * TAU).collect() }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn phasors(&self) -> CVec {
        CVec::from_iterator(self.angles.len(), self.angles.iter().map(|&a| Complex64::from_polar(1.0, a)))
    }

    pub fn apply(&self, z: &CVec) -> CVec {
        z.component_mul(&self.phasors())
    }

    /// `x Theta`, i.e. column `m` of `x` rotated by `theta_m`.
    pub fn right_apply(&self, x: &CMat) -> CMat {
        let mut out = x.clone();
        for (m, &a) in self.angles.iter().enumerate() {
            let r = Complex64::from_polar(1.0, a);
            for v in out.column_mut(m).iter_mut() {
                *v *= r;
            }
        }
        out
    }
}

/// Deterministic multipath IRS-BS channel `X` (N x M).
#[derive(Debug, Clone, PartialEq)]
pub struct IrsBsChannel {
    pub matrix: CMat,
    /// Number of paths actually used.
    pub rank: usize,
    /// Set when the requested rank exceeded `min(N, M)`.
    pub clamped: bool,
    pub beta: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn frac(x: f64) -> f64 {
    x - libm::floor(x)
}

/// Builds `X` from `rank` plane-wave paths: the geometric path plus
/// golden-ratio angular offsets, scaled so `||X||_F^2 = beta N M`.
pub fn build_irs_bs_channel(
    bs: Site,
    irs: Site,
    cfg: &SystemConfig,
    area_km: f64,
    rank: Option<usize>,
) -> Result<IrsBsChannel> {
    let (n, m) = (cfg.antennas(), cfg.elements());
    let full = n.min(m);
    if m == 0 {
        return Ok(IrsBsChannel { matrix: CMat::zeros(n, 0), rank: 0, clamped: false, beta: 0.0 });
    }
    let wanted = rank.unwrap_or(full);
    if wanted == 0 {
        return Err(Error::InvalidArgument(format!("IRS-BS rank must be at least 1")));
    }
    let r = wanted.min(full);
    let (aoa, eoa, dist) = arrival(bs, irs, area_km);
    let (aod, eod, _) = arrival(irs, bs, area_km);
    if !(dist > 1e-9) {
        return Err(Error::DegenerateGeometry(format!("IRS and BS coincide")));
    }
    let beta = db_to_linear(cfg.irs_bs_path_loss.gain_db(dist));
    let mut x = CMat::zeros(n, m);
    for p in 0..r {
        let (da, de, db, dd) = if p == 0 {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            let t = p as f64;
            (
                (frac(t * GOLDEN) - 0.5) * 0.8 * PI,
                (frac(t * GOLDEN * GOLDEN + 0.25) - 0.5) * 0.4 * PI,
                (frac(t * core::f64::consts::SQRT_2) - 0.5) * 0.8 * PI,
                (frac(t * 1.732_050_807_568_877_2 + 0.5) - 0.5) * 0.4 * PI,
            )
        };
        let a_bs = upa_steering(cfg.bs_dims, aoa + da, eoa + de, cfg.bs_spacing);
        let a_irs = upa_steering(cfg.irs_dims, aod + db, eod + dd, cfg.irs_spacing);
        x += &a_bs * a_irs.adjoint();
    }
    let scale = libm::sqrt(beta * (n * m) as f64) / x.norm();
    x *= Complex64::new(scale, 0.0);
    Ok(IrsBsChannel { matrix: x, rank: r, clamped: wanted > full, beta })
}

/// Draws Rician realizations of one link.
#[derive(Debug, Clone)]
pub struct LinkSampler {
    pub stats: LinkStatistics,
    sqrt_corr: CMat,
}

impl LinkSampler {
    pub fn new(stats: LinkStatistics) -> Result<Self> {
        let sqrt_corr = if stats.dim() == 0 {
            CMat::zeros(0, 0)
        } else {
            linalg::hermitian_sqrt(&stats.corr)?
        };
        Ok(Self { stats, sqrt_corr })
    }

    pub fn sqrt_corr(&self) -> &CMat {
        &self.sqrt_corr
    }

    /// `t = mean e^{j phi} + R^{1/2} w` with `phi ~ U[-pi, pi)`, `w ~ CN(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (CVec, f64) {
        let phi = rng.random::<f64>() * TAU - PI;
        let w = cn_vector(rng, self.stats.dim());
        let t = &self.stats.mean_los * Complex64::from_polar(1.0, phi) + &self.sqrt_corr * w;
        (t, phi)
    }
}

/// `t = mean e^{j phi} + R^{1/2} w` for explicit statistics.
pub fn sample_link<R: Rng + ?Sized>(stats: &LinkStatistics, rng: &mut R) -> Result<(CVec, f64)> {
    Ok(LinkSampler::new(stats.clone())?.sample(rng))
}

/// `g = h + sum_i X_i Theta_i z_i`.
pub fn aggregate_channel(h: &CVec, z_all: &[CVec], x_all: &[&CMat], theta_all: &[PhaseShifts]) -> Result<CVec> {
    if z_all.len() != x_all.len() || z_all.len() != theta_all.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} IRS vectors, {} IRS-BS channels, {} phase sets",
            z_all.len(),
            x_all.len(),
            theta_all.len()
        )));
    }
    let mut g = h.clone();
    for ((z, x), th) in z_all.iter().zip(x_all).zip(theta_all) {
        if x.nrows() != h.len() || x.ncols() != z.len() || th.len() != z.len() {
            return Err(Error::DimensionMismatch(format!(
                "X is {}x{}, h has {}, z has {}, Theta has {}",
                x.nrows(),
                x.ncols(),
                h.len(),
                z.len(),
                th.len()
            )));
        }
        if z.is_empty() {
            continue;
        }
        g += *x * th.apply(z);
    }
    Ok(g)
}

/// `(C_g, C_h, [C_z_i])` with `C_g = C_h + sum_i X_i Theta_i C_z_i Theta_i^H X_i^H`.
pub fn aggregate_covariance(
    stats_h: &LinkStatistics,
    stats_z_all: &[LinkStatistics],
    x_all: &[&CMat],
    theta_all: &[PhaseShifts],
) -> Result<(CMat, CMat, Vec<CMat>)> {
    if stats_z_all.len() != x_all.len() || stats_z_all.len() != theta_all.len() {
        return Err(Error::DimensionMismatch(format!("per-IRS argument lengths differ")));
    }
    let c_h = stats_h.covariance();
    let mut c_g = c_h.clone();
    let mut c_z_all = Vec::with_capacity(stats_z_all.len());
    for ((sz, x), th) in stats_z_all.iter().zip(x_all).zip(theta_all) {
        let c_z = sz.covariance();
        if c_z.nrows() > 0 {
            let xt = th.right_apply(x);
            c_g += &xt * &c_z * xt.adjoint();
        }
        c_z_all.push(c_z);
    }
    linalg::hermitize(&mut c_g);
    Ok((c_g, c_h, c_z_all))
}

/// `theta g + theta_bar q` for a UE's channel `lag` instants away.
pub fn evolve_aggregate(g_lambda: &CVec, innovation: &CVec, aging: &AgingModel, lag: usize) -> CVec {
    if lag == 0 {
        return g_lambda.clone();
    }
    let t = aging.theta(lag);
    let tb = aging.theta_bar(lag);
    g_lambda * Complex64::new(t, 0.0) + innovation * Complex64::new(tb, 0.0)
}

/// Every link of one UE in one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct UeRealization {
    /// `h^j` for each BS `j`.
    pub direct: Vec<CVec>,
    /// `z^i` for each IRS `i`.
    pub irs: Vec<CVec>,
    /// `g^j` for each BS `j`.
    pub aggregate: Vec<CVec>,
    /// LoS phases, direct links first then IRS links.
    pub los_phases: Vec<f64>,
}

/// All channels of a trial at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub ues: Vec<UeRealization>,
    pub time_index: usize,
}

impl ChannelState {
    /// `g_{lk}^j`.
    #[inline]
    pub fn g(&self, layout: &Layout, l: usize, k: usize, j: usize) -> &CVec {
        &self.ues[layout.ue(l, k)].aggregate[j]
    }
}

/// Per-scenario channel statistics and the fixed IRS configuration.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub layout: Layout,
    direct: Vec<LinkSampler>,
    irs: Vec<LinkSampler>,
    irs_bs: Vec<IrsBsChannel>,
    phases: Vec<PhaseShifts>,
    cascade: Vec<CMat>,
    cov_g: Vec<CMat>,
}

impl ChannelModel {
    /// `direct[link(l,k,j)]`, `irs[link(l,k,i)]`, `irs_bs[i * L + j]`,
    /// `phases[i]`.
    pub fn new(
        layout: Layout,
        direct: Vec<LinkStatistics>,
        irs: Vec<LinkStatistics>,
        irs_bs: Vec<IrsBsChannel>,
        phases: Vec<PhaseShifts>,
    ) -> Result<Self> {
        let (l, links) = (layout.cells, layout.links());
        if direct.len() != links || irs.len() != links || irs_bs.len() != l * l || phases.len() != l {
            return Err(Error::DimensionMismatch(format!("channel model inputs do not match the layout")));
        }
        let direct = direct.into_iter().map(LinkSampler::new).collect::<Result<Vec<_>>>()?;
        let irs = irs.into_iter().map(LinkSampler::new).collect::<Result<Vec<_>>>()?;
        let cascade: Vec<CMat> = (0..l * l).map(|ij| phases[ij / l].right_apply(&irs_bs[ij].matrix)).collect();
        let mut model = Self { layout, direct, irs, irs_bs, phases, cascade, cov_g: Vec::new() };
        let mut cov_g = Vec::with_capacity(links);
        for li in 0..layout.cells {
            for k in 0..layout.users {
                for j in 0..layout.cells {
                    let stats_z: Vec<LinkStatistics> =
                        (0..l).map(|i| model.irs[layout.link(li, k, i)].stats.clone()).collect();
                    let xs: Vec<&CMat> = (0..l).map(|i| &model.irs_bs[i * l + j].matrix).collect();
                    let (c_g, _, _) =
                        aggregate_covariance(&model.direct[layout.link(li, k, j)].stats, &stats_z, &xs, &model.phases)?;
                    cov_g.push(c_g);
                }
            }
        }
        model.cov_g = cov_g;
        Ok(model)
    }

    pub fn direct_stats(&self, l: usize, k: usize, j: usize) -> &LinkStatistics {
        &self.direct[self.layout.link(l, k, j)].stats
    }

    pub fn irs_stats(&self, l: usize, k: usize, i: usize) -> &LinkStatistics {
        &self.irs[self.layout.link(l, k, i)].stats
    }

    /// `X_i^j`.
    pub fn irs_bs(&self, i: usize, j: usize) -> &IrsBsChannel {
        &self.irs_bs[i * self.layout.cells + j]
    }

    pub fn phases(&self) -> &[PhaseShifts] {
        &self.phases
    }

    /// `X_i^j Theta_i`.
    pub fn cascade(&self, i: usize, j: usize) -> &CMat {
        &self.cascade[i * self.layout.cells + j]
    }

    /// `C_{g_{lk}^j}`.
    pub fn cov_g(&self, l: usize, k: usize, j: usize) -> &CMat {
        &self.cov_g[self.layout.link(l, k, j)]
    }

    /// Fresh realization of every link of UE `(l, k)`.
    pub fn sample_ue<R: Rng + ?Sized>(&self, l: usize, k: usize, rng: &mut R) -> UeRealization {
        let lay = &self.layout;
        let mut los_phases = Vec::with_capacity(2 * lay.cells);
        let mut direct = Vec::with_capacity(lay.cells);
        for j in 0..lay.cells {
            let (h, ph) = self.direct[lay.link(l, k, j)].sample(rng);
            los_phases.push(ph);
            direct.push(h);
        }
        let mut irs = Vec::with_capacity(lay.cells);
        if lay.elements > 0 {
            for i in 0..lay.cells {
                let (z, ph) = self.irs[lay.link(l, k, i)].sample(rng);
                los_phases.push(ph);
                irs.push(z);
            }
        }
        let aggregate = (0..lay.cells)
            .map(|j| {
                let mut g = direct[j].clone();
                for (i, z) in irs.iter().enumerate() {
                    g += self.cascade(i, j) * z;
                }
                g
            })
            .collect();
        UeRealization { direct, irs, aggregate, los_phases }
    }

    /// Fresh realization of every link in the network.
    pub fn sample_state<R: Rng + ?Sized>(&self, time_index: usize, rng: &mut R) -> ChannelState {
        let lay = &self.layout;
        let mut ues = Vec::with_capacity(lay.ues());
        for l in 0..lay.cells {
            for k in 0..lay.users {
                ues.push(self.sample_ue(l, k, rng));
            }
        }
        ChannelState { ues, time_index }
    }

    /// Largest relative mismatch between stored aggregates and a recomputation
    /// from the component links.
    pub fn aggregate_defect(&self, state: &ChannelState) -> f64 {
        let lay = &self.layout;
        let mut worst = 0.0f64;
        for l in 0..lay.cells {
            for k in 0..lay.users {
                let ue = &state.ues[lay.ue(l, k)];
                for j in 0..lay.cells {
                    let g = if ue.irs.is_empty() {
                        aggregate_channel(&ue.direct[j], &[], &[], &[])
                    } else {
                        let xs: Vec<&CMat> = (0..lay.cells).map(|i| &self.irs_bs(i, j).matrix).collect();
                        aggregate_channel(&ue.direct[j], &ue.irs, &xs, &self.phases)
                    }
                    .expect("consistent dimensions");
                    let denom = g.norm().max(f64::MIN_POSITIVE);
                    worst = worst.max((&g - &ue.aggregate[j]).norm() / denom);
                }
            }
        }
        worst
    }
}
