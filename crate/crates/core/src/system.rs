//! A fully built scenario: geometry, channel statistics, estimator and
//! per-BS combiner statics, plus per-trial sampling.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::channel::{build_irs_bs_channel, evolve_aggregate, AgingModel, ChannelModel, ChannelState, PhaseShifts};
use crate::config::{PhaseMode, SystemConfig};
use crate::estimation::{receive_pilot, Estimator, PilotPlan};
use crate::hardware::HardwareProfile;
use crate::linalg::{trace_product, CMat, CVec};
use crate::random::{purpose, stream};
use crate::receivers::{BsStatics, ReceiverKind};
use crate::scenario::{array_sites, build_geometry, build_link_statistics, shadowing_db, Geometry, LinkEnd, LinkStatistics};
use crate::{Error, Result};

/// Index arithmetic for cells, users and links.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub cells: usize,
    pub users: usize,
    pub antennas: usize,
    pub elements: usize,
}

impl Layout {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self { cells: cfg.cells, users: cfg.users_per_cell, antennas: cfg.antennas(), elements: cfg.elements() }
    }

    /// Flat UE index of `(l, k)`.
    #[inline]
    pub fn ue(&self, l: usize, k: usize) -> usize {
        l * self.users + k
    }

    /// Flat index of the link from UE `(l, k)` to BS or IRS `j`.
    #[inline]
    pub fn link(&self, l: usize, k: usize, j: usize) -> usize {
        (l * self.users + k) * self.cells + j
    }

    pub fn ues(&self) -> usize {
        self.cells * self.users
    }

    pub fn links(&self) -> usize {
        self.ues() * self.cells
    }
}

/// Channels at the estimation instant, received pilots and estimates of one
/// trial.
#[derive(Debug, Clone)]
pub struct TrialState {
    /// Every channel at instant `lambda`.
    pub channels: ChannelState,
    /// `y_p^j[t_k]` at `k * L + j`.
    pub pilots: Vec<CVec>,
    /// `g_hat_{lk}^j` at `layout.link(l, k, j)`.
    pub estimates: Vec<CVec>,
}

impl TrialState {
    pub fn estimate(&self, layout: &Layout, l: usize, k: usize, j: usize) -> &CVec {
        &self.estimates[layout.link(l, k, j)]
    }

    pub fn pilot(&self, layout: &Layout, k: usize, j: usize) -> &CVec {
        &self.pilots[k * layout.cells + j]
    }
}

#[derive(Debug, Clone)]
pub struct System {
    pub config: SystemConfig,
    pub hardware: HardwareProfile,
    pub layout: Layout,
    pub geometry: Geometry,
    pub model: ChannelModel,
    pub aging: AgingModel,
    pub plan: PilotPlan,
    pub estimator: Estimator,
    pub alpha_bs: Vec<f64>,
    bs: Vec<BsStatics>,
    seed: u64,
}

impl System {
    /// Builds every per-scenario quantity. Geometry, shadowing, IRS phases
    /// and all trial streams derive from `seed`.
    pub fn build(cfg: &SystemConfig, hw: &HardwareProfile, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let lay = Layout::from_config(cfg);
        let alpha_bs = hw.alpha_bs(lay.antennas)?;
        let geometry = build_geometry(cfg, seed)?;

        let mut direct = Vec::with_capacity(lay.links());
        let mut irs = Vec::with_capacity(lay.links());
        for l in 0..lay.cells {
            for k in 0..lay.users {
                for j in 0..lay.cells {
                    let id = lay.link(l, k, j) as u64;
                    direct.push(build_link_statistics(&geometry, cfg, l, k, LinkEnd::Bs(j), shadowing_db(cfg, seed, id))?);
                    let z = if lay.elements > 0 {
                        let sh = shadowing_db(cfg, seed, lay.links() as u64 + id);
                        build_link_statistics(&geometry, cfg, l, k, LinkEnd::Irs(j), sh)?
                    } else {
                        LinkStatistics { mean_los: CVec::zeros(0), corr: CMat::zeros(0, 0), rician_k: 0.0, beta: 0.0 }
                    };
                    irs.push(z);
                }
            }
        }

        let mut irs_bs = Vec::with_capacity(lay.cells * lay.cells);
        for i in 0..lay.cells {
            for j in 0..lay.cells {
                let bs_site = array_sites(&geometry, cfg, j).0;
                let irs_site = array_sites(&geometry, cfg, i).1;
                irs_bs.push(build_irs_bs_channel(bs_site, irs_site, cfg, cfg.area_km, cfg.irs_rank)?);
            }
        }

        let phases: Vec<PhaseShifts> = (0..lay.cells)
            .map(|i| match cfg.phase_mode {
                PhaseMode::Zero => PhaseShifts::zero(lay.elements),
                PhaseMode::Random => {
                    PhaseShifts::random(lay.elements, &mut stream(seed, &[purpose::PHASES, i as u64]))
                }
                PhaseMode::LosAlign => {
                    los_align(&irs_bs[i * lay.cells + i].matrix, &irs, &lay, i)
                }
            })
            .collect();

        let model = ChannelModel::new(lay, direct, irs, irs_bs, phases)?;
        let aging = AgingModel::from_config(cfg);
        let plan = PilotPlan::new(lay.users, cfg.tau_p, cfg.p_pilot_w)?;
        let estimator = Estimator::new(&model, &plan, hw, &aging, cfg.noise_power_w)?;

        let mut bs = Vec::with_capacity(lay.cells);
        for j in 0..lay.cells {
            let mut errs = Vec::with_capacity(lay.ues());
            let mut covs = Vec::with_capacity(lay.ues());
            for l in 0..lay.cells {
                for i in 0..lay.users {
                    errs.push(estimator.c_err(l, i, j));
                    covs.push(model.cov_g(l, i, j));
                }
            }
            bs.push(BsStatics::new(
                alpha_bs.clone(),
                errs,
                covs,
                cfg.p_data_w,
                hw.alpha_ue(),
                hw.kappa_ue,
                hw.kappa_bs,
                cfg.noise_power_w,
            ));
        }

        Ok(Self {
            config: cfg.clone(),
            hardware: hw.clone(),
            layout: lay,
            geometry,
            model,
            aging,
            plan,
            estimator,
            alpha_bs,
            bs,
            seed,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bs_statics(&self, j: usize) -> &BsStatics {
        &self.bs[j]
    }

    /// Draws the channels at `lambda`, runs the pilot phase and estimates
    /// every channel for trial number `trial`.
    pub fn draw_trial(&self, trial: u64) -> Result<TrialState> {
        let lay = &self.layout;
        let cfg = &self.config;
        let mut rng_c = stream(self.seed, &[purpose::CHANNEL, trial]);
        let channels = self.model.sample_state(self.plan.lambda, &mut rng_c);

        let mut rng_p = stream(self.seed, &[purpose::PILOT, trial]);
        let mut pilots = Vec::with_capacity(lay.users * lay.cells);
        for k in 0..lay.users {
            let lag = self.plan.lag(k);
            let innovations: Vec<_> = (0..lay.cells).map(|l| self.model.sample_ue(l, k, &mut rng_p)).collect();
            for j in 0..lay.cells {
                let g_tk: Vec<CVec> = (0..lay.cells)
                    .map(|l| evolve_aggregate(channels.g(lay, l, k, j), &innovations[l].aggregate[j], &self.aging, lag))
                    .collect();
                let refs: Vec<&CVec> = g_tk.iter().collect();
                pilots.push(receive_pilot(
                    &refs,
                    self.plan.symbols[k],
                    self.plan.power_w,
                    &self.hardware,
                    cfg.noise_power_w,
                    &mut rng_p,
                )?);
            }
        }

        let mut estimates = Vec::with_capacity(lay.links());
        for l in 0..lay.cells {
            for k in 0..lay.users {
                for j in 0..lay.cells {
                    estimates.push(self.estimator.estimate(&pilots[k * lay.cells + j], l, k, j));
                }
            }
        }
        Ok(TrialState { channels, pilots, estimates })
    }

    /// Closed-form MRC multi-user interference of UE `(j, k)`:
    /// `sum_l sum_{i != k} alpha_u^2 p tr(C_hat_{jk}^j A C_{g_{li}^j} A)`.
    pub fn mui_closed_form(&self, receiver: ReceiverKind, j: usize, k: usize) -> Result<f64> {
        if receiver != ReceiverKind::Mrc {
            return Err(Error::Unsupported(alloc::format!(
                "the closed-form interference term is only available for MRC, not {receiver}"
            )));
        }
        let lay = &self.layout;
        let au = self.hardware.alpha_ue();
        let w = au * au * self.config.p_data_w;
        let c_hat = self.estimator.c_hat(j, k, j);
        let mut total = 0.0;
        for l in 0..lay.cells {
            for i in 0..lay.users {
                if i == k {
                    continue;
                }
                let acga = crate::linalg::scale_rows_cols(self.model.cov_g(l, i, j), &self.alpha_bs);
                total += w * trace_product(c_hat, &acga).re;
            }
        }
        Ok(total)
    }

    /// Per-UE data-phase transmit second moment `alpha_u (1 + kappa_u^2) p`.
    pub fn ue_output_power(&self) -> f64 {
        self.hardware.ue_output_power(self.config.p_data_w)
    }

    /// `theta[n - lambda]` and `theta_bar[n - lambda]`.
    pub fn aging_at(&self, n: usize) -> (f64, f64) {
        let lag = n - self.plan.lambda;
        (self.aging.theta(lag), self.aging.theta_bar(lag))
    }
}

/// Co-phases IRS `i` so the LoS of its cell's strongest UE lines up with the
/// dominant right singular vector of `X_i^i`.
fn los_align(x: &CMat, irs: &[LinkStatistics], lay: &Layout, i: usize) -> PhaseShifts {
    if lay.elements == 0 {
        return PhaseShifts::zero(0);
    }
    let best = (0..lay.users)
        .max_by(|&a, &b| irs[lay.link(i, a, i)].beta.total_cmp(&irs[lay.link(i, b, i)].beta))
        .unwrap_or(0);
    let zbar = &irs[lay.link(i, best, i)].mean_los;
    let svd = x.clone().svd(false, true);
    let top = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(idx, _)| idx)
        .unwrap_or(0);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let angles = (0..lay.elements)
        .map(|m| {
            let target = v_t[(top, m)].conj();
            let z = zbar[m];
            let zarg = if z == Complex64::new(0.0, 0.0) { 0.0 } else { z.arg() };
            let a = target.arg() - zarg;
            a - core::f64::consts::TAU * libm::floor(a / core::f64::consts::TAU)
        })
        .collect();
    PhaseShifts { angles }
}
