//! Use-and-then-forget spectral efficiency with its ten-term breakdown.
//!
//! Every term is a conditional expectation over the data-phase innovation,
//! symbols and noises, evaluated in closed form given the channels at the
//! estimation instant; only the channels at `lambda`, the pilot-phase
//! innovations and the pilot noises are sampled. Trials are processed in
//! fixed-size blocks whose moment sums are merged in block order, so results
//! do not depend on how blocks are scheduled.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::channel::{evolve_aggregate, AgingModel};
use crate::hardware::d_from_channels;
use crate::linalg::{cn_scalar, cn_vector_diag, inner, quad_form, CMat, CVec, HpdFactor};
use crate::random::{purpose, stream};
use crate::receivers::{daa_from_full, daa_full_matrix, daa_target, du_mmse_matrix, mrc, ReceiverKind};
use crate::system::{System, TrialState};
use crate::{Error, Result};

pub const TERM_NAMES: [&str; 10] = ["DS", "BU", "CA", "MUI", "PC", "DAC", "TRF", "RRF", "ADC", "NS"];

/// Desired-signal and interference powers of one UE at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Terms {
    pub ds: f64,
    pub bu: f64,
    pub ca: f64,
    pub mui: f64,
    pub pc: f64,
    pub dac: f64,
    pub trf: f64,
    pub rrf: f64,
    pub adc: f64,
    pub ns: f64,
}

impl Terms {
    pub fn to_array(&self) -> [f64; 10] {
        [self.ds, self.bu, self.ca, self.mui, self.pc, self.dac, self.trf, self.rrf, self.adc, self.ns]
    }

    pub fn from_array(a: [f64; 10]) -> Self {
        Self { ds: a[0], bu: a[1], ca: a[2], mui: a[3], pc: a[4], dac: a[5], trf: a[6], rrf: a[7], adc: a[8], ns: a[9] }
    }

    /// Sum of every term except DS.
    pub fn interference(&self) -> f64 {
        self.to_array()[1..].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.to_array().iter().sum()
    }
}

/// Sampled received power against the term sum, trial by trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCheck {
    /// Mean of `|v^H y|^2` over trials.
    pub sampled: f64,
    /// Mean of the per-trial term sum.
    pub predicted: f64,
    /// Mean and standard error of the per-trial difference.
    pub diff: f64,
    pub diff_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeBreakdown {
    pub receiver: ReceiverKind,
    pub n: usize,
    pub cell: usize,
    pub user: usize,
    pub terms: Terms,
    /// Monte Carlo standard error of each term.
    pub stderr: Terms,
    pub sinr: f64,
    /// `log2(1 + sinr)`.
    pub se: f64,
    pub se_stderr: f64,
    pub trials: usize,
    /// BU came out negative from Monte Carlo noise and was clipped to zero.
    pub bu_clipped: bool,
    pub power: Option<PowerCheck>,
    /// Coefficients of `theta^2` in MUI and PC with the combiner held fixed:
    /// `MUI(n) = mui_slope theta^2[n - lambda] + const`.
    pub mui_slope: f64,
    pub mui_slope_stderr: f64,
    pub pc_slope: f64,
    pub pc_slope_stderr: f64,
}

/// What to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub trials: usize,
    pub receivers: Vec<ReceiverKind>,
    /// Data instants `n` (1-based, `lambda <= n <= tau_c`).
    pub instants: Vec<usize>,
    /// Trials per block; blocks are the unit of parallel work.
    pub block_size: usize,
    /// Also draw the full received signal to check the decomposition.
    pub sample_received_power: bool,
}

pub const DEFAULT_BLOCK_SIZE: usize = 32;

impl SimOptions {
    pub fn new(trials: usize, receivers: &[ReceiverKind], instants: Vec<usize>) -> Self {
        Self {
            trials,
            receivers: receivers.to_vec(),
            instants,
            block_size: DEFAULT_BLOCK_SIZE,
            sample_received_power: false,
        }
    }

    pub fn blocks(&self) -> usize {
        self.trials.div_ceil(self.block_size.max(1))
    }
}

/// `lambda, lambda + stride, ...` up to and including `tau_c`.
pub fn instant_grid(lambda: usize, tau_c: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut v: Vec<usize> = (lambda..=tau_c).step_by(stride).collect();
    if v.last() != Some(&tau_c) && lambda <= tau_c {
        v.push(tau_c);
    }
    v
}

// Per-trial statistic vector: Re b, Im b, |b|^2, CA, MUI, PC, DAC, TRF, RRF,
// ADC, NS, then the theta^2 coefficients of MUI and PC.
const NX: usize = 13;

#[derive(Debug, Clone, PartialEq)]
struct Moments {
    count: u64,
    sum: [f64; NX],
    cross: [[f64; NX]; NX],
    // sampled power, difference, squared difference, predicted
    power: [f64; 4],
}

impl Moments {
    fn new() -> Self {
        Self { count: 0, sum: [0.0; NX], cross: [[0.0; NX]; NX], power: [0.0; 4] }
    }

    fn add(&mut self, x: &[f64; NX]) {
        self.count += 1;
        for a in 0..NX {
            self.sum[a] += x[a];
            for b in a..NX {
                self.cross[a][b] += x[a] * x[b];
            }
        }
    }

    fn merge(&mut self, o: &Moments) {
        self.count += o.count;
        for a in 0..NX {
            self.sum[a] += o.sum[a];
            for b in a..NX {
                self.cross[a][b] += o.cross[a][b];
            }
        }
        for i in 0..4 {
            self.power[i] += o.power[i];
        }
    }

    /// Sample means and unbiased covariance.
    fn stats(&self) -> ([f64; NX], [[f64; NX]; NX]) {
        let t = self.count as f64;
        let mut mu = [0.0; NX];
        for a in 0..NX {
            mu[a] = self.sum[a] / t;
        }
        let mut cov = [[0.0; NX]; NX];
        let corr = if self.count > 1 { t / (t - 1.0) } else { 0.0 };
        for a in 0..NX {
            for b in a..NX {
                let v = (self.cross[a][b] / t - mu[a] * mu[b]) * corr;
                cov[a][b] = v;
                cov[b][a] = v;
            }
        }
        (mu, cov)
    }
}

/// Running moment sums for every `(receiver, instant, cell, user)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    receivers: Vec<ReceiverKind>,
    instants: Vec<usize>,
    cells: usize,
    users: usize,
    slots: Vec<Moments>,
}

impl Accumulator {
    fn new(opts: &SimOptions, cells: usize, users: usize) -> Self {
        let n = opts.receivers.len() * opts.instants.len() * cells * users;
        Self {
            receivers: opts.receivers.clone(),
            instants: opts.instants.clone(),
            cells,
            users,
            slots: vec![Moments::new(); n],
        }
    }

    fn slot(&self, r: usize, n: usize, j: usize, k: usize) -> usize {
        ((r * self.instants.len() + n) * self.cells + j) * self.users + k
    }

    /// Adds another accumulator's sums. Merging the same blocks in the same
    /// order always gives bit-identical totals.
    pub fn merge(&mut self, other: &Accumulator) -> Result<()> {
        if self.receivers != other.receivers
            || self.instants != other.instants
            || self.cells != other.cells
            || self.users != other.users
        {
            return Err(Error::DimensionMismatch(format!("accumulators were built for different runs")));
        }
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            a.merge(b);
        }
        Ok(())
    }

    /// Trials accumulated so far.
    pub fn trials(&self) -> u64 {
        self.slots.first().map_or(0, |m| m.count)
    }
}

/// Inner products of one combiner with everything the terms need.
struct Projection {
    /// `v^H A g_{li}[lambda]` per UE.
    a: Vec<Complex64>,
    /// `v^H A C_{g_{li}} A v` per UE.
    c: Vec<f64>,
    /// `sum |w|^2 G2`, `sum |w|^2 Cd` with `w = A v`.
    r1: f64,
    r2: f64,
    /// `sum |v|^2 T G2`, `sum |v|^2 T Cd`, `sum |v|^2 T`.
    t1: f64,
    t2: f64,
    t3: f64,
    /// `sum |v|^2 alpha^2`.
    ns: f64,
}

/// Collection of breakdowns from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub receivers: Vec<ReceiverKind>,
    pub instants: Vec<usize>,
    pub cells: usize,
    pub users: usize,
    pub trials: usize,
    pub breakdowns: Vec<SeBreakdown>,
}

/// UE-averaged view of one `(receiver, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedRow {
    pub receiver: ReceiverKind,
    pub n: usize,
    pub terms: Terms,
    pub sinr: f64,
    pub se: f64,
    /// Average of per-UE standard errors (an upper bound on the standard
    /// error of the average).
    pub se_stderr: f64,
    pub mui_stderr: f64,
}

impl SimulationOutput {
    pub fn get(&self, receiver: ReceiverKind, n: usize, cell: usize, user: usize) -> Option<&SeBreakdown> {
        let r = self.receivers.iter().position(|&x| x == receiver)?;
        let ni = self.instants.iter().position(|&x| x == n)?;
        self.breakdowns.get(((r * self.instants.len() + ni) * self.cells + cell) * self.users + user)
    }

    pub fn ue_average(&self, receiver: ReceiverKind, n: usize) -> Option<AveragedRow> {
        let mut acc = [0.0; 10];
        let (mut sinr, mut se, mut se_err, mut mui_err) = (0.0, 0.0, 0.0, 0.0);
        let count = (self.cells * self.users) as f64;
        for j in 0..self.cells {
            for k in 0..self.users {
                let b = self.get(receiver, n, j, k)?;
                for (a, t) in acc.iter_mut().zip(b.terms.to_array()) {
                    *a += t;
                }
                sinr += b.sinr;
                se += b.se;
                se_err += b.se_stderr;
                mui_err += b.stderr.mui;
            }
        }
        Some(AveragedRow {
            receiver,
            n,
            terms: Terms::from_array(acc.map(|x| x / count)),
            sinr: sinr / count,
            se: se / count,
            se_stderr: se_err / count,
            mui_stderr: mui_err / count,
        })
    }

    /// Per-UE average SE against `n`.
    pub fn se_curve(&self, receiver: ReceiverKind) -> Vec<(usize, f64)> {
        self.instants
            .iter()
            .filter_map(|&n| self.ue_average(receiver, n).map(|r| (n, r.se)))
            .collect()
    }
}

impl System {
    fn check_options(&self, opts: &SimOptions) -> Result<()> {
        if opts.trials < 2 {
            return Err(Error::InsufficientTrials { needed: 2, got: opts.trials });
        }
        if opts.receivers.is_empty() || opts.instants.is_empty() {
            return Err(Error::InvalidArgument(format!("need at least one receiver and one instant")));
        }
        if opts.block_size == 0 {
            return Err(Error::InvalidArgument(format!("block size must be positive")));
        }
        let (lo, hi) = (self.plan.lambda, self.config.tau_c);
        if let Some(n) = opts.instants.iter().find(|&&n| n < lo || n > hi) {
            return Err(Error::InvalidArgument(format!("instant {n} outside the data interval [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// Empty accumulator for `opts`.
    pub fn accumulator(&self, opts: &SimOptions) -> Accumulator {
        Accumulator::new(opts, self.layout.cells, self.layout.users)
    }

    /// Runs trials `[block * block_size, (block + 1) * block_size)`.
    pub fn simulate_block(&self, opts: &SimOptions, block: usize) -> Result<Accumulator> {
        self.check_options(opts)?;
        let mut acc = self.accumulator(opts);
        let start = block * opts.block_size;
        let end = (start + opts.block_size).min(opts.trials);
        for t in start..end {
            self.accumulate_trial(t as u64, opts, &mut acc)?;
        }
        Ok(acc)
    }

    /// Serial run: every block in order.
    pub fn simulate(&self, opts: &SimOptions) -> Result<SimulationOutput> {
        self.check_options(opts)?;
        let mut acc = self.accumulator(opts);
        for b in 0..opts.blocks() {
            acc.merge(&self.simulate_block(opts, b)?)?;
        }
        self.finalize(&acc)
    }

    fn project(&self, j: usize, v: &CVec, g_j: &[&CVec], g2: &[f64], cd: &[f64]) -> Projection {
        let lay = &self.layout;
        let st = self.bs_statics(j);
        let w = CVec::from_fn(v.len(), |m, _| v[m] * st.alpha[m]);
        let mut a = Vec::with_capacity(lay.ues());
        let mut c = Vec::with_capacity(lay.ues());
        for l in 0..lay.cells {
            for i in 0..lay.users {
                a.push(inner(&w, g_j[lay.ue(l, i)]));
                c.push(quad_form(&w, self.model.cov_g(l, i, j)));
            }
        }
        let (mut r1, mut r2, mut t1, mut t2, mut t3, mut ns) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for m in 0..v.len() {
            let v2 = v[m].norm_sqr();
            let w2 = w[m].norm_sqr();
            r1 += w2 * g2[m];
            r2 += w2 * cd[m];
            t1 += v2 * st.t[m] * g2[m];
            t2 += v2 * st.t[m] * cd[m];
            t3 += v2 * st.t[m];
            ns += w2;
        }
        Projection { a, c, r1, r2, t1, t2, t3, ns }
    }

    /// Per-trial statistic vector for UE `(j, k)` at aging `(theta, theta_bar)`.
    fn trial_terms(&self, p: &Projection, j: usize, k: usize, theta: f64, theta_bar: f64) -> [f64; NX] {
        let lay = &self.layout;
        let hw = &self.hardware;
        let pd = self.config.p_data_w;
        let au = hw.alpha_ue();
        let w_sig = au * au * pd;
        let (t2, tb2) = (theta * theta, theta_bar * theta_bar);
        let own = lay.ue(j, k);
        let b = p.a[own];
        let mut mui = 0.0;
        let mut pc = 0.0;
        let mut all = 0.0;
        let (mut mui_e, mut pc_e) = (0.0, 0.0);
        for l in 0..lay.cells {
            for i in 0..lay.users {
                let u = lay.ue(l, i);
                let e = t2 * p.a[u].norm_sqr() + tb2 * p.c[u];
                let slope = p.a[u].norm_sqr() - p.c[u];
                all += e;
                if i != k {
                    mui += e;
                    mui_e += slope;
                } else if l != j {
                    pc += e;
                    pc_e += slope;
                }
            }
        }
        let kb2 = hw.kappa_bs * hw.kappa_bs;
        let sigma2 = self.config.noise_power_w;
        [
            b.re,
            b.im,
            b.norm_sqr(),
            w_sig * tb2 * p.c[own],
            w_sig * mui,
            w_sig * pc,
            hw.rho_ue() * au * pd * all,
            hw.kappa_ue * hw.kappa_ue * au * pd * all,
            kb2 * (t2 * p.r1 + tb2 * p.r2),
            (1.0 + kb2) * (t2 * p.t1 + tb2 * p.t2) + sigma2 * p.t3,
            sigma2 * p.ns,
            w_sig * mui_e,
            w_sig * pc_e,
        ]
    }

    /// Full data-phase received signal `y^j[n]` at every BS for each instant
    /// in `instants`, drawn from the trial's data stream.
    pub fn sample_received(&self, ts: &TrialState, trial: u64, instants: &[usize]) -> Result<Vec<Vec<CVec>>> {
        let lay = &self.layout;
        let hw = &self.hardware;
        let (pd, sigma2) = (self.config.p_data_w, self.config.noise_power_w);
        let s = self.ue_output_power();
        let mut out = Vec::with_capacity(instants.len());
        for &n in instants {
            let mut rng = stream(self.seed(), &[purpose::DATA, trial, n as u64]);
            let lag = n - self.plan.lambda;
            let mut g_n: Vec<Vec<CVec>> = Vec::with_capacity(lay.ues());
            for l in 0..lay.cells {
                for k in 0..lay.users {
                    let q = self.model.sample_ue(l, k, &mut rng);
                    g_n.push(
                        (0..lay.cells)
                            .map(|j| evolve_aggregate(ts.channels.g(lay, l, k, j), &q.aggregate[j], &self.aging, lag))
                            .collect(),
                    );
                }
            }
            let tx: Vec<Complex64> = (0..lay.ues())
                .map(|_| {
                    let x = cn_scalar(&mut rng, 1.0);
                    hw.ue_transmit_chain(x, pd, &mut rng).signal
                })
                .collect();
            let mut per_bs = Vec::with_capacity(lay.cells);
            for j in 0..lay.cells {
                let mut clean = cn_vector_diag(&mut rng, &vec![sigma2; lay.antennas]);
                for (u, g) in g_n.iter().enumerate() {
                    clean.axpy(tx[u], &g[j], Complex64::new(1.0, 0.0));
                }
                let d = d_from_channels(g_n.iter().map(|g| (&g[j], s)), lay.antennas);
                per_bs.push(hw.bs_receive_chain(&clean, &d, sigma2, &mut rng)?.y);
            }
            out.push(per_bs);
        }
        Ok(out)
    }

    /// Adds trial `trial` to `acc`.
    pub fn accumulate_trial(&self, trial: u64, opts: &SimOptions, acc: &mut Accumulator) -> Result<()> {
        let lay = self.layout;
        let ts = self.draw_trial(trial)?;
        let aging: Vec<(f64, f64)> = opts.instants.iter().map(|&n| self.aging_at(n)).collect();
        let received = if opts.sample_received_power {
            Some(self.sample_received(&ts, trial, &opts.instants)?)
        } else {
            None
        };
        let s = self.ue_output_power();
        let au = self.hardware.alpha_ue();
        let w_sig = au * au * self.config.p_data_w;

        for j in 0..lay.cells {
            let st = self.bs_statics(j);
            let hats: Vec<&CVec> = (0..lay.ues()).map(|u| &ts.estimates[u * lay.cells + j]).collect();
            let g_j: Vec<&CVec> = (0..lay.ues()).map(|u| &ts.channels.ues[u].aggregate[j]).collect();
            let g2 = d_from_channels(g_j.iter().map(|g| (*g, s)), lay.antennas);
            let cd: Vec<f64> = (0..lay.antennas).map(|m| st.s_cg[(m, m)].re).collect();

            let record = |acc: &mut Accumulator, ri: usize, ni: usize, k: usize, v: &CVec, p: &Projection| {
                let (t, tb) = aging[ni];
                let x = self.trial_terms(p, j, k, t, tb);
                let slot = acc.slot(ri, ni, j, k);
                let m = &mut acc.slots[slot];
                m.add(&x);
                if let Some(rx) = &received {
                    let sampled = inner(v, &rx[ni][j]).norm_sqr();
                    let predicted = w_sig * t * t * x[2] + x[3..11].iter().sum::<f64>();
                    let d = sampled - predicted;
                    m.power[0] += sampled;
                    m.power[1] += d;
                    m.power[2] += d * d;
                    m.power[3] += predicted;
                }
            };

            for (ri, &kind) in opts.receivers.iter().enumerate() {
                match kind {
                    ReceiverKind::Mrc | ReceiverKind::DuMmse => {
                        let factor = if kind == ReceiverKind::DuMmse {
                            Some(HpdFactor::new(&du_mmse_matrix(st, &hats), "DU-MMSE matrix")?)
                        } else {
                            None
                        };
                        for k in 0..lay.users {
                            let target = hats[lay.ue(j, k)];
                            let v = match &factor {
                                Some(f) => f.solve(target),
                                None => mrc(target),
                            };
                            let p = self.project(j, &v, &g_j, &g2, &cd);
                            for ni in 0..opts.instants.len() {
                                record(acc, ri, ni, k, &v, &p);
                            }
                        }
                    }
                    ReceiverKind::DaaMmse => {
                        for (ni, &(t, tb)) in aging.iter().enumerate() {
                            let full = daa_full_matrix(st, &hats, t, tb);
                            let f = HpdFactor::new(&full, "DAA-MMSE matrix")?;
                            for k in 0..lay.users {
                                let c = daa_target(st, hats[lay.ue(j, k)], t);
                                let v = daa_from_full(&f, &c);
                                let p = self.project(j, &v, &g_j, &g2, &cd);
                                record(acc, ri, ni, k, &v, &p);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Turns moment sums into breakdowns.
    pub fn finalize(&self, acc: &Accumulator) -> Result<SimulationOutput> {
        let trials = acc.trials();
        if trials < 2 {
            return Err(Error::InsufficientTrials { needed: 2, got: trials as usize });
        }
        let au = self.hardware.alpha_ue();
        let w_sig = au * au * self.config.p_data_w;
        let t = trials as f64;
        let mut breakdowns = Vec::with_capacity(acc.slots.len());
        for (ri, &receiver) in acc.receivers.iter().enumerate() {
            for (ni, &n) in acc.instants.iter().enumerate() {
                let (theta, _) = self.aging_at(n);
                let c = w_sig * theta * theta;
                for j in 0..acc.cells {
                    for k in 0..acc.users {
                        let m = &acc.slots[acc.slot(ri, ni, j, k)];
                        breakdowns.push(breakdown(m, c, t, receiver, n, j, k));
                    }
                }
            }
        }
        Ok(SimulationOutput {
            receivers: acc.receivers.clone(),
            instants: acc.instants.clone(),
            cells: acc.cells,
            users: acc.users,
            trials: trials as usize,
            breakdowns,
        })
    }
}

fn quad(g: &[f64; NX], cov: &[[f64; NX]; NX]) -> f64 {
    let mut s = 0.0;
    for a in 0..NX {
        if g[a] == 0.0 {
            continue;
        }
        for b in 0..NX {
            s += g[a] * cov[a][b] * g[b];
        }
    }
    s.max(0.0)
}

fn breakdown(m: &Moments, c: f64, t: f64, receiver: ReceiverKind, n: usize, j: usize, k: usize) -> SeBreakdown {
    let (mu, cov) = m.stats();
    let mean2 = mu[0] * mu[0] + mu[1] * mu[1];
    let ds = c * mean2;
    let bu_raw = c * (mu[2] - mean2);
    let bu_clipped = bu_raw < 0.0;
    let bu = bu_raw.max(0.0);
    let terms = Terms {
        ds,
        bu,
        ca: mu[3],
        mui: mu[4],
        pc: mu[5],
        dac: mu[6],
        trf: mu[7],
        rrf: mu[8],
        adc: mu[9],
        ns: mu[10],
    };
    let lam = terms.interference();
    let sinr = if lam > 0.0 { ds / lam } else { 0.0 };
    let se = libm::log2(1.0 + sinr);

    let mut g = [0.0; NX];
    g[0] = 2.0 * c * mu[0];
    g[1] = 2.0 * c * mu[1];
    let ds_err = libm::sqrt(quad(&g, &cov) / t);
    let mut gb = [0.0; NX];
    gb[0] = -2.0 * c * mu[0];
    gb[1] = -2.0 * c * mu[1];
    gb[2] = c;
    let bu_err = libm::sqrt(quad(&gb, &cov) / t);
    let term_err = |i: usize| libm::sqrt(cov[i][i].max(0.0) / t);
    let stderr = Terms {
        ds: ds_err,
        bu: bu_err,
        ca: term_err(3),
        mui: term_err(4),
        pc: term_err(5),
        dac: term_err(6),
        trf: term_err(7),
        rrf: term_err(8),
        adc: term_err(9),
        ns: term_err(10),
    };

    let se_stderr = if lam > 0.0 {
        let l2 = lam * lam;
        let mut gs = [0.0; NX];
        gs[0] = 2.0 * c * mu[0] * (lam + ds) / l2;
        gs[1] = 2.0 * c * mu[1] * (lam + ds) / l2;
        gs[2] = -c * ds / l2;
        for x in &mut gs[3..11] {
            *x = -ds / l2;
        }
        libm::sqrt(quad(&gs, &cov) / t) / ((1.0 + sinr) * core::f64::consts::LN_2)
    } else {
        0.0
    };

    let power = if m.power[0] != 0.0 || m.power[3] != 0.0 {
        let diff = m.power[1] / t;
        let var = (m.power[2] / t - diff * diff) * t / (t - 1.0);
        Some(PowerCheck {
            sampled: m.power[0] / t,
            predicted: m.power[3] / t,
            diff,
            diff_stderr: libm::sqrt(var.max(0.0) / t),
        })
    } else {
        None
    };

    SeBreakdown {
        receiver,
        n,
        cell: j,
        user: k,
        terms,
        stderr,
        sinr,
        se,
        se_stderr,
        trials: t as usize,
        bu_clipped,
        power,
        mui_slope: mu[11],
        mui_slope_stderr: term_err(11),
        pc_slope: mu[12],
        pc_slope_stderr: term_err(12),
    }
}

/// Per-cell sum SE `(1 / (L tau_c)) sum_{n=lambda}^{tau_c} sum_{j,k} SE`,
/// given the network-summed SE on a grid of instants; values between grid
/// points are interpolated linearly and held constant beyond the ends.
pub fn sum_se(curve: &[(usize, f64)], lambda: usize, tau_c: usize, cells: usize) -> f64 {
    if curve.is_empty() || cells == 0 || tau_c == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for n in lambda..=tau_c {
        total += interpolate(curve, n as f64);
    }
    total / (cells * tau_c) as f64
}

fn interpolate(curve: &[(usize, f64)], n: f64) -> f64 {
    let first = curve[0];
    if n <= first.0 as f64 {
        return first.1;
    }
    for w in curve.windows(2) {
        let (a, b) = (w[0], w[1]);
        if n <= b.0 as f64 {
            let f = (n - a.0 as f64) / (b.0 - a.0) as f64;
            return a.1 + f * (b.1 - a.1);
        }
    }
    curve[curve.len() - 1].1
}

/// Instant at which the SE curve first falls below `qos`, linearly
/// interpolated; `tau_c` if it never does and `None` if it starts below.
pub fn qos_crossing(curve: &[(f64, f64)], qos: f64, tau_c: f64) -> Option<f64> {
    let first = curve.first()?;
    if first.1 < qos {
        return None;
    }
    for w in curve.windows(2) {
        let ((n0, s0), (n1, s1)) = (w[0], w[1]);
        if s1 < qos {
            return Some(n0 + (s0 - qos) / (s0 - s1) * (n1 - n0));
        }
    }
    Some(tau_c)
}

/// Least-squares fit `value = slope * theta^2 + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Upper bound on the slope's standard error (perfectly correlated
    /// per-point errors).
    pub slope_stderr: f64,
    pub max_abs_residual: f64,
}

pub fn fit_aging_law(theta_sq: &[f64], values: &[f64], stderr: &[f64]) -> Result<AgingFit> {
    let n = theta_sq.len();
    if n < 3 || values.len() != n || stderr.len() != n {
        return Err(Error::InvalidArgument(format!("need at least 3 instants with matching lengths")));
    }
    let nf = n as f64;
    let xm = theta_sq.iter().sum::<f64>() / nf;
    let ym = values.iter().sum::<f64>() / nf;
    let sxx: f64 = theta_sq.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = theta_sq.iter().zip(values).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let syy: f64 = values.iter().map(|y| (y - ym) * (y - ym)).sum();
    let (slope, slope_stderr) = if sxx > 0.0 {
        let err = theta_sq.iter().zip(stderr).map(|(x, s)| ((x - xm) / sxx).abs() * s).sum();
        (sxy / sxx, err)
    } else {
        (0.0, 0.0)
    };
    let intercept = ym - slope * xm;
    let mut sse = 0.0;
    let mut worst = 0.0f64;
    for (x, y) in theta_sq.iter().zip(values) {
        let r = y - (slope * x + intercept);
        sse += r * r;
        worst = worst.max(r.abs());
    }
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(AgingFit { slope, intercept, r_squared, slope_stderr, max_abs_residual: worst })
}

/// Aging-law fits of one UE's DS, BU, PC and MUI over the simulated instants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgingReport {
    pub ds: AgingFit,
    pub bu: AgingFit,
    pub pc: AgingFit,
    pub mui: AgingFit,
    /// Largest `|DS(n)/DS(lambda) - theta^2| / stderr` over the grid.
    pub ds_ratio_worst_sigma: f64,
}

pub fn aging_scaling_check(
    out: &SimulationOutput,
    receiver: ReceiverKind,
    cell: usize,
    user: usize,
    aging: &AgingModel,
    lambda: usize,
) -> Result<AgingReport> {
    if out.instants.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 instants, got {}", out.instants.len())));
    }
    let rows: Vec<&SeBreakdown> = out
        .instants
        .iter()
        .map(|&n| out.get(receiver, n, cell, user))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidArgument(format!("receiver {receiver} or UE ({cell}, {user}) not simulated")))?;
    let x: Vec<f64> = rows.iter().map(|r| libm::pow(aging.theta(r.n - lambda), 2.0)).collect();
    let fit = |f: &dyn Fn(&SeBreakdown) -> (f64, f64)| {
        let (v, s): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| f(r)).unzip();
        fit_aging_law(&x, &v, &s)
    };
    let ds = fit(&|r| (r.terms.ds, r.stderr.ds))?;
    let bu = fit(&|r| (r.terms.bu, r.stderr.bu))?;
    let pc = fit(&|r| (r.terms.pc, r.stderr.pc))?;
    let mui = fit(&|r| (r.terms.mui, r.stderr.mui))?;
    let base = rows.iter().find(|r| r.n == lambda).copied().unwrap_or(rows[0]);
    let x0 = libm::pow(aging.theta(base.n - lambda), 2.0);
    let mut worst = 0.0f64;
    for (r, &xi) in rows.iter().zip(&x) {
        if base.terms.ds <= 0.0 || x0 <= 0.0 {
            break;
        }
        let ratio = r.terms.ds / base.terms.ds;
        let expect = xi / x0;
        let rel_err = ratio * libm::hypot(r.stderr.ds / r.terms.ds.max(f64::MIN_POSITIVE), base.stderr.ds / base.terms.ds);
        let dev = (ratio - expect).abs();
        if dev > 0.0 {
            worst = worst.max(if rel_err > 0.0 { dev / rel_err } else { f64::INFINITY });
        }
    }
    Ok(AgingReport { ds, bu, pc, mui, ds_ratio_worst_sigma: worst })
}

/// Unused-parameter guard for `CMat` in signatures shared with tests.
#[allow(dead_code)]
fn _assert_types(_: &CMat) {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_ends() {
        assert_eq!(instant_grid(3, 60, 10), vec![3, 13, 23, 33, 43, 53, 60]);
        assert_eq!(instant_grid(3, 3, 10), vec![3]);
        assert_eq!(instant_grid(6, 16, 5), vec![6, 11, 16]);
    }

    #[test]
    fn sum_se_examples() {
        assert_eq!(sum_se(&[(3, 0.0), (60, 0.0)], 3, 60, 1), 0.0);
        let (tau_c, tau_p) = (60usize, 2usize);
        let v = sum_se(&[(tau_p + 1, 1.0), (tau_c, 1.0)], tau_p + 1, tau_c, 1);
        assert!((v - (tau_c - tau_p) as f64 / tau_c as f64).abs() < 1e-15);
        let longer = sum_se(&[(2 * tau_p + 1, 1.0), (tau_c, 1.0)], 2 * tau_p + 1, tau_c, 1);
        assert!(longer < v);
    }

    #[test]
    fn qos_examples() {
        let lambda = 6.0;
        let curve: Vec<(f64, f64)> = (0..20).map(|i| {
            let n = lambda + 10.0 * i as f64;
            (n, 3.0 - 0.01 * (n - lambda))
        }).collect();
        let c = qos_crossing(&curve, 2.5, 500.0).unwrap();
        assert!((c - (lambda + 50.0)).abs() < 1e-9);
        assert_eq!(qos_crossing(&[(6.0, 3.0), (100.0, 3.0)], 2.5, 500.0), Some(500.0));
        assert_eq!(qos_crossing(&[(6.0, 2.0), (100.0, 1.0)], 2.5, 500.0), None);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 0.8, 0.5, 0.2];
        let y: Vec<f64> = x.iter().map(|t| 3.0 * t + 0.5).collect();
        let f = fit_aging_law(&x, &y, &[0.0; 4]).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.intercept - 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let flat = fit_aging_law(&[1.0; 3], &[2.0; 3], &[0.1; 3]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert!(fit_aging_law(&[1.0, 2.0], &[1.0, 2.0], &[0.0, 0.0]).is_err());
    }
}
