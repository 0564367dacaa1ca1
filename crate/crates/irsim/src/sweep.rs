//! Cartesian sweeps over named parameters.

use irsim_core::random::derive_seed;
use irsim_core::se::{instant_grid, DEFAULT_BLOCK_SIZE};
use irsim_core::{HardwareProfile, ReceiverKind, SimOptions, SimulationOutput, System, SystemConfig};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use toml::Value;

use crate::output::ResultRow;
use crate::params;
use crate::{ConfigError, HardwareKnobs, RunError};

/// One swept parameter and its values, in the order they are run.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<Value>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: impl IntoIterator<Item = Value>) -> Self {
        Self { name: name.into(), values: values.into_iter().collect() }
    }
}

/// Data instants to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum Instants {
    /// `lambda, lambda + s, ...` and always `tau_c`.
    Stride(usize),
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub hardware: HardwareKnobs,
    pub axes: Vec<Axis>,
    pub receivers: Vec<ReceiverKind>,
    pub trials: usize,
    pub seed: u64,
    pub instants: Instants,
    /// Trials per merge block. Part of the numerical definition of a run.
    pub block_size: usize,
}

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_STRIDE: usize = 10;
pub const DEFAULT_SEED: u64 = 1;

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            base: SystemConfig::default(),
            hardware: HardwareKnobs::default(),
            axes: Vec::new(),
            receivers: ReceiverKind::ALL.to_vec(),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            instants: Instants::Stride(DEFAULT_STRIDE),
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }
}

/// One fully resolved point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub values: Vec<(String, Value)>,
    pub config: SystemConfig,
    pub hardware: HardwareProfile,
    pub seed: u64,
    pub instants: Vec<usize>,
}

/// Rows plus the full per-UE output of every point.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub axes: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub points: Vec<(SweepPoint, SimulationOutput)>,
}

impl SweepSpec {
    /// Checks names, values and every resolved point. Nothing is simulated.
    pub fn points(&self) -> Result<Vec<SweepPoint>, ConfigError> {
        if self.trials < 2 {
            return Err(ConfigError::Invalid(format!("trials must be at least 2, got {}", self.trials)));
        }
        if self.receivers.is_empty() {
            return Err(ConfigError::Invalid("no receivers selected".into()));
        }
        if self.block_size == 0 {
            return Err(ConfigError::Invalid("block_size must be positive".into()));
        }
        if let Instants::Stride(0) = self.instants {
            return Err(ConfigError::Invalid("stride must be positive".into()));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if params::lookup(&a.name).is_none() {
                return Err(ConfigError::UnknownKey(a.name.clone()));
            }
            if a.values.is_empty() {
                return Err(ConfigError::Invalid(format!("sweep axis `{}` has no values", a.name)));
            }
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(ConfigError::Invalid(format!("sweep axis `{}` appears twice", a.name)));
            }
        }

        let total: usize = self.axes.iter().map(|a| a.values.len()).product();
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            // first axis varies slowest
            let mut rem = idx;
            let mut pick = vec![0; self.axes.len()];
            for (i, a) in self.axes.iter().enumerate().rev() {
                pick[i] = rem % a.values.len();
                rem /= a.values.len();
            }
            let mut cfg = self.base.clone();
            let mut hw = self.hardware;
            let mut values = Vec::with_capacity(self.axes.len());
            for (a, &i) in self.axes.iter().zip(&pick) {
                params::set(&a.name, &a.values[i], &mut cfg, &mut hw)?;
                values.push((a.name.clone(), a.values[i].clone()));
            }
            cfg.validate()?;
            let hardware = hw.profile()?;
            let lambda = cfg.lambda();
            let instants = match &self.instants {
                Instants::Stride(s) => instant_grid(lambda, cfg.tau_c, *s),
                Instants::Explicit(v) => {
                    if let Some(n) = v.iter().find(|&&n| n < lambda || n > cfg.tau_c) {
                        return Err(ConfigError::Invalid(format!(
                            "instant {n} outside the data interval [{lambda}, {}]",
                            cfg.tau_c
                        )));
                    }
                    v.clone()
                }
            };
            if instants.is_empty() {
                return Err(ConfigError::Invalid("no instants to evaluate".into()));
            }
            let seed = point_seed(self.seed, &values);
            out.push(SweepPoint { values, config: cfg, hardware, seed, instants });
        }
        Ok(out)
    }

    /// Canonical text of everything that influences the numbers.
    pub fn canonical(&self) -> String {
        format!(
            "{:?}\n{:?}\n{:?}\n{:?}\ntrials={}\nseed={}\n{:?}\nblock={}\n",
            self.base, self.hardware, self.axes, self.receivers, self.trials, self.seed, self.instants, self.block_size
        )
    }

    /// SHA-256 of [`SweepSpec::canonical`].
    pub fn digest(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of a point: depends on the master seed and the set of axis values,
/// not on axis order. All receivers and instants of a point share it.
pub fn point_seed(master: u64, values: &[(String, Value)]) -> u64 {
    if values.is_empty() {
        return derive_seed(master, &[]);
    }
    let mut pairs: Vec<String> = values.iter().map(|(k, v)| format!("{k}={}", params::display(v))).collect();
    pairs.sort();
    let h = Sha256::digest(pairs.join(";").as_bytes());
    let tag = u64::from_le_bytes(h[..8].try_into().expect("digest has 32 bytes"));
    derive_seed(master, &[tag])
}

fn run_point(spec: &SweepSpec, point: &SweepPoint) -> Result<SimulationOutput, RunError> {
    let sys = System::build(&point.config, &point.hardware, point.seed)?;
    let mut opts = SimOptions::new(spec.trials, &spec.receivers, point.instants.clone());
    opts.block_size = spec.block_size;
    let blocks: Vec<_> = (0..opts.blocks())
        .into_par_iter()
        .map(|b| sys.simulate_block(&opts, b))
        .collect::<Result<_, _>>()?;
    let mut acc = sys.accumulator(&opts);
    for b in &blocks {
        acc.merge(b)?;
    }
    Ok(sys.finalize(&acc)?)
}

fn rows_for(point: &SweepPoint, out: &SimulationOutput) -> Result<Vec<ResultRow>, RunError> {
    let sys_mui = if out.receivers.contains(&ReceiverKind::Mrc) {
        let sys = System::build(&point.config, &point.hardware, point.seed)?;
        let mut total = 0.0;
        for j in 0..out.cells {
            for k in 0..out.users {
                total += sys.mui_closed_form(ReceiverKind::Mrc, j, k)?;
            }
        }
        Some(total / (out.cells * out.users) as f64)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &r in &out.receivers {
        for &n in &out.instants {
            let avg = out.ue_average(r, n).expect("every slot is present");
            rows.push(ResultRow {
                axes: point.values.iter().map(|(_, v)| params::display(v)).collect(),
                receiver: r,
                n,
                terms: avg.terms,
                sinr: avg.sinr,
                se: avg.se,
                se_stderr: avg.se_stderr,
                mui_closed_form: if r == ReceiverKind::Mrc { sys_mui } else { None },
                mui_stderr: avg.mui_stderr,
                seed: point.seed,
            });
        }
    }
    Ok(rows)
}

/// Runs every point on the current rayon pool. Output is independent of the
/// pool size.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput, RunError> {
    let points = spec.points()?;
    let outputs: Vec<SimulationOutput> =
        points.par_iter().map(|p| run_point(spec, p)).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (p, o) in points.iter().zip(&outputs) {
        rows.extend(rows_for(p, o)?);
    }
    Ok(SweepOutput {
        axes: spec.axes.iter().map(|a| a.name.clone()).collect(),
        rows,
        points: points.into_iter().zip(outputs).collect(),
    })
}

/// [`run_sweep`] on a dedicated pool of `threads` workers (`None`: rayon's
/// default).
pub fn run_sweep_with_threads(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepOutput, RunError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    let pool = b.build().map_err(|e| RunError::Config(ConfigError::Invalid(format!("thread pool: {e}"))))?;
    pool.install(|| run_sweep(spec))
}
