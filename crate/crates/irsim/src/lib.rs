//! Experiment front end for [`irsim_core`]: TOML configuration files,
//! Cartesian parameter sweeps run in parallel with rayon, CSV output with a
//! JSON run manifest, the shipped presets and the `irsim` command line.
//!
//! Results never depend on the thread count: every sweep point is split into
//! fixed trial blocks whose partial sums are merged in block order.

pub mod cli;
pub mod file;
pub mod manifest;
pub mod output;
pub mod params;
pub mod presets;
pub mod sweep;
pub mod validate;

use irsim_core::{HardwareProfile, Resolution};

pub use file::{parse_config, render_config};
pub use output::{read_csv, write_csv, ResultRow};
pub use sweep::{run_sweep, Axis, Instants, SweepOutput, SweepSpec};

/// Problems with a configuration file or sweep specification.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{key}` must be {expected}, found {found}")]
    Type { key: String, expected: &'static str, found: &'static str },
    #[error("{0}")]
    Invalid(String),
    #[error("TOML syntax: {0}")]
    Syntax(String),
    #[error(transparent)]
    Core(#[from] irsim_core::Error),
}

/// Errors from running a sweep or writing its results.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Numerical(irsim_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("CSV: {0}")]
    Csv(String),
}

impl From<irsim_core::Error> for RunError {
    fn from(e: irsim_core::Error) -> Self {
        use irsim_core::Error::*;
        match e {
            NotPsd { .. } | Singular { .. } => RunError::Numerical(e),
            other => RunError::Config(ConfigError::Core(other)),
        }
    }
}

impl RunError {
    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io { .. } | RunError::Csv(_) => 1,
        }
    }
}

/// Impairment settings as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareKnobs {
    pub kappa_ue: f64,
    pub kappa_bs: f64,
    pub bits_ue: Resolution,
    pub bits_bs: Resolution,
}

impl Default for HardwareKnobs {
    fn default() -> Self {
        let r = HardwareProfile::reference();
        Self { kappa_ue: r.kappa_ue, kappa_bs: r.kappa_bs, bits_ue: r.bits_ue, bits_bs: r.bits_bs }
    }
}

impl HardwareKnobs {
    pub fn profile(&self) -> Result<HardwareProfile, ConfigError> {
        Ok(HardwareProfile::new(self.kappa_ue, self.kappa_bs, self.bits_ue, self.bits_bs)?)
    }
}
