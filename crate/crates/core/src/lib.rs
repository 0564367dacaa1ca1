//! Simulation core for the uplink of an IRS-aided multi-cell massive MIMO
//! network with low-resolution converters, RF impairments and channel aging.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every piece of the
//! physical model: geometry and large-scale fading ([`scenario`]), correlated
//! Rician channels with random LoS phases and Jakes aging ([`channel`]), the
//! Bussgang/EVM hardware chains ([`hardware`]), the phase-unaware LMMSE
//! estimator ([`estimation`]), the three combiners ([`receivers`]) and the
//! use-and-then-forget spectral-efficiency evaluation ([`se`]).
//!
//! Parallel execution, configuration files and CSV output live in the `irsim`
//! companion crate.
#![no_std]

extern crate alloc;

pub mod channel;
pub mod config;
mod error;
pub mod estimation;
pub mod hardware;
pub mod linalg;
pub mod random;
pub mod receivers;
pub mod scenario;
pub mod se;
pub mod special;
pub mod system;

pub use config::{PathLoss, PhaseMode, SystemConfig};
pub use error::{Error, Result};
pub use hardware::{HardwareProfile, Resolution};
pub use receivers::ReceiverKind;
pub use se::{SeBreakdown, SimOptions, SimulationOutput, Terms};
pub use system::{Layout, System};
