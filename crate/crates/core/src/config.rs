//! Experiment configuration.

use alloc::format;

use crate::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, (dbm - 30.0) / 10.0)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * libm::log10(w) + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Log-distance law `beta_dB = intercept_db - 10 * exponent * log10(d / 1 m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub intercept_db: f64,
    pub exponent: f64,
}

impl PathLoss {
    /// UE-side links: `-35.3 - 37.6 log10(d)`.
    pub const UE_LINK: PathLoss = PathLoss { intercept_db: -35.3, exponent: 3.76 };

    /// Elevated line-of-sight IRS-BS link at 2 GHz:
    /// `-32.4 - 20 log10(2) - 21 log10(d)`.
    pub const IRS_BS_LOS: PathLoss = PathLoss { intercept_db: -38.42, exponent: 2.1 };

    pub fn gain_db(&self, distance_m: f64) -> f64 {
        self.intercept_db - 10.0 * self.exponent * libm::log10(distance_m)
    }
}

/// How the IRS phase shifts are chosen for an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Uniform in `[0, 2pi)`, drawn once from the experiment seed.
    Random,
    /// All phases zero (identity reflection).
    Zero,
    /// Each IRS co-phases the cascaded LoS path of the strongest UE in its cell.
    LosAlign,
}

impl PhaseMode {
    pub fn name(self) -> &'static str {
        match self {
            PhaseMode::Random => "random",
            PhaseMode::Zero => "zero",
            PhaseMode::LosAlign => "los-align",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(PhaseMode::Random),
            "zero" => Some(PhaseMode::Zero),
            "los-align" => Some(PhaseMode::LosAlign),
            _ => None,
        }
    }
}

/// Network dimensions, frame structure, powers and geometry knobs for one
/// experiment. All powers are linear (watts).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of cells `L`.
    pub cells: usize,
    /// UEs per cell `K`.
    pub users_per_cell: usize,
    /// BS UPA `(N_H, N_V)`.
    pub bs_dims: (usize, usize),
    /// IRS `(M_H, M_V)`; a zero dimension disables the IRS.
    pub irs_dims: (usize, usize),
    /// Resource-block length in samples.
    pub tau_c: usize,
    /// Pilot length in samples.
    pub tau_p: usize,
    pub p_data_w: f64,
    pub p_pilot_w: f64,
    pub noise_power_w: f64,
    pub carrier_hz: f64,
    pub sample_period_s: f64,
    pub ue_speed_mps: f64,
    /// Side of the wrapped square area.
    pub area_km: f64,
    /// Extra attenuation applied to UE-BS direct links only.
    pub direct_extra_loss_db: f64,

    pub irs_distance_km: f64,
    pub irs_azimuth_deg: f64,
    pub ue_min_distance_km: f64,
    pub ue_max_distance_km: f64,
    pub sector_width_deg: f64,
    pub bs_height_m: f64,
    pub irs_height_m: f64,
    pub ue_height_m: f64,
    /// Element spacings in wavelengths.
    pub bs_spacing: f64,
    pub irs_spacing: f64,
    pub asd_az_deg: f64,
    pub asd_el_deg: f64,
    pub ue_path_loss: PathLoss,
    pub irs_bs_path_loss: PathLoss,
    /// LoS probability cutoff: links at or beyond this distance are pure NLoS.
    pub rician_cutoff_m: f64,
    /// Log-normal shadowing standard deviation; `None` disables shadowing.
    pub shadowing_std_db: Option<f64>,
    /// Number of paths in each IRS-BS channel; `None` means `min(N, M)`.
    pub irs_rank: Option<usize>,
    pub phase_mode: PhaseMode,
}

impl Default for SystemConfig {
    /// The four-cell reference network.
    fn default() -> Self {
        Self {
            cells: 4,
            users_per_cell: 5,
            bs_dims: (8, 8),
            irs_dims: (10, 10),
            tau_c: 500,
            tau_p: 5,
            p_data_w: dbm_to_watts(20.0),
            p_pilot_w: dbm_to_watts(20.0),
            noise_power_w: dbm_to_watts(DEFAULT_NOISE_DBM),
            carrier_hz: 2.0e9,
            sample_period_s: 5.0e-6,
            ue_speed_mps: 72.0 / 3.6,
            area_km: 0.5,
            direct_extra_loss_db: 70.0,
            irs_distance_km: 0.125,
            irs_azimuth_deg: 45.0,
            ue_min_distance_km: 0.025,
            ue_max_distance_km: 0.125,
            sector_width_deg: 90.0,
            bs_height_m: 10.0,
            irs_height_m: 10.0,
            ue_height_m: 1.5,
            bs_spacing: 0.5,
            irs_spacing: 0.25,
            asd_az_deg: 15.0,
            asd_el_deg: 15.0,
            ue_path_loss: PathLoss::UE_LINK,
            irs_bs_path_loss: PathLoss::IRS_BS_LOS,
            rician_cutoff_m: 300.0,
            shadowing_std_db: None,
            irs_rank: None,
            phase_mode: PhaseMode::Random,
        }
    }
}

/// Default receiver noise power, set for a median per-antenna SNR near
/// 10 dB on the default layout.
pub const DEFAULT_NOISE_DBM: f64 = -155.0;

/// Noise power of the small instance (same median SNR target).
pub const DESK_NOISE_DBM: f64 = -150.0;

impl SystemConfig {
    /// Small two-cell instance used by the test and acceptance suites:
    /// `L = 2, K = 2, N = 4x2, M = 4x4, tau_p = 2, tau_c = 60`.
    pub fn desk() -> Self {
        Self {
            cells: 2,
            users_per_cell: 2,
            bs_dims: (4, 2),
            irs_dims: (4, 4),
            tau_c: 60,
            tau_p: 2,
            sample_period_s: 20.0e-6,
            noise_power_w: dbm_to_watts(DESK_NOISE_DBM),
            ..Self::default()
        }
    }

    pub fn antennas(&self) -> usize {
        self.bs_dims.0 * self.bs_dims.1
    }

    pub fn elements(&self) -> usize {
        self.irs_dims.0 * self.irs_dims.1
    }

    /// Estimation instant `lambda = tau_p + 1`.
    pub fn lambda(&self) -> usize {
        self.tau_p + 1
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// `f_d = v f_c / c`.
    pub fn doppler_hz(&self) -> f64 {
        self.ue_speed_mps * self.carrier_hz / SPEED_OF_LIGHT
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.cells == 0 {
            return bad(format!("cell count must be at least 1"));
        }
        if self.users_per_cell == 0 {
            return bad(format!("users per cell must be at least 1"));
        }
        if self.antennas() == 0 {
            return bad(format!("BS array {:?} has no antennas", self.bs_dims));
        }
        if self.tau_p == 0 || self.tau_p >= self.tau_c {
            return bad(format!("need 1 <= tau_p < tau_c, got tau_p={} tau_c={}", self.tau_p, self.tau_c));
        }
        if self.users_per_cell > self.tau_p {
            return bad(format!(
                "{} users per cell cannot have distinct pilot instants in tau_p={}",
                self.users_per_cell, self.tau_p
            ));
        }
        for (name, v) in [
            ("p_data", self.p_data_w),
            ("p_pilot", self.p_pilot_w),
            ("noise_power", self.noise_power_w),
            ("carrier", self.carrier_hz),
            ("sample_period", self.sample_period_s),
            ("area", self.area_km),
            ("bs_spacing", self.bs_spacing),
            ("irs_spacing", self.irs_spacing),
            ("asd_az", self.asd_az_deg),
            ("asd_el", self.asd_el_deg),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be strictly positive, got {v}"));
            }
        }
        if !(self.ue_speed_mps >= 0.0 && self.ue_speed_mps.is_finite()) {
            return bad(format!("UE speed must be non-negative, got {}", self.ue_speed_mps));
        }
        if !(self.ue_min_distance_km > 0.0 && self.ue_min_distance_km <= self.ue_max_distance_km) {
            return bad(format!(
                "UE distance range [{}, {}] km is invalid",
                self.ue_min_distance_km, self.ue_max_distance_km
            ));
        }
        if let Some(s) = self.shadowing_std_db {
            if !(s >= 0.0) {
                return bad(format!("shadowing std must be non-negative, got {s}"));
            }
        }
        if self.irs_rank == Some(0) {
            return bad(format!("IRS-BS rank must be at least 1"));
        }
        Ok(())
    }
}
