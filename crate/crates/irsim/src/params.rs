//! Named experiment parameters.
//!
//! Every configuration-file key and every sweep axis goes through this
//! table, so the two can never disagree about names, units or validation.
//! Values are written in user units (dBm, km/h, GHz, microseconds) and
//! converted to SI once, here.

use irsim_core::config::{dbm_to_watts, watts_to_dbm};
use irsim_core::{PhaseMode, Resolution, SystemConfig};
use toml::Value;

use crate::{ConfigError, HardwareKnobs};

/// Which `print-config` table a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Network,
    Hardware,
    Geometry,
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub name: &'static str,
    pub group: Group,
    pub doc: &'static str,
    /// Default chosen without a source value to follow.
    pub assumed: bool,
}

const fn p(name: &'static str, group: Group, doc: &'static str, assumed: bool) -> Param {
    Param { name, group, doc, assumed }
}

use Group::*;

pub const PARAMS: &[Param] = &[
    p("cells", Network, "number of cells L (1 or a grid-shaped count)", false),
    p("users_per_cell", Network, "UEs per cell K", false),
    p("bs_h", Network, "BS array columns N_H", false),
    p("bs_v", Network, "BS array rows N_V", false),
    p("irs_h", Network, "IRS columns M_H (0 disables the IRS)", false),
    p("irs_v", Network, "IRS rows M_V", false),
    p("irs_side", Network, "square IRS: sets irs_h = irs_v", false),
    p("tau_c", Network, "resource-block length in samples", true),
    p("tau_p", Network, "pilot length in samples", true),
    p("p_data_dbm", Network, "data transmit power", false),
    p("p_pilot_dbm", Network, "pilot transmit power", false),
    p("noise_dbm", Network, "receiver noise power", true),
    p("carrier_ghz", Network, "carrier frequency", true),
    p("sample_period_us", Network, "sample period T_s", true),
    p("velocity_kmh", Network, "UE speed", false),
    p("area_km", Network, "side of the wrapped square area", false),
    p("direct_extra_loss_db", Network, "extra attenuation on UE-BS direct links", false),
    p("phase_mode", Network, "IRS phases: random | zero | los-align", true),
    p("shadowing_std_db", Network, "log-normal shadowing std, or \"off\"", false),
    p("irs_rank", Network, "paths in each IRS-BS channel, or \"full\"", true),
    p("kappa_ue", Hardware, "UE transmit EVM", false),
    p("kappa_bs", Hardware, "BS receive EVM", false),
    p("bits", Hardware, "DAC and ADC resolution (integer or \"ideal\")", false),
    p("bits_ue", Hardware, "UE DAC resolution", false),
    p("bits_bs", Hardware, "BS ADC resolution", false),
    p("irs_distance_km", Geometry, "IRS distance from its BS", false),
    p("irs_azimuth_deg", Geometry, "direction of the IRS seen from its BS", true),
    p("ue_min_distance_km", Geometry, "inner radius of the UE sector", true),
    p("ue_max_distance_km", Geometry, "outer radius of the UE sector", true),
    p("sector_width_deg", Geometry, "UE sector width", false),
    p("bs_height_m", Geometry, "BS height", true),
    p("irs_height_m", Geometry, "IRS height", true),
    p("ue_height_m", Geometry, "UE height", true),
    p("bs_spacing", Geometry, "BS element spacing in wavelengths", true),
    p("irs_spacing", Geometry, "IRS element spacing in wavelengths", true),
    p("asd_az_deg", Geometry, "azimuth angular spread", true),
    p("asd_el_deg", Geometry, "elevation angular spread", true),
    p("rician_cutoff_m", Geometry, "distance beyond which links are pure NLoS", true),
];

pub fn lookup(name: &str) -> Option<&'static Param> {
    PARAMS.iter().find(|p| p.name == name)
}

fn num(name: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        _ => Err(ConfigError::Type { key: name.to_owned(), expected: "a number", found: v.type_str() }),
    }
}

fn count(name: &str, v: &Value) -> Result<usize, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        Value::Integer(_) => Err(ConfigError::Invalid(format!("{name} must be non-negative"))),
        _ => Err(ConfigError::Type { key: name.to_owned(), expected: "an integer", found: v.type_str() }),
    }
}

fn text<'a>(name: &str, v: &'a Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| ConfigError::Type { key: name.to_owned(), expected: "a string", found: v.type_str() })
}

pub fn parse_resolution(name: &str, v: &Value) -> Result<Resolution, ConfigError> {
    match v {
        Value::String(s) if s == "ideal" => Ok(Resolution::Ideal),
        Value::Integer(b) if *b >= 1 && *b <= 32 => Ok(Resolution::Bits(*b as u32)),
        Value::Integer(b) => Err(ConfigError::Invalid(format!("{name} = {b}: resolution must be 1..=32 bits"))),
        _ => Err(ConfigError::Type { key: name.to_owned(), expected: "an integer or \"ideal\"", found: v.type_str() }),
    }
}

fn resolution_value(r: Resolution) -> Value {
    match r {
        Resolution::Ideal => Value::String("ideal".into()),
        Resolution::Bits(b) => Value::Integer(b as i64),
    }
}

/// Sets parameter `name` on the configuration.
pub fn set(name: &str, v: &Value, cfg: &mut SystemConfig, hw: &mut HardwareKnobs) -> Result<(), ConfigError> {
    match name {
        "cells" => cfg.cells = count(name, v)?,
        "users_per_cell" => cfg.users_per_cell = count(name, v)?,
        "bs_h" => cfg.bs_dims.0 = count(name, v)?,
        "bs_v" => cfg.bs_dims.1 = count(name, v)?,
        "irs_h" => cfg.irs_dims.0 = count(name, v)?,
        "irs_v" => cfg.irs_dims.1 = count(name, v)?,
        "irs_side" => {
            let s = count(name, v)?;
            cfg.irs_dims = (s, s);
        }
        "tau_c" => cfg.tau_c = count(name, v)?,
        "tau_p" => cfg.tau_p = count(name, v)?,
        "p_data_dbm" => cfg.p_data_w = dbm_to_watts(num(name, v)?),
        "p_pilot_dbm" => cfg.p_pilot_w = dbm_to_watts(num(name, v)?),
        "noise_dbm" => cfg.noise_power_w = dbm_to_watts(num(name, v)?),
        "carrier_ghz" => cfg.carrier_hz = num(name, v)? * 1e9,
        "sample_period_us" => cfg.sample_period_s = num(name, v)? * 1e-6,
        "velocity_kmh" => cfg.ue_speed_mps = num(name, v)? / 3.6,
        "area_km" => cfg.area_km = num(name, v)?,
        "direct_extra_loss_db" => cfg.direct_extra_loss_db = num(name, v)?,
        "phase_mode" => {
            let s = text(name, v)?;
            cfg.phase_mode = PhaseMode::parse(s)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown phase_mode {s:?} (random, zero, los-align)")))?;
        }
        "shadowing_std_db" => {
            cfg.shadowing_std_db = match v {
                Value::String(s) if s == "off" => None,
                _ => Some(num(name, v)?),
            }
        }
        "irs_rank" => {
            cfg.irs_rank = match v {
                Value::String(s) if s == "full" => None,
                _ => Some(count(name, v)?),
            }
        }
        "kappa_ue" => hw.kappa_ue = num(name, v)?,
        "kappa_bs" => hw.kappa_bs = num(name, v)?,
        "bits" => {
            let r = parse_resolution(name, v)?;
            hw.bits_ue = r;
            hw.bits_bs = r;
        }
        "bits_ue" => hw.bits_ue = parse_resolution(name, v)?,
        "bits_bs" => hw.bits_bs = parse_resolution(name, v)?,
        "irs_distance_km" => cfg.irs_distance_km = num(name, v)?,
        "irs_azimuth_deg" => cfg.irs_azimuth_deg = num(name, v)?,
        "ue_min_distance_km" => cfg.ue_min_distance_km = num(name, v)?,
        "ue_max_distance_km" => cfg.ue_max_distance_km = num(name, v)?,
        "sector_width_deg" => cfg.sector_width_deg = num(name, v)?,
        "bs_height_m" => cfg.bs_height_m = num(name, v)?,
        "irs_height_m" => cfg.irs_height_m = num(name, v)?,
        "ue_height_m" => cfg.ue_height_m = num(name, v)?,
        "bs_spacing" => cfg.bs_spacing = num(name, v)?,
        "irs_spacing" => cfg.irs_spacing = num(name, v)?,
        "asd_az_deg" => cfg.asd_az_deg = num(name, v)?,
        "asd_el_deg" => cfg.asd_el_deg = num(name, v)?,
        "rician_cutoff_m" => cfg.rician_cutoff_m = num(name, v)?,
        _ => return Err(ConfigError::UnknownKey(name.to_owned())),
    }
    Ok(())
}

/// Rounds away conversion noise (e.g. 20 dBm -> W -> dBm) for display.
fn tidy(x: f64) -> Value {
    let r: f64 = format!("{x:.12e}").parse().unwrap_or(x);
    if r.fract() == 0.0 && r.abs() < 1e15 {
        Value::Integer(r as i64)
    } else {
        Value::Float(r)
    }
}

/// Current value of parameter `name`, in user units.
pub fn get(name: &str, cfg: &SystemConfig, hw: &HardwareKnobs) -> Option<Value> {
    let int = |x: usize| Value::Integer(x as i64);
    Some(match name {
        "cells" => int(cfg.cells),
        "users_per_cell" => int(cfg.users_per_cell),
        "bs_h" => int(cfg.bs_dims.0),
        "bs_v" => int(cfg.bs_dims.1),
        "irs_h" => int(cfg.irs_dims.0),
        "irs_v" => int(cfg.irs_dims.1),
        "irs_side" => return (cfg.irs_dims.0 == cfg.irs_dims.1).then(|| int(cfg.irs_dims.0)),
        "tau_c" => int(cfg.tau_c),
        "tau_p" => int(cfg.tau_p),
        "p_data_dbm" => tidy(watts_to_dbm(cfg.p_data_w)),
        "p_pilot_dbm" => tidy(watts_to_dbm(cfg.p_pilot_w)),
        "noise_dbm" => tidy(watts_to_dbm(cfg.noise_power_w)),
        "carrier_ghz" => tidy(cfg.carrier_hz / 1e9),
        "sample_period_us" => tidy(cfg.sample_period_s * 1e6),
        "velocity_kmh" => tidy(cfg.ue_speed_mps * 3.6),
        "area_km" => tidy(cfg.area_km),
        "direct_extra_loss_db" => tidy(cfg.direct_extra_loss_db),
        "phase_mode" => Value::String(cfg.phase_mode.name().into()),
        "shadowing_std_db" => cfg.shadowing_std_db.map_or(Value::String("off".into()), tidy),
        "irs_rank" => cfg.irs_rank.map_or(Value::String("full".into()), int),
        "kappa_ue" => tidy(hw.kappa_ue),
        "kappa_bs" => tidy(hw.kappa_bs),
        "bits" => return (hw.bits_ue == hw.bits_bs).then(|| resolution_value(hw.bits_ue)),
        "bits_ue" => resolution_value(hw.bits_ue),
        "bits_bs" => resolution_value(hw.bits_bs),
        "irs_distance_km" => tidy(cfg.irs_distance_km),
        "irs_azimuth_deg" => tidy(cfg.irs_azimuth_deg),
        "ue_min_distance_km" => tidy(cfg.ue_min_distance_km),
        "ue_max_distance_km" => tidy(cfg.ue_max_distance_km),
        "sector_width_deg" => tidy(cfg.sector_width_deg),
        "bs_height_m" => tidy(cfg.bs_height_m),
        "irs_height_m" => tidy(cfg.irs_height_m),
        "ue_height_m" => tidy(cfg.ue_height_m),
        "bs_spacing" => tidy(cfg.bs_spacing),
        "irs_spacing" => tidy(cfg.irs_spacing),
        "asd_az_deg" => tidy(cfg.asd_az_deg),
        "asd_el_deg" => tidy(cfg.asd_el_deg),
        "rician_cutoff_m" => tidy(cfg.rician_cutoff_m),
        _ => return None,
    })
}

/// Short text form of a value, used for CSV axis columns and seeds.
pub fn display(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => format!("{f}"),
        other => other.to_string(),
    }
}
