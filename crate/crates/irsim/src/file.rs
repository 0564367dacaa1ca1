//! TOML experiment files.
//!
//! ```toml
//! seed = 7
//! trials = 2000
//! receivers = ["mrc", "daa-mmse"]   # or "all"
//! stride = 10                       # or instants = [3, 30, 60]
//!
//! users_per_cell = 4
//! bits = 4                          # or "ideal"
//! velocity_kmh = 144
//!
//! [geometry]
//! irs_distance_km = 0.05
//!
//! [sweep]
//! irs_side = [10, 15]
//! ```
//!
//! Network and hardware parameters sit at the top level, geometry ones in
//! `[geometry]`. Every `[sweep]` entry is an axis; the first varies slowest.
//! Unknown keys are errors.

use irsim_core::ReceiverKind;
use toml::{Table, Value};

use crate::params::{self, Group, PARAMS};
use crate::sweep::{Axis, Instants, SweepSpec};
use crate::ConfigError;

fn type_err(key: &str, expected: &'static str, v: &Value) -> ConfigError {
    ConfigError::Type { key: key.to_owned(), expected, found: v.type_str() }
}

fn positive(key: &str, v: &Value) -> Result<usize, ConfigError> {
    match v {
        Value::Integer(i) if *i > 0 => Ok(*i as usize),
        Value::Integer(i) => Err(ConfigError::Invalid(format!("{key} must be positive, got {i}"))),
        _ => Err(type_err(key, "a positive integer", v)),
    }
}

fn receivers(v: &Value) -> Result<Vec<ReceiverKind>, ConfigError> {
    let parse = |s: &str| {
        ReceiverKind::parse(s)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown receiver {s:?} (mrc, du-mmse, daa-mmse)")))
    };
    match v {
        Value::String(s) if s == "all" => Ok(ReceiverKind::ALL.to_vec()),
        Value::String(s) => Ok(vec![parse(s)?]),
        Value::Array(a) => {
            let mut out = Vec::new();
            for x in a {
                let r = parse(x.as_str().ok_or_else(|| type_err("receivers", "strings", x))?)?;
                if out.contains(&r) {
                    return Err(ConfigError::Invalid(format!("receiver {} listed twice", r.name())));
                }
                out.push(r);
            }
            Ok(out)
        }
        _ => Err(type_err("receivers", "\"all\" or an array of names", v)),
    }
}

fn set_param(key: &str, v: &Value, in_geometry: bool, spec: &mut SweepSpec) -> Result<(), ConfigError> {
    let p = params::lookup(key).ok_or_else(|| ConfigError::UnknownKey(key.to_owned()))?;
    match (p.group == Group::Geometry, in_geometry) {
        (true, false) => return Err(ConfigError::Invalid(format!("`{key}` belongs in the [geometry] table"))),
        (false, true) => return Err(ConfigError::UnknownKey(format!("geometry.{key}"))),
        _ => {}
    }
    params::set(key, v, &mut spec.base, &mut spec.hardware)
}

/// Parses an experiment file. Values are checked here; the resolved sweep
/// points are checked by [`SweepSpec::points`].
pub fn parse_config(text: &str) -> Result<SweepSpec, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_owned()))?;
    let mut spec = SweepSpec::default();
    let mut saw_instants = false;
    for (key, v) in &table {
        match key.as_str() {
            "seed" => match v {
                Value::Integer(i) if *i >= 0 => spec.seed = *i as u64,
                _ => return Err(type_err("seed", "a non-negative integer", v)),
            },
            "trials" => spec.trials = positive(key, v)?,
            "block_size" => spec.block_size = positive(key, v)?,
            "receivers" => spec.receivers = receivers(v)?,
            "stride" | "instants" => {
                if saw_instants {
                    return Err(ConfigError::Invalid("give either `stride` or `instants`, not both".into()));
                }
                saw_instants = true;
                spec.instants = if key == "stride" {
                    Instants::Stride(positive(key, v)?)
                } else {
                    let a = v.as_array().ok_or_else(|| type_err(key, "an array of integers", v))?;
                    Instants::Explicit(a.iter().map(|x| positive(key, x)).collect::<Result<_, _>>()?)
                };
            }
            "geometry" => {
                let t = v.as_table().ok_or_else(|| type_err(key, "a table", v))?;
                for (k, x) in t {
                    set_param(k, x, true, &mut spec)?;
                }
            }
            "sweep" => {
                let t = v.as_table().ok_or_else(|| type_err(key, "a table", v))?;
                for (k, x) in t {
                    let values = x.as_array().ok_or_else(|| type_err(k, "an array of values", x))?;
                    // values are type-checked on a scratch copy now
                    let (mut c, mut h) = (spec.base.clone(), spec.hardware);
                    for y in values {
                        params::set(k, y, &mut c, &mut h)?;
                    }
                    spec.axes.push(Axis::new(k.clone(), values.iter().cloned()));
                }
            }
            _ => set_param(key, v, false, &mut spec)?,
        }
    }
    Ok(spec)
}

fn line(out: &mut String, name: &str, v: &Value, note: &str) {
    let lhs = format!("{name} = {v}");
    out.push_str(&format!("{lhs:<32}# {note}\n"));
}

/// Renders a complete, parseable experiment file: every parameter with its
/// current value and a short description. Parameters still at a default that
/// was chosen without a source value are marked `assumed default`.
pub fn render_config(spec: &SweepSpec) -> String {
    let defaults = SweepSpec::default();
    let mut out = String::new();
    out.push_str(&format!("seed = {}\ntrials = {}\n", spec.seed, spec.trials));
    let names: Vec<Value> = spec.receivers.iter().map(|r| Value::String(r.name().into())).collect();
    out.push_str(&format!("receivers = {}\n", Value::Array(names)));
    match &spec.instants {
        Instants::Stride(s) => out.push_str(&format!("stride = {s}\n")),
        Instants::Explicit(v) => {
            let a = Value::Array(v.iter().map(|&n| Value::Integer(n as i64)).collect());
            out.push_str(&format!("instants = {a}\n"));
        }
    }
    out.push_str(&format!("block_size = {}\n", spec.block_size));

    let split_bits = spec.hardware.bits_ue != spec.hardware.bits_bs;
    let skip = |name: &str| match name {
        "irs_side" => true,
        "bits" => split_bits,
        "bits_ue" | "bits_bs" => !split_bits,
        _ => false,
    };
    for group in [Group::Network, Group::Hardware, Group::Geometry] {
        out.push('\n');
        if group == Group::Geometry {
            out.push_str("[geometry]\n");
        }
        for p in PARAMS.iter().filter(|p| p.group == group && !skip(p.name)) {
            let v = params::get(p.name, &spec.base, &spec.hardware).expect("every parameter has a value");
            let at_default = params::get(p.name, &defaults.base, &defaults.hardware).as_ref() == Some(&v);
            let note = if p.assumed && at_default { format!("{} (assumed default)", p.doc) } else { p.doc.to_string() };
            line(&mut out, p.name, &v, &note);
        }
    }
    if !spec.axes.is_empty() {
        out.push_str("\n[sweep]\n");
        for a in &spec.axes {
            out.push_str(&format!("{} = {}\n", a.name, Value::Array(a.values.clone())));
        }
    }
    out
}
