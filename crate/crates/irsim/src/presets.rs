//! Experiment files shipped with the binary.

use crate::file::parse_config;
use crate::sweep::SweepSpec;
use crate::ConfigError;

/// `(name, file text)`.
pub const PRESETS: [(&str, &str); 3] = [
    ("validate-bound", include_str!("../presets/validate-bound.toml")),
    ("se-vs-time", include_str!("../presets/se-vs-time.toml")),
    ("receiver-compare", include_str!("../presets/receiver-compare.toml")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<SweepSpec, ConfigError> {
    let text = preset_text(name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        ConfigError::Invalid(format!("unknown preset {name:?} (available: {})", names.join(", ")))
    })?;
    parse_config(text)
}
