use super::ExperimentSpec;
use crate::error::{Error, Result};

/// Bundled specs as `(name, toml)`.
pub const PRESETS: [(&str, &str); 3] = [
    ("fig3", include_str!("../../presets/fig3.toml")),
    ("fig4", include_str!("../../presets/fig4.toml")),
    ("fig5", include_str!("../../presets/fig5.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Parsed preset; accepts `fig5`, `presets/fig5` or `presets/fig5.toml`.
pub fn preset(name: &str) -> Result<ExperimentSpec> {
    let key = name.trim_start_matches("presets/").trim_end_matches(".toml");
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == key)
        .ok_or_else(|| Error::Spec(format!("unknown preset {name:?}; available: {}", preset_names().join(", "))))?;
    ExperimentSpec::from_toml_str(text)
}
