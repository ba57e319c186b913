//! Built-in scenarios.

pub const NAMES: [&str; 3] = ["paper-sec6", "paper-sec6-openloop", "paper-sec6-closedloop"];

/// TOML source of a named preset.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "paper-sec6" => Some(include_str!("../presets/full.toml")),
        "paper-sec6-openloop" => Some(include_str!("../presets/openloop.toml")),
        "paper-sec6-closedloop" => Some(include_str!("../presets/closedloop.toml")),
        _ => None,
    }
}
