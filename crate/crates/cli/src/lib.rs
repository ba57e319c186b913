//! Library side of the `beamdelay` command-line tool.

pub mod commands;
pub mod config;
pub mod presets;

use std::fmt;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const MODE_COUNT: u8 = 3;
    pub const SYNTHESIS: u8 = 4;
    pub const DIVERGENCE: u8 = 5;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(exit::CONFIG, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(exit::FAILURE, format!("I/O error: {e}"))
    }
}

impl From<beamdelay_core::Error> for CliError {
    fn from(e: beamdelay_core::Error) -> Self {
        use beamdelay_core::Error as E;
        let code = match &e {
            E::InvalidParams(_) | E::InvalidArgument(_) | E::NotPinned(_) | E::DelayOutOfRange { .. } => exit::CONFIG,
            E::BelowUnstableCount { .. } => exit::MODE_COUNT,
            E::Uncontrollable | E::InvalidPoles(_) | E::Placement(_) | E::NotHurwitz { .. } => exit::SYNTHESIS,
            E::Divergence { .. } => exit::DIVERGENCE,
            _ => exit::FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

/// Resolve `--config` / `--preset` into a validated scenario.
pub fn load(
    config_path: Option<&std::path::Path>,
    preset: Option<&str>,
    overrides: &config::Overrides,
) -> Result<config::Scenario, CliError> {
    let text = match (config_path, preset) {
        (Some(path), None) => std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(name)) => presets::source(name)
            .ok_or_else(|| {
                CliError::config(format!("unknown preset `{name}` (available: {})", presets::NAMES.join(", ")))
            })?
            .to_string(),
        (None, None) => return Err(CliError::config("one of --config or --preset is required")),
        (Some(_), Some(_)) => return Err(CliError::config("--config and --preset are mutually exclusive")),
    };
    let mut cfg = config::parse(&text).map_err(|e| CliError::config(format!("invalid scenario: {e}")))?;
    cfg.apply(overrides);
    cfg.build().map_err(CliError::config)
}
