//! Scenario resolution: defaults, preset base, config file, then flags.

use std::fmt;
use std::path::{Path, PathBuf};

use wnc::scenario::{apply_override, Scenario};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<wnc::Error> for CliError {
    fn from(e: wnc::Error) -> Self {
        use wnc::Error::*;
        match e {
            Config(_) | SearchBudget(_) | InvalidSplit { .. } | UnsupportedOrder(_) | Code(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Recursively lays `over` on top of `base`.
pub fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// User-supplied scenario sources.
#[derive(Debug, Clone, Default)]
pub struct Sources {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub set: Vec<String>,
}

impl Sources {
    fn file_table(path: &Path) -> Result<toml::Table, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse().map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Resolves one scenario. Precedence, lowest first: built-in defaults,
    /// `base`, the config file, `--set`, `sweep`, `--seed`.
    pub fn resolve(&self, base: &[&str], sweep: &[String]) -> Result<Scenario, CliError> {
        let mut tree = toml::Table::new();
        for o in base {
            apply_override(&mut tree, o)?;
        }
        if let Some(path) = &self.config {
            merge(&mut tree, Self::file_table(path)?);
        }
        for o in self.set.iter().chain(sweep) {
            apply_override(&mut tree, o)?;
        }
        if let Some(seed) = self.seed {
            apply_override(&mut tree, &format!("sim.seed={seed}"))?;
        }
        Ok(Scenario::from_table(tree)?)
    }
}
