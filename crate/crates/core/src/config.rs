//! Flat run settings shared by command-line flags and TOML config files.
//!
//! A config file is a single table of `key = value` pairs whose keys are the
//! long flag names with `-` replaced by `_`, plus a `task` key naming what
//! `verify` should run. Flags given on the command line win over the file.

use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::experiments::{EnsembleSource, Mode};
use crate::haar::Seed;
use crate::norms::PExponent;

/// Environment variable consulted for the seed when neither a flag nor
/// the config file sets one.
pub const SEED_ENV: &str = "RANDOMIZER_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Sample,
    Oracles,
    Certify,
    Net,
    Sweep,
    ExpectedDeviation,
    Mcdiarmid,
    BoundedDifference,
    Formulas,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Sample => "sample",
            Task::Oracles => "oracles",
            Task::Certify => "certify",
            Task::Net => "net",
            Task::Sweep => "sweep",
            Task::ExpectedDeviation => "expected_deviation",
            Task::Mcdiarmid => "mcdiarmid",
            Task::BoundedDifference => "bounded_difference",
            Task::Formulas => "formulas",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,

    /// Hilbert space dimension
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,

    /// Number of unitaries in the ensemble
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,

    /// Smallest m of a sweep (default d + 1)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_min: Option<usize>,

    /// Largest m of a sweep (default d^2)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,

    /// Geometric ratio of the sweep grid
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_ratio: Option<f64>,

    /// Schatten exponent, a number >= 1 or "inf"
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PExponent>,

    /// Companion exponent for expectation bounds (default p + 1)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<PExponent>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,

    /// Net covering radius in trace distance
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,

    /// Pure states evaluated per trial or certification
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,

    /// Seed value (falls back to RANDOMIZER_SEED, then 0)
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,

    /// net or sample
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,

    /// haar or pauli
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSource>,

    /// Consecutive rejections before net construction stops
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,

    /// Random probes used to verify net covering
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,

    /// Single-unitary replacements in the bounded-difference check
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacements: Option<usize>,

    /// Haar draws for the isotropy check
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,

    /// Tail thresholds, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,

    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_fraction: Option<f64>,

    /// Constant in the cardinality formula
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_p: Option<f64>,

    /// Number of random matrices in the oracle batch
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,

    /// Matrix dimensions of the oracle batch, comma separated
    #[arg(long, value_delimiter = ',')]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )+
    };
}

impl Settings {
    /// `self` with every field set in `flags` replaced.
    pub fn overridden_by(mut self, flags: &Settings) -> Settings {
        overlay!(
            self, flags, task, d, m, m_min, m_max, m_ratio, p, r, epsilon, eta, trials, states, seed, stream,
            mode, ensemble, budget, probes, replacements, samples, t, success_fraction, c_p, count, dims
        );
        self
    }

    /// Fills in the seed from the environment (or 0) when unset.
    pub fn with_resolved_seed(mut self) -> Result<Settings, String> {
        if self.seed.is_none() {
            self.seed = Some(match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| format!("{SEED_ENV}={v:?} is not an unsigned integer"))?,
                Err(_) => 0,
            });
        }
        self.stream.get_or_insert(0);
        Ok(self)
    }

    pub fn seed(&self) -> Seed {
        Seed::new(self.seed.unwrap_or(0), self.stream.unwrap_or(0))
    }
}

/// Parses a TOML settings document. Errors carry the line, column and
/// offending key.
pub fn parse_settings(text: &str) -> Result<Settings, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

/// Reads settings from a TOML file, or from the `manifest.config` of a
/// JSON report when the path ends in `.json`.
pub fn load_settings(path: &Path) -> Result<Settings, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let parsed = if path.extension().is_some_and(|x| x == "json") {
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let config = value
            .pointer("/manifest/config")
            .cloned()
            .ok_or_else(|| "report has no manifest.config".to_string())?;
        serde_json::from_value(config).map_err(|e| e.to_string())
    } else {
        parse_settings(&text)
    };
    parsed.map_err(|e| format!("{}: {e}", path.display()))
}
