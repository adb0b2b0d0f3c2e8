use std::path::{Path, PathBuf};

use css_core::grid::GridConfig;
use css_core::solver::{ContinuationConfig, Schedule, SolverConfig};
use css_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub p: f64,
    pub eps: f64,
    /// `None` selects the default fibering exponent for `p`.
    pub alpha: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            p: 5.0,
            eps: 1.0,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub p_values: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Profile read by the audit mode.
    pub profile: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            profile: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: String,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub schedule: Schedule,
    pub sweep: SweepConfig,
    pub solver: SolverConfig,
    pub seed: u64,
    pub correct_static: bool,
    pub certify_truncation: bool,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: "solve".into(),
            model: ModelConfig::default(),
            grid: GridConfig::default(),
            schedule: Schedule::default(),
            sweep: SweepConfig::default(),
            solver: SolverConfig::default(),
            seed: 0,
            correct_static: true,
            certify_truncation: true,
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("cannot parse config: {e}")))
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        RunConfig::from_json(&text)
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(
            self.model.p,
            self.model.eps,
            self.model.alpha,
        )?)
    }

    pub fn continuation(&self, seed: u64) -> ContinuationConfig {
        ContinuationConfig {
            schedule: self.schedule,
            solver: self.solver,
            seed,
            correct_static: self.correct_static,
            certify_truncation: self.certify_truncation,
        }
    }

    /// Checks every parameter the selected mode uses.
    pub fn validate(&self) -> Result<(), CliError> {
        self.grid.validate()?;
        self.solver.validate()?;
        match self.mode.as_str() {
            "solve" => {
                let p = self.params()?;
                if !(p.eps > 0.0) {
                    return Err(CliError::Config(
                        "solve mode requires eps > 0; use continuation for the static limit".into(),
                    ));
                }
            }
            "continuation" => {
                self.params()?;
                self.schedule.validate()?;
            }
            "sweep" => {
                if self.sweep.p_values.is_empty() || self.sweep.seeds.is_empty() {
                    return Err(CliError::Config(
                        "sweep requires nonempty p_values and seeds".into(),
                    ));
                }
                for &p in &self.sweep.p_values {
                    ModelParams::new(p, self.model.eps, self.model.alpha)?;
                }
                self.schedule.validate()?;
            }
            "audit" if self.output.profile.is_none() => {
                return Err(CliError::Config(
                    "audit mode requires a profile path".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}
