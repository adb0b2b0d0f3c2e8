use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use css_core::diagnostics::{
    decay_and_charge, energy_positivity, identity_report, refined_grid, resample, DecayFit,
    EnergyPositivity, IdentityReport,
};
use css_core::gauge::{falloff_report, reconstruct, FalloffReport, GaugeFields};
use css_core::solver::{IterationRecord, SolveReport, TruncationCheck};
use css_core::{FunctionalBreakdown, ModelParams, RadialField, RadialGrid};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config: RunConfig,
    pub grid_sha256: String,
    pub seed: u64,
    pub version: &'static str,
}

pub fn grid_hash(grid: &RadialGrid) -> String {
    hex::encode(Sha256::digest(grid.node_bytes()))
}

pub fn provenance(config: &RunConfig, grid: &RadialGrid) -> Provenance {
    Provenance {
        config: config.clone(),
        grid_sha256: grid_hash(grid),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub status: &'static str,
    pub params: ModelParams,
    pub m_eps: f64,
    pub iterations: usize,
    pub residual_norm: f64,
    pub relative_residual: f64,
    pub positive: bool,
    pub descent_monotone: bool,
    pub breakdown: FunctionalBreakdown,
    pub history: Vec<IterationRecord>,
}

impl SolveSummary {
    pub fn new(r: &SolveReport, with_history: bool) -> SolveSummary {
        SolveSummary {
            status: if r.converged {
                "converged"
            } else {
                "nonconverged"
            },
            params: r.params,
            m_eps: r.m_eps,
            iterations: r.iterations,
            residual_norm: r.residual_norm,
            relative_residual: r.relative_residual,
            positive: r.positive,
            descent_monotone: r.descent_monotone(),
            breakdown: r.breakdown,
            history: if with_history {
                r.history.clone()
            } else {
                Vec::new()
            },
        }
    }
}

/// Everything the diagnostics say about one field.
#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    pub params: ModelParams,
    pub identities: IdentityReport,
    /// Identities of the field resampled onto a grid with twice the intervals.
    pub identities_refined: Option<IdentityReport>,
    pub decay: Option<DecayFit>,
    pub decay_error: Option<String>,
    pub falloff: FalloffReport,
    pub energy_positivity: Option<EnergyPositivity>,
    pub energy_positivity_error: Option<String>,
}

pub fn certify(
    u: &RadialField,
    params: &ModelParams,
    truncation: Option<&TruncationCheck>,
    static_checks: bool,
) -> Result<(Certification, GaugeFields), CliError> {
    let identities = identity_report(u, params)?;
    let identities_refined = if static_checks {
        let fine = refined_grid(u.grid(), 2).ok().map(Arc::new);
        match fine {
            Some(g) => Some(identity_report(&resample(u, g)?, params)?),
            None => None,
        }
    } else {
        None
    };
    let (decay, decay_error) = split(decay_and_charge(u, params, truncation));
    let gauge = reconstruct(u, params)?;
    let falloff = falloff_report(&gauge, u);
    let (energy_positivity, energy_positivity_error) = if static_checks {
        split(energy_positivity(u, params))
    } else {
        (None, None)
    };
    Ok((
        Certification {
            params: *params,
            identities,
            identities_refined,
            decay,
            decay_error,
            falloff,
            energy_positivity,
            energy_positivity_error,
        },
        gauge,
    ))
}

fn split<T, E: std::fmt::Display>(r: Result<T, E>) -> (Option<T>, Option<String>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))
}

/// Writes `{"report": ..., "metadata": {...}}`. The report block is a pure
/// function of the configuration; wall-clock data lives only in metadata.
pub fn write_report(path: &Path, report: &Value) -> Result<(), CliError> {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let doc = serde_json::json!({
        "report": report,
        "metadata": { "timestamp_unix": stamp },
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
