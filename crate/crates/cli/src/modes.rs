//! Run modes, looked up by name in a [`Registry`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use css_core::diagnostics::identity_report;
use css_core::gauge::reconstruct;
use css_core::nonlocal::compute_nonlocal;
use css_core::solver::{
    initial_guess, minimize_on_manifold, run_continuation, ContinuationReport, SolveReport,
};
use css_core::{CssError, ModelParams, RadialField, RadialGrid};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::profile::Profile;
use crate::report::{certify, provenance, to_value, Certification, SolveSummary};

pub struct RunContext<'a> {
    pub config: &'a RunConfig,
    pub out_dir: &'a Path,
}

impl RunContext<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Result of a mode: the report body, the files written, and an error to
/// surface after the report has been saved.
pub struct ModeOutput {
    pub report: Value,
    pub files: Vec<PathBuf>,
    pub failure: Option<CliError>,
}

pub trait RunMode: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn run(&self, ctx: &RunContext) -> Result<ModeOutput, CliError>;
}

pub struct Registry {
    modes: Vec<Box<dyn RunMode>>,
}

impl Registry {
    pub fn empty() -> Registry {
        Registry { modes: Vec::new() }
    }

    pub fn standard() -> Registry {
        let mut r = Registry::empty();
        r.register(Box::new(SolveMode));
        r.register(Box::new(ContinuationMode));
        r.register(Box::new(SweepMode));
        r.register(Box::new(AuditMode));
        r
    }

    /// Later registrations replace earlier ones of the same name.
    pub fn register(&mut self, mode: Box<dyn RunMode>) {
        self.modes.retain(|m| m.name() != mode.name());
        self.modes.push(mode);
    }

    pub fn get(&self, name: &str) -> Option<&dyn RunMode> {
        self.modes
            .iter()
            .find(|m| m.name() == name)
            .map(|m| m.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.modes.iter().map(|m| m.name()).collect()
    }
}

fn build_grid(config: &RunConfig) -> Result<Arc<RadialGrid>, CliError> {
    Ok(Arc::new(RadialGrid::build(&config.grid)?))
}

fn write_profile(
    ctx: &RunContext,
    u: &RadialField,
    params: &ModelParams,
) -> Result<PathBuf, CliError> {
    let gauge = reconstruct(u, params)?;
    let path = ctx.path("profile.csv");
    Profile::from_gauge(&gauge, Some(*params)).write(&path)?;
    Ok(path)
}

pub struct SolveMode;

impl RunMode for SolveMode {
    fn name(&self) -> &'static str {
        "solve"
    }

    fn describe(&self) -> &'static str {
        "single minimization at the configured eps > 0"
    }

    fn run(&self, ctx: &RunContext) -> Result<ModeOutput, CliError> {
        let cfg = ctx.config;
        let params = cfg.params()?;
        let grid = build_grid(cfg)?;
        let u0 = initial_guess(&params, Arc::clone(&grid), cfg.seed)?;
        let (report, failure) = match minimize_on_manifold(&u0, &params, &cfg.solver) {
            Ok(r) => (r, None),
            Err(CssError::NonConvergence {
                best,
                iterations,
                residual,
            }) => (
                *best,
                Some(CliError::NonConvergence(format!(
                    "{iterations} iterations, residual {residual:e}"
                ))),
            ),
            Err(e) => return Err(e.into()),
        };
        let (cert, _) = certify(&report.solution, &params, None, false)?;
        let profile = write_profile(ctx, &report.solution, &params)?;
        let body = json!({
            "provenance": to_value(&provenance(cfg, &grid))?,
            "mode": "solve",
            "solve": to_value(&SolveSummary::new(&report, true))?,
            "certification": to_value(&cert)?,
        });
        Ok(ModeOutput {
            report: body,
            files: vec![profile],
            failure,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
struct ScheduleRow {
    eps: f64,
    m_eps: f64,
    iterations: usize,
    relative_residual: f64,
    mass_term: f64,
    /// Distance to the previous schedule entry.
    drift: Option<f64>,
    nehari_res: f64,
    pohozaev_res: f64,
    j_res: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ContinuationSummary {
    schedule: Vec<ScheduleRow>,
    m_first: f64,
    m_bounded_by_first: bool,
    mass_term_monotone: bool,
    final_drift: Option<f64>,
    static_residual_raw: f64,
    corrector: Option<SolveSummary>,
    corrector_error: Option<String>,
    truncation: Option<css_core::solver::TruncationCheck>,
}

fn summarize(rep: &ContinuationReport) -> Result<ContinuationSummary, CliError> {
    let mut schedule = Vec::with_capacity(rep.per_eps.len());
    for (i, s) in rep.per_eps.iter().enumerate() {
        let ids = identity_report(&s.solution, &s.params)?;
        schedule.push(ScheduleRow {
            eps: s.params.eps,
            m_eps: s.m_eps,
            iterations: s.iterations,
            relative_residual: s.relative_residual,
            mass_term: rep.mass_terms[i],
            drift: i.checked_sub(1).map(|k| rep.drift[k]),
            nehari_res: ids.nehari_res,
            pohozaev_res: ids.pohozaev_res,
            j_res: ids.j_res,
        });
    }
    let m1 = rep.m_first();
    Ok(ContinuationSummary {
        m_first: m1,
        m_bounded_by_first: rep.per_eps.iter().skip(1).all(|r| r.m_eps <= m1),
        mass_term_monotone: rep.mass_term_monotone,
        final_drift: rep.drift.last().copied(),
        static_residual_raw: rep.static_residual_raw,
        corrector: rep.corrector.as_ref().map(|c| SolveSummary::new(c, false)),
        corrector_error: rep.corrector_error.clone(),
        truncation: rep.truncation.clone(),
        schedule,
    })
}

/// Runs the continuation for one `(p, seed)` and certifies its limit.
fn continuation_point(
    cfg: &RunConfig,
    params: &ModelParams,
    grid: &Arc<RadialGrid>,
    seed: u64,
) -> Result<(ContinuationReport, Certification), CliError> {
    let rep = run_continuation(params, Arc::clone(grid), &cfg.continuation(seed))?;
    let p_ext = rep.extrapolated_params();
    let (cert, _) = certify(
        &rep.extrapolated,
        &p_ext,
        rep.truncation.as_ref(),
        p_ext.eps == 0.0,
    )?;
    Ok((rep, cert))
}

pub struct ContinuationMode;

impl RunMode for ContinuationMode {
    fn name(&self) -> &'static str {
        "continuation"
    }

    fn describe(&self) -> &'static str {
        "eps continuation towards the static problem with certification"
    }

    fn run(&self, ctx: &RunContext) -> Result<ModeOutput, CliError> {
        let cfg = ctx.config;
        let params = cfg.params()?;
        let grid = build_grid(cfg)?;
        let prov = to_value(&provenance(cfg, &grid))?;
        match continuation_point(cfg, &params, &grid, cfg.seed) {
            Ok((rep, cert)) => {
                let profile = write_profile(ctx, &rep.extrapolated, &rep.extrapolated_params())?;
                Ok(ModeOutput {
                    report: json!({
                        "provenance": prov,
                        "mode": "continuation",
                        "continuation": to_value(&summarize(&rep)?)?,
                        "certification": to_value(&cert)?,
                    }),
                    files: vec![profile],
                    failure: None,
                })
            }
            Err(CliError::Core(e)) if e.best_iterate().is_some() => {
                let best: &SolveReport = e.best_iterate().expect("checked");
                let profile = write_profile(ctx, &best.solution, &best.params)?;
                Ok(ModeOutput {
                    report: json!({
                        "provenance": prov,
                        "mode": "continuation",
                        "error": e.to_string(),
                        "best_iterate": to_value(&SolveSummary::new(best, true))?,
                    }),
                    files: vec![profile],
                    failure: Some(CliError::NonConvergence(e.to_string())),
                })
            }
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub seed: u64,
    pub status: String,
    pub energy: Option<f64>,
    pub charge: Option<f64>,
    pub nehari_res: Option<f64>,
    pub pohozaev_res: Option<f64>,
    pub slope: Option<f64>,
    pub charge_converged: Option<bool>,
}

pub const SWEEP_HEADER: &str = "p,seed,status,E,Q,nehariRes,pohozaevRes,slope,chargeConverged";

fn sweep_row(cfg: &RunConfig, grid: &Arc<RadialGrid>, p: f64, seed: u64) -> SweepRow {
    let failed = |status: String| SweepRow {
        p,
        seed,
        status,
        energy: None,
        charge: None,
        nehari_res: None,
        pohozaev_res: None,
        slope: None,
        charge_converged: None,
    };
    let params = match ModelParams::new(p, cfg.model.eps, cfg.model.alpha) {
        Ok(v) => v,
        Err(e) => return failed(format!("config error: {e}")),
    };
    match continuation_point(cfg, &params, grid, seed) {
        Ok((rep, cert)) => SweepRow {
            p,
            seed,
            status: "ok".into(),
            energy: Some(cert.identities.breakdown.energy),
            charge: Some(cert.identities.breakdown.b / 2.0),
            nehari_res: Some(cert.identities.nehari_res),
            pohozaev_res: Some(cert.identities.pohozaev_res),
            slope: cert.decay.map(|d| d.slope),
            charge_converged: rep.truncation.map(|t| t.charge_converged),
        },
        Err(e) => failed(format!("failed: {e}")),
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    fn opt(v: Option<f64>) -> String {
        v.map(|x| format!("{x:e}")).unwrap_or_default()
    }
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let status = r.status.replace([',', '\n'], ";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.p,
            r.seed,
            status,
            opt(r.energy),
            opt(r.charge),
            opt(r.nehari_res),
            opt(r.pohozaev_res),
            opt(r.slope),
            r.charge_converged
                .map(|b| b.to_string())
                .unwrap_or_default()
        );
    }
    out
}

pub struct SweepMode;

impl RunMode for SweepMode {
    fn name(&self) -> &'static str {
        "sweep"
    }

    fn describe(&self) -> &'static str {
        "one continuation per (p, seed), run concurrently"
    }

    fn run(&self, ctx: &RunContext) -> Result<ModeOutput, CliError> {
        let cfg = ctx.config;
        let grid = build_grid(cfg)?;
        let points: Vec<(f64, u64)> = cfg
            .sweep
            .p_values
            .iter()
            .flat_map(|&p| cfg.sweep.seeds.iter().map(move |&s| (p, s)))
            .collect();
        let rows: Vec<SweepRow> = points
            .par_iter()
            .map(|&(p, s)| sweep_row(cfg, &grid, p, s))
            .collect();
        let path = ctx.path("sweep.csv");
        std::fs::write(&path, sweep_csv(&rows)).map_err(|e| CliError::io(&path, e))?;
        Ok(ModeOutput {
            report: json!({
                "provenance": to_value(&provenance(cfg, &grid))?,
                "mode": "sweep",
                "rows": to_value(&rows)?,
            }),
            files: vec![path],
            failure: None,
        })
    }
}

pub struct AuditMode;

impl RunMode for AuditMode {
    fn name(&self) -> &'static str {
        "audit"
    }

    fn describe(&self) -> &'static str {
        "recompute every residual from a profile CSV"
    }

    fn run(&self, ctx: &RunContext) -> Result<ModeOutput, CliError> {
        let cfg = ctx.config;
        let path = cfg
            .output
            .profile
            .as_ref()
            .ok_or_else(|| CliError::Config("audit mode requires a profile path".into()))?;
        let profile = Profile::read(path)?;
        let params = match profile.params {
            Some(p) => {
                p.validate()?;
                p
            }
            None => cfg.params()?,
        };
        let grid = Arc::new(RadialGrid::from_nodes(
            profile.r.clone(),
            cfg.grid.tail_tol,
        )?);
        let u = RadialField::new(Arc::clone(&grid), profile.u.clone())?;
        let identities = identity_report(&u, &params)?;
        let cache = compute_nonlocal(&u)?;
        let max_dev = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        let columns = json!({
            "h": max_dev(&cache.h, &profile.h),
            "U": max_dev(&cache.u_mag, &profile.u_mag),
            "V": max_dev(&cache.v, &profile.v),
            "A0": max_dev(&cache.v, &profile.a0),
        });
        let (cert, _) = certify(&u, &params, None, params.eps == 0.0)?;
        let mut prov_cfg = cfg.clone();
        prov_cfg.grid.r_max = grid.r_max();
        prov_cfg.grid.n = grid.intervals();
        Ok(ModeOutput {
            report: json!({
                "provenance": to_value(&provenance(&prov_cfg, &grid))?,
                "mode": "audit",
                "profile": path.display().to_string(),
                "params": to_value(&params)?,
                "identities": to_value(&identities)?,
                "column_max_deviation": columns,
                "certification": to_value(&cert)?,
            }),
            files: Vec::new(),
            failure: None,
        })
    }
}
