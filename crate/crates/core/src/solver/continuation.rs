use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{initial_guess, minimize_on_manifold, newton_correct, SolveReport, SolverConfig};
use crate::diagnostics::tail_fit;
use crate::error::{CssError, Result};
use crate::field::RadialField;
use crate::functionals::{clamp_boundary, dual_norm, gradient_values, h1_gram};
use crate::grid::{Grading, GridConfig, RadialGrid};
use crate::interp::Pchip;
use crate::model::ModelParams;
use crate::nonlocal::nonlocal_unchecked;
use crate::norms::{grad_sq_values, lq_pow_values};

/// Geometric schedule `eps_start, eps_start * ratio, ...`, ending with the
/// first value strictly below `eps_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub eps_start: f64,
    pub ratio: f64,
    pub eps_min: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            eps_start: 1.0,
            ratio: 0.5,
            eps_min: 1e-4,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_start > 0.0 && self.eps_start <= 1.0) {
            return Err(CssError::Config(format!(
                "schedule requires 0 < eps_start <= 1 (got {})",
                self.eps_start
            )));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(CssError::Config(format!(
                "schedule requires 0 < ratio < 1 (got {})",
                self.ratio
            )));
        }
        if !(self.eps_min > 0.0 && self.eps_min < self.eps_start) {
            return Err(CssError::Config(format!(
                "schedule requires 0 < eps_min < eps_start (got {})",
                self.eps_min
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let mut out = vec![self.eps_start];
        while *out.last().unwrap() >= self.eps_min {
            let next = out.last().unwrap() * self.ratio;
            out.push(next);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    pub schedule: Schedule,
    pub solver: SolverConfig,
    pub seed: u64,
    /// Run Newton at `eps = 0` from the last solution.
    pub correct_static: bool,
    /// Re-solve on a grid stretched to `2 R_max` and compare the charge.
    pub certify_truncation: bool,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            schedule: Schedule::default(),
            solver: SolverConfig::default(),
            seed: 0,
            correct_static: true,
            certify_truncation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    pub r_max: f64,
    pub r_max_doubled: f64,
    pub charge: f64,
    pub charge_doubled: f64,
    pub relative_change: f64,
    pub energy: f64,
    pub energy_doubled: f64,
    pub residual_doubled: f64,
    /// Charge moved by less than 1%.
    pub charge_converged: bool,
    /// Charge moved by less than 0.5% and the re-solve converged.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationReport {
    pub params: ModelParams,
    pub schedule: Vec<f64>,
    pub per_eps: Vec<SolveReport>,
    /// `||u_{n+1} - u_n||_{2,4}` between consecutive schedule entries.
    pub drift: Vec<f64>,
    /// `eps_n b(u_n)`.
    pub mass_terms: Vec<f64>,
    pub mass_term_monotone: bool,
    /// Relative `eps = 0` residual of the last schedule solution.
    pub static_residual_raw: f64,
    /// Newton at `eps = 0`, when requested and converged.
    pub corrector: Option<SolveReport>,
    pub corrector_error: Option<String>,
    /// The `eps -> 0` candidate: the corrected field if available,
    /// otherwise the last schedule solution.
    pub extrapolated: RadialField,
    pub truncation: Option<TruncationCheck>,
}

impl ContinuationReport {
    pub fn m_first(&self) -> f64 {
        self.per_eps[0].m_eps
    }

    pub fn m_values(&self) -> Vec<f64> {
        self.per_eps.iter().map(|r| r.m_eps).collect()
    }

    /// Parameters the extrapolated field solves (eps = 0 once corrected).
    pub fn extrapolated_params(&self) -> ModelParams {
        match &self.corrector {
            Some(c) => c.params,
            None => self.per_eps.last().map(|r| r.params).unwrap_or(self.params),
        }
    }
}

/// `||grad v||_2 + ||v||_4` for `v = x - y`.
pub fn norm24_distance(grid: &RadialGrid, x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    grad_sq_values(grid, &d).sqrt() + lq_pow_values(grid, &d, 4.0).powf(0.25)
}

/// Relative `eps = 0` residual of `u`.
pub fn static_residual(u: &RadialField, params: &ModelParams) -> f64 {
    let p0 = params.with_eps(0.0);
    let cache = nonlocal_unchecked(u.grid(), u.values());
    let mut g = gradient_values(u.grid(), u.values(), &cache, &p0);
    clamp_boundary(&mut g);
    let unorm = h1_gram(u.grid()).quadratic_form(u.values()).max(0.0).sqrt();
    dual_norm(u.grid(), &g) / unorm.max(1.0)
}

/// Newton at `eps = 0` from `u`.
pub fn correct_static(
    u: &RadialField,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<SolveReport> {
    newton_correct(u, &params.with_eps(0.0), config)
}

/// Warm-started solves along the schedule, followed by the optional static
/// correction and truncation re-solve.
pub fn run_continuation(
    params: &ModelParams,
    grid: Arc<RadialGrid>,
    config: &ContinuationConfig,
) -> Result<ContinuationReport> {
    params.validate()?;
    config.schedule.validate()?;
    config.solver.validate()?;
    let schedule = config.schedule.values();
    let mut per_eps: Vec<SolveReport> = Vec::with_capacity(schedule.len());
    for &eps in &schedule {
        let pe = params.with_eps(eps);
        let wrap = |e: CssError| CssError::Continuation {
            eps,
            source: Box::new(e),
        };
        let start = match per_eps.last() {
            Some(prev) => prev.solution.clone(),
            None => initial_guess(&pe, Arc::clone(&grid), config.seed).map_err(wrap)?,
        };
        let report = minimize_on_manifold(&start, &pe, &config.solver).map_err(wrap)?;
        per_eps.push(report);
    }
    let drift = per_eps
        .windows(2)
        .map(|w| norm24_distance(&grid, w[1].solution.values(), w[0].solution.values()))
        .collect();
    let mass_terms: Vec<f64> = per_eps
        .iter()
        .map(|r| r.params.eps * r.breakdown.b)
        .collect();
    let mass_term_monotone = mass_terms.windows(2).all(|w| w[1] < w[0]);
    let last = per_eps
        .last()
        .expect("schedule is nonempty")
        .solution
        .clone();
    let static_residual_raw = static_residual(&last, params);

    let (corrector, corrector_error) = if config.correct_static {
        match correct_static(&last, params, &config.solver) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let extrapolated = corrector.as_ref().map_or(last, |c| c.solution.clone());
    let mut report = ContinuationReport {
        params: *params,
        schedule,
        per_eps,
        drift,
        mass_terms,
        mass_term_monotone,
        static_residual_raw,
        corrector,
        corrector_error,
        extrapolated,
        truncation: None,
    };
    if config.certify_truncation {
        let p = report.extrapolated_params();
        report.truncation = Some(certify_truncation(
            &report.extrapolated,
            &p,
            &config.solver,
        )?);
    }
    Ok(report)
}

/// Same grid shape stretched to `2 R_max`.
fn doubled_grid(grid: &RadialGrid) -> Result<RadialGrid> {
    let cfg = |grading: f64| GridConfig {
        r_max: 2.0 * grid.r_max(),
        n: grid.intervals(),
        grading,
        tail_tol: grid.tail_tol(),
    };
    match grid.grading() {
        Grading::Uniform => RadialGrid::build(&cfg(1.0)),
        Grading::Power(k) => RadialGrid::build(&cfg(k)),
        Grading::Explicit => RadialGrid::from_nodes(
            grid.nodes().iter().map(|r| 2.0 * r).collect(),
            grid.tail_tol(),
        ),
    }
}

/// Re-solves `u` on the doubled domain and compares `Q = b/2`.
///
/// The field is continued past the tail window by the power law fitted
/// there and corrected by Newton at the same `eps`.
pub fn certify_truncation(
    u: &RadialField,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<TruncationCheck> {
    let grid = u.grid();
    let big = Arc::new(doubled_grid(grid)?);
    let r_max = grid.r_max();
    let fit = tail_fit(u)?;
    let pchip = Pchip::new(grid.nodes(), u.values())?;
    let values: Vec<f64> = big
        .nodes()
        .iter()
        .map(|&r| {
            if r <= fit.window.1 {
                pchip.eval(r).unwrap_or(0.0)
            } else {
                (fit.intercept + fit.slope * r.ln()).exp()
            }
        })
        .collect();
    let seed = RadialField::new(Arc::clone(&big), values)?;
    let wide = match newton_correct(&seed, params, config) {
        Ok(r) => r,
        Err(CssError::NonConvergence { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    let small = crate::functionals::breakdown(u, params)?;
    let charge = small.b / 2.0;
    let charge_doubled = wide.breakdown.b / 2.0;
    let relative_change = (charge_doubled - charge).abs() / charge.abs().max(f64::MIN_POSITIVE);
    Ok(TruncationCheck {
        r_max,
        r_max_doubled: big.r_max(),
        charge,
        charge_doubled,
        relative_change,
        energy: small.energy,
        energy_doubled: wide.breakdown.energy,
        residual_doubled: wide.relative_residual,
        charge_converged: relative_change < 0.01,
        certified: relative_change < 0.005 && wide.converged,
    })
}
