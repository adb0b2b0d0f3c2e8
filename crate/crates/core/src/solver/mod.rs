//! Minimization of `I_eps` over the fibering manifold and the continuation
//! in `eps` towards the static problem.

mod continuation;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use continuation::{
    certify_truncation, correct_static, run_continuation, ContinuationConfig, ContinuationReport,
    Schedule, TruncationCheck,
};

use crate::error::{CssError, Result};
use crate::field::RadialField;
use crate::functionals::{
    breakdown_unchecked, breakdown_with, clamp_boundary, dirichlet, dual_norm, fiber_root_clamped,
    gradient_values, h1_gram, hessian_apply, scale_values, shifted_stiffness, FunctionalBreakdown,
    FIBER_T_MAX,
};
use crate::grid::RadialGrid;
use crate::linalg::{dot, gmres};
use crate::model::ModelParams;
use crate::nonlocal::nonlocal_unchecked;
use crate::norms::stiffness_coefficients;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Convergence threshold on the relative residual
    /// `||g||_* / max(1, ||u||_{H^1})`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative residual below which descent hands over to Newton.
    pub newton_switch: f64,
    pub armijo_c: f64,
    pub newton_max: usize,
    pub gmres_restart: usize,
    pub gmres_max: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 5000,
            newton_switch: 1e-3,
            armijo_c: 1e-4,
            newton_max: 40,
            gmres_restart: 80,
            gmres_max: 800,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CssError::Config(format!(
                "tolerance must lie in (0, 1) (got {})",
                self.tol
            )));
        }
        if self.max_iter == 0 || self.gmres_restart == 0 {
            return Err(CssError::Config("iteration limits must be positive".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 0.5) {
            return Err(CssError::Config(format!(
                "Armijo constant must lie in (0, 0.5) (got {})",
                self.armijo_c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Descent,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    pub i_eps: f64,
    /// Accepted step length leading to this iterate, zero for the first.
    pub step: f64,
    /// Absolute dual residual norm at this iterate.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: RadialField,
    pub params: ModelParams,
    /// `I_eps` at the solution, the discrete `m_eps`.
    pub m_eps: f64,
    pub iterations: usize,
    pub residual_norm: f64,
    pub relative_residual: f64,
    pub converged: bool,
    pub positive: bool,
    pub breakdown: FunctionalBreakdown,
    pub history: Vec<IterationRecord>,
}

impl SolveReport {
    /// `I_eps` is nonincreasing across descent iterates.
    pub fn descent_monotone(&self) -> bool {
        let d: Vec<f64> = self
            .history
            .iter()
            .filter(|h| h.phase == Phase::Descent)
            .map(|h| h.i_eps)
            .collect();
        d.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Gaussian bump `A exp(-r^2/w^2)` with width drawn from the seed and the
/// amplitude doubled until the fiber constraint turns negative at large `t`.
pub fn initial_guess(
    params: &ModelParams,
    grid: Arc<RadialGrid>,
    seed: u64,
) -> Result<RadialField> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width: f64 = rng.gen_range(2.0..3.0);
    let mut amp = 1.0;
    for _ in 0..=60 {
        let u = RadialField::from_fn(Arc::clone(&grid), |r| {
            amp * (-(r * r) / (width * width)).exp()
        })?;
        let b = breakdown_unchecked(&grid, u.values(), params);
        if b.d > 0.0 && b.fiber_j(params, FIBER_T_MAX) < 0.0 {
            return Ok(u);
        }
        amp *= 2.0;
    }
    Err(CssError::Config(
        "initial amplitude search exceeded 60 doublings".into(),
    ))
}

struct State {
    u: Vec<f64>,
    breakdown: FunctionalBreakdown,
    gradient: Vec<f64>,
    residual: f64,
    relative: f64,
    shift: Vec<f64>,
}

fn evaluate(grid: &RadialGrid, u: Vec<f64>, params: &ModelParams) -> State {
    let cache = nonlocal_unchecked(grid, &u);
    let breakdown = breakdown_with(grid, &u, &cache, params);
    let mut gradient = gradient_values(grid, &u, &cache, params);
    clamp_boundary(&mut gradient);
    let residual = dual_norm(grid, &gradient);
    let unorm = h1_gram(grid).quadratic_form(&u).max(0.0).sqrt();
    let shift = (0..u.len())
        .map(|i| params.eps + cache.u_mag[i] + cache.v[i])
        .collect();
    State {
        relative: residual / unorm.max(1.0),
        u,
        breakdown,
        gradient,
        residual,
        shift,
    }
}

/// Rescales onto the manifold, keeping `u(R_max) = 0`.
fn project(grid: &RadialGrid, u: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    let mut u = u.to_vec();
    clamp_boundary(&mut u);
    let t = fiber_root_clamped(grid, &u, params)?;
    let mut out = scale_values(grid, &u, t, params.alpha)?;
    clamp_boundary(&mut out);
    Ok(out)
}

fn absolute_clamped(u: &RadialField) -> Vec<f64> {
    let mut v = u.abs().into_values();
    clamp_boundary(&mut v);
    v
}

struct Run<'a> {
    grid: &'a Arc<RadialGrid>,
    params: ModelParams,
    config: SolverConfig,
    history: Vec<IterationRecord>,
    best: Option<(f64, Vec<f64>)>,
}

impl Run<'_> {
    fn record(
        &mut self,
        phase: Phase,
        step: f64,
        s: &State,
        observer: &mut dyn FnMut(&RadialField),
    ) -> Result<()> {
        self.history.push(IterationRecord {
            iteration: self.history.len(),
            phase,
            i_eps: s.breakdown.i_eps,
            step,
            residual: s.residual,
        });
        if self.best.as_ref().is_none_or(|(r, _)| s.relative < *r) {
            self.best = Some((s.relative, s.u.clone()));
        }
        observer(&RadialField::new(Arc::clone(self.grid), s.u.clone())?);
        Ok(())
    }

    fn finish(self, s: State, converged: bool) -> Result<SolveReport> {
        let report = |values: Vec<f64>, history: Vec<IterationRecord>| -> Result<SolveReport> {
            let st = evaluate(self.grid, values, &self.params);
            let solution = RadialField::new(Arc::clone(self.grid), st.u)?;
            Ok(SolveReport {
                m_eps: st.breakdown.i_eps,
                iterations: history.len(),
                residual_norm: st.residual,
                relative_residual: st.relative,
                converged,
                positive: solution.is_positive_interior(),
                breakdown: st.breakdown,
                solution,
                params: self.params,
                history,
            })
        };
        if converged {
            return report(s.u, self.history);
        }
        let (_, best) = self.best.clone().unwrap_or((s.relative, s.u));
        let iterations = self.history.len();
        let best = report(best, self.history)?;
        Err(CssError::NonConvergence {
            iterations,
            residual: best.residual_norm,
            best: Box::new(best),
        })
    }

    /// Damped Newton-Krylov iterations from `s`. Returns the final state
    /// and whether the tolerance was met.
    fn newton(
        &mut self,
        mut s: State,
        observer: &mut dyn FnMut(&RadialField),
    ) -> Result<(State, bool)> {
        let k = stiffness_coefficients(self.grid);
        for _ in 0..self.config.newton_max {
            if s.relative <= self.config.tol {
                return Ok((s, true));
            }
            let cache = nonlocal_unchecked(self.grid, &s.u);
            let pre = dirichlet(shifted_stiffness(self.grid, &s.shift));
            let rhs: Vec<f64> = s.gradient.iter().map(|g| -g).collect();
            let n = s.u.len();
            let (dx, _) = gmres(
                |v| {
                    let mut w = v.to_vec();
                    w[n - 1] = 0.0;
                    let mut out = hessian_apply(self.grid, &s.u, &cache, &self.params, &k, &w);
                    out[n - 1] = v[n - 1];
                    out
                },
                |v| pre.solve(v),
                &rhs,
                1e-11,
                self.config.gmres_restart,
                self.config.gmres_max,
            );
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..12 {
                let w: Vec<f64> =
                    s.u.iter()
                        .zip(&dx)
                        .map(|(u, d)| (u + lambda * d).abs())
                        .collect();
                let trial = evaluate(self.grid, w, &self.params);
                if trial.residual.is_finite() && trial.residual < s.residual {
                    accepted = Some(trial);
                    break;
                }
                lambda *= 0.5;
            }
            match accepted {
                Some(next) => {
                    self.record(Phase::Newton, lambda, &next, observer)?;
                    s = next;
                }
                None => break,
            }
        }
        let ok = s.relative <= self.config.tol;
        Ok((s, ok))
    }
}

/// Minimizes `I_eps(u_{t(u)})` from `u0`; see [`minimize_on_manifold_observed`].
pub fn minimize_on_manifold(
    u0: &RadialField,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<SolveReport> {
    minimize_on_manifold_observed(u0, params, config, &mut |_| {})
}

/// Fibering-projected preconditioned gradient descent with Armijo
/// backtracking, finished by Newton-Krylov on the Euler-Lagrange equation.
///
/// Each descent trial is `|u - s P^{-1} g|` pushed back onto the manifold,
/// with `P = K + M (eps + U + V)` the linear part of the equation at the
/// current iterate. Iterates vanish at `R_max`, a homogeneous Dirichlet
/// condition standing in for decay at infinity. `observer` sees every
/// accepted iterate.
pub fn minimize_on_manifold_observed(
    u0: &RadialField,
    params: &ModelParams,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&RadialField),
) -> Result<SolveReport> {
    params.validate()?;
    config.validate()?;
    if !(params.eps > 0.0) {
        return Err(CssError::Precondition(
            "manifold minimization requires eps > 0".into(),
        ));
    }
    u0.ensure_admissible()?;
    let grid = u0.grid();
    let start = project(grid, &absolute_clamped(u0), params)?;
    let mut run = Run {
        grid,
        params: *params,
        config: *config,
        history: Vec::new(),
        best: None,
    };
    let mut s = evaluate(grid, start, params);
    run.record(Phase::Descent, 0.0, &s, observer)?;
    let mut step = 1.0;
    while run.history.len() < config.max_iter {
        if s.relative <= config.tol {
            return run.finish(s, true);
        }
        if s.relative <= config.newton_switch {
            break;
        }
        let pre = dirichlet(shifted_stiffness(grid, &s.shift));
        let z = pre.solve(&s.gradient);
        let slope = dot(&s.gradient, &z);
        let mut accepted = None;
        while step > 1e-10 {
            let w: Vec<f64> =
                s.u.iter()
                    .zip(&z)
                    .map(|(u, d)| (u - step * d).abs())
                    .collect();
            if let Ok(w) = project(grid, &w, params) {
                let trial = evaluate(grid, w, params);
                if trial.breakdown.i_eps <= s.breakdown.i_eps - config.armijo_c * step * slope {
                    accepted = Some(trial);
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some(next) => {
                run.record(Phase::Descent, step, &next, observer)?;
                s = next;
                step = (step * 1.5).min(1.0);
            }
            None => break,
        }
    }
    let (s, ok) = run.newton(s, observer)?;
    run.finish(s, ok)
}

/// Newton-Krylov on the Euler-Lagrange equation of `I_eps` from `u0`, with
/// no manifold projection. Valid for every `eps >= 0`. Like the descent,
/// it holds `u(R_max) = 0`.
pub fn newton_correct(
    u0: &RadialField,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<SolveReport> {
    params.validate()?;
    config.validate()?;
    u0.ensure_admissible()?;
    let grid = u0.grid();
    let mut run = Run {
        grid,
        params: *params,
        config: *config,
        history: Vec::new(),
        best: None,
    };
    let s = evaluate(grid, absolute_clamped(u0), params);
    let observer: &mut dyn FnMut(&RadialField) = &mut |_| {};
    run.record(Phase::Newton, 0.0, &s, observer)?;
    let (s, ok) = run.newton(s, observer)?;
    run.finish(s, ok)
}
