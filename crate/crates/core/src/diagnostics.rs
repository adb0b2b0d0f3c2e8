//! Certification of candidate profiles: integral identities, energy sign,
//! algebraic decay and charge.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CssError, Result};
use crate::field::RadialField;
use crate::functionals::{breakdown_with, FunctionalBreakdown};
use crate::grid::{Grading, GridConfig, RadialGrid};
use crate::interp::Pchip;
use crate::model::ModelParams;
use crate::nonlocal::{nonlocal_unchecked, NonlocalCache};
use crate::norms::{check_quartic_bound, QuarticBound};
use crate::solver::TruncationCheck;

/// Barrier slack subtracted from the measured disk charge exponent.
pub const BARRIER_DELTA: f64 = 0.01;
/// Identity residual that certifies a static candidate.
pub const STATIC_CERT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub eps: f64,
    /// `a + eps b + 3c - d`.
    pub nehari: f64,
    /// `eps b + 2c - 2d/(p+1)`.
    pub pohozaev: f64,
    pub nehari_res: f64,
    pub pohozaev_res: f64,
    /// `|alpha N - P|`, equal to `|J_eps|`.
    pub combo_res: f64,
    pub j_res: f64,
    pub energy_decomp_res: f64,
    pub quartic_bound: QuarticBound,
    pub fubini_res: f64,
    pub breakdown: FunctionalBreakdown,
}

/// Energy on the constraint set written as two nonnegative pieces.
pub fn energy_decomposition(b: &FunctionalBreakdown, params: &ModelParams) -> ([f64; 2], [f64; 2]) {
    let k = params.fiber_exponent();
    let alpha = params.alpha;
    let coef = [0.5 - alpha / k, 0.5 - (3.0 * alpha - 2.0) / k];
    (coef, [coef[0] * b.a, coef[1] * b.c])
}

pub fn identity_report(u: &RadialField, params: &ModelParams) -> Result<IdentityReport> {
    params.validate()?;
    u.ensure_admissible()?;
    let cache = nonlocal_unchecked(u.grid(), u.values());
    let b = breakdown_with(u.grid(), u.values(), &cache, params);
    let eps = params.eps;
    let nehari = b.nehari(params);
    let pohozaev = b.pohozaev(params);
    let q = params.p + 1.0;
    let (_, parts) = energy_decomposition(&b, params);
    Ok(IdentityReport {
        eps,
        nehari,
        pohozaev,
        nehari_res: nehari.abs() / (1.0 + b.a + eps * b.b + 3.0 * b.c + b.d),
        pohozaev_res: pohozaev.abs() / (1.0 + eps * b.b + 2.0 * b.c + 2.0 * b.d / q),
        combo_res: (params.alpha * nehari - pohozaev).abs(),
        j_res: b.j_eps.abs() / (1.0 + b.scale_sum()),
        energy_decomp_res: (b.energy - parts[0] - parts[1]).abs() / (1.0 + b.energy.abs()),
        quartic_bound: check_quartic_bound(u)?,
        fubini_res: fubini_from(u, &cache, b.c),
        breakdown: b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPositivity {
    pub energy: f64,
    pub positive: bool,
    pub coefficients: [f64; 2],
    pub coefficients_positive: bool,
    pub decomposition: [f64; 2],
    /// `|E - sum(decomposition)| / |E|`.
    pub mismatch: f64,
}

/// Energy sign of a static candidate. The candidate must satisfy both
/// static identities to [`STATIC_CERT_TOL`].
pub fn energy_positivity(u: &RadialField, params: &ModelParams) -> Result<EnergyPositivity> {
    let p0 = params.with_eps(0.0);
    let ids = identity_report(u, &p0)?;
    if !(ids.nehari_res <= STATIC_CERT_TOL && ids.pohozaev_res <= STATIC_CERT_TOL) {
        return Err(CssError::Precondition(format!(
            "field is not a certified static candidate (nehari {:.2e}, pohozaev {:.2e})",
            ids.nehari_res, ids.pohozaev_res
        )));
    }
    let b = ids.breakdown;
    let (coefficients, decomposition) = energy_decomposition(&b, &p0);
    let sum = decomposition[0] + decomposition[1];
    Ok(EnergyPositivity {
        energy: b.energy,
        positive: b.energy > 0.0,
        coefficients,
        coefficients_positive: coefficients.iter().all(|&c| c > 0.0),
        decomposition,
        mismatch: (b.energy - sum).abs() / b.energy.abs().max(f64::MIN_POSITIVE),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Least squares line through `(log x, log y)`.
fn loglog(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some((slope, my - slope * mx, r2))
}

fn fit_window(grid: &RadialGrid, y: &[f64], u: &[f64]) -> Result<LogLogFit> {
    let win = grid.tail_window();
    let r = grid.nodes();
    let (r_lo, r_hi) = (
        r[win.start.min(r.len() - 1)],
        r[win.end.saturating_sub(1).max(win.start).min(r.len() - 1)],
    );
    let no_tail = CssError::NoTail { r_lo, r_hi };
    if u[win.clone()].iter().all(|&v| v == 0.0) {
        return Err(no_tail);
    }
    let (slope, intercept, r_squared) = loglog(&r[win.clone()], &y[win.clone()]).ok_or(no_tail)?;
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
        window: (r_lo, r_hi),
        points: win.len(),
    })
}

/// `d log u / d log r` over the tail window.
pub fn tail_fit(u: &RadialField) -> Result<LogLogFit> {
    fit_window(u.grid(), u.values(), u.values())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    /// Radius `R_sigma` at which the disk charge is measured.
    pub r_sigma: f64,
    /// `||u||_{L^2(B_{R_sigma})}^4`.
    pub sigma_prime: f64,
    /// `sigma' / (16 pi^2) - delta`.
    pub gamma_barrier: f64,
    /// Barrier comparison `u <= w` on the window, when `gamma > 1`.
    pub barrier_holds: Option<bool>,
    pub charge: f64,
    /// Outcome of the doubled-domain re-solve, when one was run.
    pub charge_converged: Option<bool>,
    /// `-max(1/2, h_inf)`; informational.
    pub predicted_slope: f64,
}

/// `Q = b/2`.
pub fn charge(u: &RadialField) -> f64 {
    let m = u.grid().planar_mass();
    0.5 * m
        .iter()
        .zip(u.values())
        .map(|(m, v)| m * v * v)
        .sum::<f64>()
}

pub fn decay_and_charge(
    u: &RadialField,
    params: &ModelParams,
    truncation: Option<&TruncationCheck>,
) -> Result<DecayFit> {
    params.validate()?;
    u.ensure_admissible()?;
    let fit = tail_fit(u)?;
    let grid = u.grid();
    let cache = nonlocal_unchecked(grid, u.values());
    let win = grid.tail_window();
    let i_sigma = win.start;
    let r_sigma = grid.nodes()[i_sigma];
    // 2 pi int_0^R u^2 r dr = 4 pi h(R)
    let disk = 4.0 * PI * cache.h[i_sigma];
    let sigma_prime = disk * disk;
    let gamma_barrier = sigma_prime / (16.0 * PI * PI) - BARRIER_DELTA;
    let barrier_holds = (gamma_barrier > 1.0).then(|| {
        let u0 = u.values()[i_sigma];
        let s = gamma_barrier.sqrt();
        win.clone().all(|i| {
            let w = u0 * (r_sigma / grid.nodes()[i]).powf(s);
            u.values()[i] <= w * (1.0 + 1e-6)
        })
    });
    Ok(DecayFit {
        slope: fit.slope,
        window: fit.window,
        r_squared: fit.r_squared,
        r_sigma,
        sigma_prime,
        gamma_barrier,
        barrier_holds,
        charge: charge(u),
        charge_converged: truncation.map(|t| t.charge_converged),
        predicted_slope: -cache.h_inf.max(0.5),
    })
}

fn fubini_from(u: &RadialField, cache: &NonlocalCache, c: f64) -> f64 {
    let m = u.grid().planar_mass();
    let lhs: f64 = m
        .iter()
        .zip(&cache.v)
        .zip(u.values())
        .map(|((m, v), x)| m * v * x * x)
        .sum();
    (lhs - 2.0 * c).abs() / (1.0 + 2.0 * c)
}

/// `|int V u^2 - 2c| / (1 + 2c)`.
pub fn fubini_check(u: &RadialField) -> Result<f64> {
    u.ensure_admissible()?;
    let cache = nonlocal_unchecked(u.grid(), u.values());
    let c = crate::functionals::magnetic_energy(u.grid(), u.values(), &cache);
    Ok(fubini_from(u, &cache, c))
}

/// `u` resampled by monotone cubic interpolation onto `grid`, zero past
/// its own `R_max`.
pub fn resample(u: &RadialField, grid: Arc<RadialGrid>) -> Result<RadialField> {
    let pchip = Pchip::new(u.grid().nodes(), u.values())?;
    let values = pchip.eval_sorted_zero_extended(grid.nodes());
    RadialField::new(grid, values)
}

/// The same grid family with `factor` times as many intervals.
pub fn refined_grid(grid: &RadialGrid, factor: usize) -> Result<RadialGrid> {
    let cfg = |grading: f64| GridConfig {
        r_max: grid.r_max(),
        n: grid.intervals() * factor,
        grading,
        tail_tol: grid.tail_tol(),
    };
    match grid.grading() {
        Grading::Uniform => RadialGrid::build(&cfg(1.0)),
        Grading::Power(k) => RadialGrid::build(&cfg(k)),
        Grading::Explicit => Err(CssError::Config("explicit grids cannot be refined".into())),
    }
}
