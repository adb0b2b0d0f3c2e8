//! Energy, perturbed functional, fibering constraint and the discrete
//! Euler-Lagrange residual.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CssError, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;
use crate::interp::Pchip;
use crate::linalg::Tridiagonal;
use crate::model::ModelParams;
use crate::nonlocal::{adjoint_suffix, nonlocal_unchecked, NonlocalCache};
use crate::norms::{grad_sq_values, lq_pow_values, stiffness_coefficients};

/// Fiber scan bracket in `t`.
pub const FIBER_T_MIN: f64 = 1e-6;
pub const FIBER_T_MAX: f64 = 1e6;
/// Log-spaced points of the coarse fiber scan.
pub const FIBER_SCAN_POINTS: usize = 481;
/// Fiber root acceptance, relative to `a + b + c + d` at the root.
pub const FIBER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBreakdown {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub energy: f64,
    pub i_eps: f64,
    pub j_eps: f64,
}

impl FunctionalBreakdown {
    pub fn from_scalars(a: f64, b: f64, c: f64, d: f64, params: &ModelParams) -> Self {
        let ModelParams { p, eps, alpha } = *params;
        let energy = a / 2.0 + c / 2.0 - d / (p + 1.0);
        let i_eps = energy + eps / 2.0 * b;
        let j_eps = alpha * a + eps * (alpha - 1.0) * b + (3.0 * alpha - 2.0) * c
            - ((p + 1.0) * alpha - 2.0) / (p + 1.0) * d;
        FunctionalBreakdown {
            a,
            b,
            c,
            d,
            energy,
            i_eps,
            j_eps,
        }
    }

    /// `a + eps b + 3c - d`.
    pub fn nehari(&self, params: &ModelParams) -> f64 {
        self.a + params.eps * self.b + 3.0 * self.c - self.d
    }

    /// `eps b + 2c - 2d/(p+1)`.
    pub fn pohozaev(&self, params: &ModelParams) -> f64 {
        params.eps * self.b + 2.0 * self.c - 2.0 * self.d / (params.p + 1.0)
    }

    pub fn scale_sum(&self) -> f64 {
        self.a + self.b + self.c + self.d
    }

    /// Exponent and coefficient pairs of `t -> J_eps(u_t)` under the exact
    /// scaling laws.
    fn fiber_terms(&self, params: &ModelParams) -> [(f64, f64); 4] {
        let ModelParams { p, eps, alpha } = *params;
        [
            (2.0 * alpha, alpha * self.a),
            (2.0 * alpha - 2.0, eps * (alpha - 1.0) * self.b),
            (6.0 * alpha - 4.0, (3.0 * alpha - 2.0) * self.c),
            (
                (p + 1.0) * alpha - 2.0,
                -((p + 1.0) * alpha - 2.0) / (p + 1.0) * self.d,
            ),
        ]
    }

    /// `J_eps(u_t)` from the scaling laws of `a, b, c, d`.
    pub fn fiber_j(&self, params: &ModelParams, t: f64) -> f64 {
        let lt = t.ln();
        self.fiber_terms(params)
            .iter()
            .map(|(e, k)| k * (e * lt).exp())
            .sum()
    }

    fn fiber_j_dlog(&self, params: &ModelParams, lt: f64) -> (f64, f64) {
        self.fiber_terms(params)
            .iter()
            .fold((0.0, 0.0), |(f, df), (e, k)| {
                let v = k * (e * lt).exp();
                (f + v, df + e * v)
            })
    }

    /// Scalars of the rescaled field `u_t` predicted by the scaling laws.
    pub fn scaled(&self, params: &ModelParams, t: f64) -> FunctionalBreakdown {
        let ModelParams { p, alpha, .. } = *params;
        FunctionalBreakdown::from_scalars(
            self.a * t.powf(2.0 * alpha),
            self.b * t.powf(2.0 * alpha - 2.0),
            self.c * t.powf(6.0 * alpha - 4.0),
            self.d * t.powf((p + 1.0) * alpha - 2.0),
            params,
        )
    }
}

pub fn breakdown(u: &RadialField, params: &ModelParams) -> Result<FunctionalBreakdown> {
    params.validate()?;
    u.ensure_admissible()?;
    let cache = nonlocal_unchecked(u.grid(), u.values());
    Ok(breakdown_with(u.grid(), u.values(), &cache, params))
}

pub(crate) fn breakdown_with(
    grid: &RadialGrid,
    u: &[f64],
    cache: &NonlocalCache,
    params: &ModelParams,
) -> FunctionalBreakdown {
    let a = grad_sq_values(grid, u);
    let b = lq_pow_values(grid, u, 2.0);
    let d = lq_pow_values(grid, u, params.p + 1.0);
    let c = magnetic_energy(grid, u, cache);
    FunctionalBreakdown::from_scalars(a, b, c, d, params)
}

/// `c = 2 pi int U u^2 r dr`.
pub(crate) fn magnetic_energy(grid: &RadialGrid, u: &[f64], cache: &NonlocalCache) -> f64 {
    grid.planar_mass()
        .iter()
        .zip(&cache.u_mag)
        .zip(u)
        .map(|((m, um), v)| m * um * v * v)
        .sum()
}

pub(crate) fn breakdown_unchecked(
    grid: &RadialGrid,
    u: &[f64],
    params: &ModelParams,
) -> FunctionalBreakdown {
    let cache = nonlocal_unchecked(grid, u);
    breakdown_with(grid, u, &cache, params)
}

/// `u_t(r) = t^alpha u(t r)`, resampled by monotone cubic interpolation and
/// zero past `R_max`.
pub fn scale(u: &RadialField, t: f64, params: &ModelParams) -> Result<RadialField> {
    let values = scale_values(u.grid(), u.values(), t, params.alpha)?;
    RadialField::new(Arc::clone(u.grid()), values)
}

pub(crate) fn scale_values(grid: &RadialGrid, u: &[f64], t: f64, alpha: f64) -> Result<Vec<f64>> {
    if !(t.is_finite() && t > 0.0) {
        return Err(CssError::Domain(format!(
            "scaling parameter must be positive (got {t})"
        )));
    }
    if t == 1.0 {
        return Ok(u.to_vec());
    }
    let pchip = Pchip::new(grid.nodes(), u)?;
    let ts: Vec<f64> = grid.nodes().iter().map(|r| t * r).collect();
    let amp = t.powf(alpha);
    Ok(pchip
        .eval_sorted_zero_extended(&ts)
        .into_iter()
        .map(|v| amp * v)
        .collect())
}

/// Number of sign changes of the scaling-law `t -> J_eps(u_t)` over
/// `points` log-spaced values of `[FIBER_T_MIN, FIBER_T_MAX]`.
pub fn fiber_sign_changes(b: &FunctionalBreakdown, params: &ModelParams, points: usize) -> usize {
    let (l0, l1) = (FIBER_T_MIN.ln(), FIBER_T_MAX.ln());
    let vals: Vec<f64> = (0..points)
        .map(|k| {
            b.fiber_j(
                params,
                (l0 + (l1 - l0) * k as f64 / (points - 1) as f64).exp(),
            )
        })
        .filter(|v| *v != 0.0)
        .collect();
    vals.windows(2)
        .filter(|w| w[0].signum() != w[1].signum())
        .count()
}

/// Root of the scaling law, bisection safeguarded Newton in `log t`.
fn fiber_root_law(b: &FunctionalBreakdown, params: &ModelParams) -> Result<f64> {
    let (l0, l1) = (FIBER_T_MIN.ln(), FIBER_T_MAX.ln());
    let n = FIBER_SCAN_POINTS;
    let at = |k: usize| l0 + (l1 - l0) * k as f64 / (n - 1) as f64;
    let mut bracket = None;
    let mut prev = b.fiber_j_dlog(params, at(0)).0;
    for k in 1..n {
        let cur = b.fiber_j_dlog(params, at(k)).0;
        if prev > 0.0 && cur <= 0.0 {
            bracket = Some((at(k - 1), at(k)));
            break;
        }
        prev = cur;
    }
    let (mut lo, mut hi) = bracket.ok_or(CssError::FiberNotBracketed {
        lo: FIBER_T_MIN,
        hi: FIBER_T_MAX,
    })?;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (f, df) = b.fiber_j_dlog(params, x);
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - f / df;
        let next = if df != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x.exp())
}

/// Fiber parameter `t*` with `J_eps(u_{t*}) = 0`.
///
/// The root of the exact scaling law seeds a safeguarded secant search on the
/// resampled field, so the returned `t*` zeroes the discrete constraint.
pub fn solve_fiber_t(u: &RadialField, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    u.ensure_admissible()?;
    fiber_root_values(u.grid(), u.values(), params)
}

pub(crate) fn fiber_root_values(grid: &RadialGrid, u: &[f64], params: &ModelParams) -> Result<f64> {
    fiber_root_inner(grid, u, params, false)
}

/// Fiber root for fields held at zero on the outer node.
pub(crate) fn fiber_root_clamped(
    grid: &RadialGrid,
    u: &[f64],
    params: &ModelParams,
) -> Result<f64> {
    fiber_root_inner(grid, u, params, true)
}

fn fiber_root_inner(
    grid: &RadialGrid,
    u: &[f64],
    params: &ModelParams,
    clamp: bool,
) -> Result<f64> {
    let b0 = breakdown_unchecked(grid, u, params);
    if !(b0.d > 0.0) {
        return Err(CssError::Precondition(
            "fiber root requires a nonzero field with d(u) > 0".into(),
        ));
    }
    let t_law = fiber_root_law(&b0, params)?;
    let psi = |lt: f64| -> Result<(f64, f64)> {
        let mut v = scale_values(grid, u, lt.exp(), params.alpha)?;
        if clamp {
            clamp_boundary(&mut v);
        }
        let s = breakdown_unchecked(grid, &v, params);
        Ok((s.j_eps, s.scale_sum()))
    };
    let converged = |(j, s): (f64, f64)| j.abs() <= FIBER_TOL * s;

    let x0 = t_law.ln();
    let f0 = psi(x0)?;
    if converged(f0) {
        return Ok(t_law);
    }
    // J is positive below the root and negative above it
    let mut step = 1e-6;
    let (mut lo, mut flo, mut hi, mut fhi) = (x0, f0.0, x0, f0.0);
    let mut found = false;
    for _ in 0..60 {
        if f0.0 > 0.0 {
            hi = x0 + step;
            fhi = psi(hi)?.0;
            if fhi < 0.0 {
                found = true;
                break;
            }
            lo = hi;
            flo = fhi;
        } else {
            lo = x0 - step;
            flo = psi(lo)?.0;
            if flo > 0.0 {
                found = true;
                break;
            }
            hi = lo;
            fhi = flo;
        }
        step *= 2.0;
    }
    if !found {
        return Err(CssError::FiberNotBracketed {
            lo: lo.min(hi).exp(),
            hi: lo.max(hi).exp(),
        });
    }
    // Illinois regula falsi
    let mut best = if flo.abs() < fhi.abs() { lo } else { hi };
    let mut side = 0i8;
    for _ in 0..200 {
        let x = (lo * fhi - hi * flo) / (fhi - flo);
        let fx = psi(x)?;
        best = x;
        if converged(fx) || (hi - lo).abs() < 1e-15 {
            break;
        }
        if fx.0 > 0.0 {
            lo = x;
            flo = fx.0;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            fhi = fx.0;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    Ok(best.exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidual {
    /// Nodal residual `g_j = <I_eps'(u), phi_j>` against the hat function
    /// of node `j`, zero at the outer node.
    pub field: RadialField,
    /// Dual norm `sqrt(g^T G^{-1} g)` with `G` the discrete `H^1` Gram
    /// matrix, so that a residual is measured in the energy space.
    pub norm: f64,
}

/// Discrete Euler-Lagrange residual of `I_eps`, tested against the hat
/// functions of every node below `R_max`. The outer node carries the
/// boundary condition `u(R_max) = 0` and its component is zero.
pub fn weak_residual(u: &RadialField, params: &ModelParams) -> Result<WeakResidual> {
    params.validate()?;
    u.ensure_admissible()?;
    let cache = nonlocal_unchecked(u.grid(), u.values());
    let mut g = gradient_values(u.grid(), u.values(), &cache, params);
    clamp_boundary(&mut g);
    let norm = dual_norm(u.grid(), &g);
    Ok(WeakResidual {
        field: RadialField::new(Arc::clone(u.grid()), g)?,
        norm,
    })
}

/// `(K u)_j` for the per-interval stiffness.
pub(crate) fn stiffness_apply(k: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for (e, ke) in k.iter().enumerate() {
        let flux = ke * (u[e + 1] - u[e]);
        out[e] -= flux;
        out[e + 1] += flux;
    }
    out
}

/// Gradient of `I_eps` with respect to the nodal values:
/// `K u + M (eps + U + V - |u|^{p-1}) u`.
pub(crate) fn gradient_values(
    grid: &RadialGrid,
    u: &[f64],
    cache: &NonlocalCache,
    params: &ModelParams,
) -> Vec<f64> {
    let k = stiffness_coefficients(grid);
    let mut g = stiffness_apply(&k, u);
    let m = grid.planar_mass();
    let pm1 = params.p - 1.0;
    for i in 0..u.len() {
        let pot = params.eps + cache.u_mag[i] + cache.v[i] - u[i].abs().powf(pm1);
        g[i] += m[i] * pot * u[i];
    }
    g
}

/// Hessian of `I_eps` applied to `v`.
pub(crate) fn hessian_apply(
    grid: &RadialGrid,
    u: &[f64],
    cache: &NonlocalCache,
    params: &ModelParams,
    k: &[f64],
    v: &[f64],
) -> Vec<f64> {
    let r = grid.nodes();
    let n = u.len();
    let density: Vec<f64> = (0..n).map(|i| r[i] * u[i] * v[i]).collect();
    let dh = crate::grid::prefix_trapezoid(r, &density);
    let mut du = vec![0.0; n];
    let mut dfhat = vec![0.0; n];
    for i in 1..n {
        du[i] = 2.0 * cache.h[i] * dh[i] / (r[i] * r[i]);
        dfhat[i] = (dh[i] * u[i] * u[i] + 2.0 * cache.h[i] * u[i] * v[i]) / r[i];
    }
    let dv = adjoint_suffix(grid, &dfhat);
    let mut out = stiffness_apply(k, v);
    let m = grid.planar_mass();
    let pm1 = params.p - 1.0;
    for i in 0..n {
        let pot = params.eps + cache.u_mag[i] + cache.v[i] - params.p * u[i].abs().powf(pm1);
        out[i] += m[i] * (pot * v[i] + (du[i] + dv[i]) * u[i]);
    }
    out
}

/// `K + M diag(shift)`, symmetric positive definite when `shift >= 0` and
/// some node carries positive shift.
pub(crate) fn shifted_stiffness(grid: &RadialGrid, shift: &[f64]) -> Tridiagonal {
    let k = stiffness_coefficients(grid);
    let m = grid.planar_mass();
    let n = grid.len();
    let mut diag: Vec<f64> = (0..n).map(|i| m[i] * shift[i]).collect();
    for (e, ke) in k.iter().enumerate() {
        diag[e] += ke;
        diag[e + 1] += ke;
    }
    Tridiagonal {
        diag,
        off: k.iter().map(|ke| -ke).collect(),
    }
}

/// Discrete `H^1` Gram matrix `K + M`. The first row carries no mass (the
/// origin has zero planar measure) but is coupled through the stiffness.
pub(crate) fn h1_gram(grid: &RadialGrid) -> Tridiagonal {
    shifted_stiffness(grid, &vec![1.0; grid.len()])
}

/// Replaces the outer row of `a` by the identity.
pub(crate) fn dirichlet(mut a: Tridiagonal) -> Tridiagonal {
    let n = a.diag.len();
    a.diag[n - 1] = 1.0;
    a.off[n - 2] = 0.0;
    a
}

pub(crate) fn clamp_boundary(u: &mut [f64]) {
    if let Some(last) = u.last_mut() {
        *last = 0.0;
    }
}

/// Dual norm over the nodes below `R_max`; `g` must vanish at the outer node.
pub(crate) fn dual_norm(grid: &RadialGrid, g: &[f64]) -> f64 {
    let gram = dirichlet(h1_gram(grid));
    let z = gram.solve(g);
    crate::linalg::dot(g, &z).max(0.0).sqrt()
}

/// `sqrt(a + b)`.
pub fn h1_norm(u: &RadialField) -> f64 {
    h1_gram(u.grid()).quadratic_form(u.values()).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid::GridConfig;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::build(&GridConfig::default()).unwrap())
    }

    fn gaussian() -> RadialField {
        RadialField::from_fn(grid(), |r| (-r * r).exp()).unwrap()
    }

    #[test]
    fn zero_field_breakdown() {
        let p = ModelParams::new(5.0, 1.0, None).unwrap();
        let b = breakdown(&RadialField::zeros(grid()), &p).unwrap();
        assert_eq!(b, FunctionalBreakdown::from_scalars(0.0, 0.0, 0.0, 0.0, &p));
        assert_eq!((b.energy, b.i_eps, b.j_eps), (0.0, 0.0, 0.0));
    }

    #[test]
    fn gaussian_scalars() {
        let p = ModelParams::new(5.0, 1.0, None).unwrap();
        let b = breakdown(&gaussian(), &p).unwrap();
        assert!((b.a / PI - 1.0).abs() < 1e-5);
        assert!((b.b / (PI / 2.0) - 1.0).abs() < 1e-8);
        assert!((b.d / (PI / 6.0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn j_is_alpha_nehari_minus_pohozaev() {
        let p = ModelParams::new(4.2, 0.7, Some(1.3)).unwrap();
        let b = breakdown(&gaussian().map(|v| 1.7 * v).unwrap(), &p).unwrap();
        let combo = p.alpha * b.nehari(&p) - b.pohozaev(&p);
        assert!((combo - b.j_eps).abs() <= 1e-14 * b.scale_sum());
    }

    #[test]
    fn scale_identity_and_domain() {
        let p = ModelParams::new(5.0, 1.0, None).unwrap();
        let u = gaussian();
        assert_eq!(scale(&u, 1.0, &p).unwrap(), u);
        assert!(matches!(scale(&u, 0.0, &p), Err(CssError::Domain(_))));
        assert!(matches!(scale(&u, -2.0, &p), Err(CssError::Domain(_))));
    }

    #[test]
    fn fiber_root_zeroes_discrete_constraint() {
        let p = ModelParams::new(5.0, 1.0, Some(1.5)).unwrap();
        let u = gaussian();
        let t = solve_fiber_t(&u, &p).unwrap();
        let b = breakdown(&scale(&u, t, &p).unwrap(), &p).unwrap();
        assert!(b.j_eps.abs() <= 1e-10 * b.scale_sum(), "{b:?}");
        let again = solve_fiber_t(&scale(&u, t, &p).unwrap(), &p).unwrap();
        assert!((again - 1.0).abs() < 1e-8, "{again}");
    }

    #[test]
    fn fiber_root_rejects_zero_field() {
        let p = ModelParams::new(5.0, 1.0, None).unwrap();
        assert!(solve_fiber_t(&RadialField::zeros(grid()), &p).is_err());
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let g = Arc::new(RadialGrid::build(&GridConfig::uniform(12.0, 300)).unwrap());
        let p = ModelParams::new(5.0, 0.5, None).unwrap();
        let u: Vec<f64> = g
            .nodes()
            .iter()
            .map(|r| 1.4 * (-r * r / 3.0).exp())
            .collect();
        let v: Vec<f64> = g
            .nodes()
            .iter()
            .map(|r| (r * 0.9).cos() * (-r / 4.0).exp())
            .collect();
        let cache = nonlocal_unchecked(&g, &u);
        let k = stiffness_coefficients(&g);
        let hv = hessian_apply(&g, &u, &cache, &p, &k, &v);
        let tau = 1e-6;
        let shifted = |s: f64| {
            let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + s * b).collect();
            gradient_values(&g, &w, &nonlocal_unchecked(&g, &w), &p)
        };
        let (gp, gm) = (shifted(tau), shifted(-tau));
        let scale = hv.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        for i in 0..u.len() {
            let fd = (gp[i] - gm[i]) / (2.0 * tau);
            assert!(
                (fd - hv[i]).abs() < 1e-6 * scale,
                "node {i}: {fd} vs {}",
                hv[i]
            );
        }
    }
}
