//! The nonlocal coefficients of the radial equation.
//!
//! With `h(r) = 1/2 int_0^r s u(s)^2 ds`, the equation carries the magnetic
//! term `U = h^2/r^2` and the electric term `V(r) = int_r^inf h u^2 / s ds`.
//! `h` is a running prefix trapezoid. `V` is the running suffix sum that is
//! the exact discrete adjoint of that prefix rule, so that
//! `sum_i m_i V_i u_i^2 = 2 sum_i m_i U_i u_i^2` holds to rounding and `V`
//! is precisely the coefficient produced by differentiating the discrete
//! magnetic energy. The adjoint sum differs from a plain suffix trapezoid by
//! a second-order correction proportional to the second difference of the
//! nodes, and vanishes identically on uniform interior nodes.

use crate::error::Result;
use crate::field::RadialField;
use crate::grid::{prefix_trapezoid, RadialGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalCache {
    pub h: Vec<f64>,
    /// `U_i = h_i^2 / r_i^2`, with `U_0 = 0`.
    pub u_mag: Vec<f64>,
    pub v: Vec<f64>,
    pub h_inf: f64,
    /// `(1/2pi) int h u^2 / |x|^2 dx`, computed independently of `v`.
    pub v_zero: f64,
}

pub fn compute_nonlocal(u: &RadialField) -> Result<NonlocalCache> {
    u.ensure_admissible()?;
    Ok(nonlocal_unchecked(u.grid(), u.values()))
}

pub(crate) fn nonlocal_unchecked(grid: &RadialGrid, u: &[f64]) -> NonlocalCache {
    let r = grid.nodes();
    let density: Vec<f64> = r.iter().zip(u).map(|(r, u)| 0.5 * r * u * u).collect();
    let h = prefix_trapezoid(r, &density);
    let mut u_mag = vec![0.0; u.len()];
    let mut fhat = vec![0.0; u.len()];
    for i in 1..u.len() {
        u_mag[i] = h[i] * h[i] / (r[i] * r[i]);
        fhat[i] = h[i] * u[i] * u[i] / r[i];
    }
    let v = adjoint_suffix(grid, &fhat);
    // int_0^R (h u^2 / r^2) r dr, a separate pass over the same integrand
    let v_zero = grid
        .weights()
        .iter()
        .zip(&h)
        .zip(u)
        .zip(r)
        .filter(|(_, r)| **r > 0.0)
        .map(|(((w, h), u), r)| w * (h * u * u / (r * r)) * r)
        .sum();
    let h_inf = h[h.len() - 1];
    NonlocalCache {
        h,
        u_mag,
        v,
        h_inf,
        v_zero,
    }
}

/// Transpose of the prefix trapezoid, scaled by the node weights:
/// `out_j = sum_{i>j} w_i f_i + (r_j - r_{j-1})/2 f_j`.
pub(crate) fn adjoint_suffix(grid: &RadialGrid, f: &[f64]) -> Vec<f64> {
    let r = grid.nodes();
    let w = grid.weights();
    let n = f.len();
    let mut out = vec![0.0; n];
    let mut tail = 0.0;
    for j in (0..n).rev() {
        let own = if j == 0 {
            0.0
        } else {
            0.5 * (r[j] - r[j - 1]) * f[j]
        };
        out[j] = tail + own;
        tail += w[j] * f[j];
    }
    out
}
