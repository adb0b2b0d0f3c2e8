use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{CssError, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;
use crate::nonlocal::compute_nonlocal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    /// `||grad u||_2`.
    pub grad: f64,
    /// `(q, ||u||_q)` in the order requested.
    pub lq: Vec<(f64, f64)>,
    /// `||grad u||_2 + ||u||_4`.
    pub norm24: f64,
}

/// Per-interval stiffness `2 pi rbar_e / dr_e`. The gradient energy of the
/// piecewise-linear interpolant is `sum_e k_e (u_{e+1} - u_e)^2`.
pub(crate) fn stiffness_coefficients(grid: &RadialGrid) -> Vec<f64> {
    let r = grid.nodes();
    (0..grid.intervals())
        .map(|e| PI * (r[e] + r[e + 1]) / (r[e + 1] - r[e]))
        .collect()
}

/// `||grad u||_2^2 = 2 pi int u'(r)^2 r dr` with the slope taken per
/// interval, which is second order at the interval midpoints.
pub fn grad_sq(u: &RadialField) -> f64 {
    grad_sq_values(u.grid(), u.values())
}

pub(crate) fn grad_sq_values(grid: &RadialGrid, u: &[f64]) -> f64 {
    stiffness_coefficients(grid)
        .iter()
        .enumerate()
        .map(|(e, k)| {
            let du = u[e + 1] - u[e];
            k * du * du
        })
        .sum()
}

/// `||u||_q^q = 2 pi int |u|^q r dr`.
pub fn lq_pow(u: &RadialField, q: f64) -> f64 {
    lq_pow_values(u.grid(), u.values(), q)
}

pub(crate) fn lq_pow_values(grid: &RadialGrid, u: &[f64], q: f64) -> f64 {
    let r = grid.nodes();
    grid.weights()
        .iter()
        .zip(r)
        .zip(u)
        .map(|((w, r), u)| {
            let a = u.abs();
            let p = if q == 2.0 { a * a } else { a.powf(q) };
            2.0 * PI * w * r * p
        })
        .sum()
}

pub fn norms(u: &RadialField, qs: &[f64]) -> Result<Norms> {
    if let Some(q) = qs.iter().find(|&&q| !(q >= 1.0)) {
        return Err(CssError::Config(format!(
            "L^q exponent must be >= 1 (got {q})"
        )));
    }
    let grad = grad_sq(u).sqrt();
    let lq = qs
        .iter()
        .map(|&q| (q, lq_pow(u, q).powf(1.0 / q)))
        .collect();
    let l4 = lq_pow(u, 4.0).powf(0.25);
    Ok(Norms {
        grad,
        lq,
        norm24: grad + l4,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `||u||_4^4 <= 4 ||grad u||_2 (int h^2 u^2 / |x|^2 dx)^{1/2}`.
pub fn check_quartic_bound(u: &RadialField) -> Result<QuarticBound> {
    let cache = compute_nonlocal(u)?;
    let mass = u.grid().planar_mass();
    let c: f64 = mass
        .iter()
        .zip(&cache.u_mag)
        .zip(u.values())
        .map(|((m, um), v)| m * um * v * v)
        .sum();
    let lhs = lq_pow(u, 4.0);
    let rhs = 4.0 * grad_sq(u).sqrt() * c.sqrt();
    Ok(QuarticBound {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-8),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::GridConfig;

    fn default_grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::build(&GridConfig::default()).unwrap())
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let n = norms(&RadialField::zeros(default_grid()), &[2.0, 6.0]).unwrap();
        assert_eq!(n.grad, 0.0);
        assert!(n.lq.iter().all(|&(_, v)| v == 0.0));
        assert_eq!(n.norm24, 0.0);
        let ineq = check_quartic_bound(&RadialField::zeros(default_grid())).unwrap();
        assert_eq!((ineq.lhs, ineq.rhs, ineq.holds), (0.0, 0.0, true));
    }

    #[test]
    fn gaussian_closed_forms() {
        let u = RadialField::from_fn(default_grid(), |r| (-r * r).exp()).unwrap();
        let n = norms(&u, &[2.0, 6.0, 11.0]).unwrap();
        assert!((n.grad * n.grad / PI - 1.0).abs() < 1e-5);
        assert!((n.lq[0].1.powi(2) / (PI / 2.0) - 1.0).abs() < 1e-8);
        assert!((n.lq[1].1.powi(6) / (PI / 6.0) - 1.0).abs() < 1e-8);
        assert!((n.lq[2].1.powi(11) / (PI / 11.0) - 1.0).abs() < 1e-8);
        let ineq = check_quartic_bound(&u).unwrap();
        assert!(ineq.holds && ineq.lhs < ineq.rhs);
    }

    #[test]
    fn mollified_disk_norms_converge_to_disk_area() {
        let g = Arc::new(RadialGrid::build(&GridConfig::uniform(20.0, 40_000)).unwrap());
        // the O(delta) mollification error halves with delta
        let errs: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&delta| {
                let u = RadialField::from_fn(Arc::clone(&g), |r| {
                    0.5 * (1.0 - ((r - 1.0) / delta).tanh())
                })
                .unwrap();
                (lq_pow(&u, 4.0) - PI, lq_pow(&u, 2.0) - PI)
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0].0 / w[1].0 - 2.0).abs() < 0.1 && (w[0].1 / w[1].1 - 2.0).abs() < 0.1);
        }
        // quadrature reference errors at delta = 0.0125: -0.07135 and -0.03887
        let last = errs[3];
        assert!(
            (last.0 + 0.07135).abs() < 1e-4 && (last.1 + 0.03887).abs() < 1e-4,
            "{last:?}"
        );
        let rich = (2.0 * errs[3].0 - errs[2].0, 2.0 * errs[3].1 - errs[2].1);
        assert!(rich.0.abs() < 5e-3 && rich.1.abs() < 5e-3, "{rich:?}");
    }

    #[test]
    fn rejects_sub_unit_exponent() {
        let u = RadialField::zeros(default_grid());
        assert!(matches!(norms(&u, &[0.5]), Err(CssError::Config(_))));
    }
}
