//! Gauge potentials of the radial ansatz, with `xi = 0`:
//! `A_0 = V_u` and `(A_1, A_2) = (-x_2, x_1) h_u / |x|^2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::RadialField;
use crate::model::ModelParams;
use crate::nonlocal::compute_nonlocal;
use crate::norms::lq_pow;

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFields {
    /// Matter amplitude; the standing wave is `phi e^{i omega t}`.
    pub phi: RadialField,
    pub omega: f64,
    pub a0: Vec<f64>,
    /// `|A| = h/r`, zero at the origin.
    pub a_mag: Vec<f64>,
    pub h: Vec<f64>,
    pub u_mag: Vec<f64>,
    pub h_inf: f64,
}

pub fn reconstruct(u: &RadialField, params: &ModelParams) -> Result<GaugeFields> {
    let cache = compute_nonlocal(u)?;
    let r = u.grid().nodes();
    let a_mag = r
        .iter()
        .zip(&cache.h)
        .map(|(r, h)| if *r == 0.0 { 0.0 } else { h / r })
        .collect();
    Ok(GaugeFields {
        phi: u.clone(),
        omega: params.eps,
        a0: cache.v,
        a_mag,
        h: cache.h,
        u_mag: cache.u_mag,
        h_inf: cache.h_inf,
    })
}

/// `||u||_4^2 / (4 sqrt(pi))`, the sharp bound on `sup h/r`.
pub fn vector_potential_bound(u: &RadialField) -> f64 {
    lq_pow(u, 4.0).sqrt() / (4.0 * PI.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FalloffLevel {
    /// `|A|` fails the sup bound.
    Unbounded,
    /// `A` bounded, no `1/r` rate observed.
    Bounded,
    /// `|A| ~ h_inf / r` on the tail.
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FalloffReport {
    /// `A_0` at the node nearest `R_max/2`.
    pub a0_tail: f64,
    /// Slope of `log |A|` against `log r` on the tail window; absent when
    /// `|A|` vanishes there.
    pub a_decay: Option<f64>,
    pub sup_a_mag: f64,
    pub bound: f64,
    pub bounded_a: bool,
    pub level: FalloffLevel,
}

/// Slope tolerance around `-1` for the `1/r` level.
pub const INVERSE_DISTANCE_TOL: f64 = 0.05;

pub fn falloff_report(g: &GaugeFields, u: &RadialField) -> FalloffReport {
    let grid = u.grid();
    let half = grid.nearest(0.5 * grid.r_max());
    let win = grid.tail_window();
    let pts: Vec<(f64, f64)> = win
        .filter(|&i| g.a_mag[i] > 0.0)
        .map(|i| (grid.nodes()[i].ln(), g.a_mag[i].ln()))
        .collect();
    let a_decay = (pts.len() >= 3).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let sup_a_mag = g.a_mag.iter().fold(0.0, |m: f64, v| m.max(*v));
    let bound = vector_potential_bound(u);
    let bounded_a = sup_a_mag.is_finite() && sup_a_mag <= bound * (1.0 + 1e-12);
    let level = match (bounded_a, a_decay) {
        (false, _) => FalloffLevel::Unbounded,
        (true, Some(s)) if (s + 1.0).abs() <= INVERSE_DISTANCE_TOL => FalloffLevel::InverseDistance,
        _ => FalloffLevel::Bounded,
    };
    FalloffReport {
        a0_tail: g.a0[half],
        a_decay,
        sup_a_mag,
        bound,
        bounded_a,
        level,
    }
}
