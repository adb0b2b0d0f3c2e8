//! Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson slopes
//! with the weighted harmonic mean of Fritsch and Butland).

use crate::error::{CssError, Result};

#[derive(Debug, Clone)]
pub struct Pchip<'a> {
    x: &'a [f64],
    y: &'a [f64],
    slopes: Vec<f64>,
}

impl<'a> Pchip<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Result<Pchip<'a>> {
        if x.len() != y.len() {
            return Err(CssError::Shape {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.len() < 3 {
            return Err(CssError::Config(
                "interpolation needs at least 3 nodes".into(),
            ));
        }
        Ok(Pchip {
            x,
            y,
            slopes: slopes(x, y),
        })
    }

    fn segment(&self, k: usize, t: f64) -> f64 {
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k]
            + h10 * h * self.slopes[k]
            + h01 * self.y[k + 1]
            + h11 * h * self.slopes[k + 1]
    }

    /// Value at `t`; `None` outside `[x_0, x_n]`.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let n = self.x.len();
        if !(t >= self.x[0] && t <= self.x[n - 1]) {
            return None;
        }
        let k = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        Some(self.segment(k, t))
    }

    /// Values at nondecreasing points, zero beyond the last node.
    pub fn eval_sorted_zero_extended(&self, ts: &[f64]) -> Vec<f64> {
        let n = self.x.len();
        let mut k = 0usize;
        ts.iter()
            .map(|&t| {
                if t > self.x[n - 1] || t < self.x[0] {
                    return 0.0;
                }
                while k + 2 < n && self.x[k + 1] < t {
                    k += 1;
                }
                self.segment(k, t)
            })
            .collect()
    }
}

fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}
