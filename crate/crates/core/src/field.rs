use std::sync::Arc;

use crate::error::{CssError, Result};
use crate::grid::RadialGrid;

/// Nodal values `u_i = u(r_i)` of a radial amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<RadialField> {
        if values.len() != grid.len() {
            return Err(CssError::Shape {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CssError::Validation(format!(
                "field value at node {i} (r = {}) is not finite",
                grid.nodes()[i]
            )));
        }
        Ok(RadialField { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> RadialField {
        let values = vec![0.0; grid.len()];
        RadialField { grid, values }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<RadialField> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        RadialField::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `|u(R_max)| / max |u|`, zero for the zero field.
    pub fn tail_ratio(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            0.0
        } else {
            self.values[self.values.len() - 1].abs() / m
        }
    }

    /// Truncation audit: the tail value must sit below the grid's threshold.
    pub fn ensure_admissible(&self) -> Result<()> {
        let ratio = self.tail_ratio();
        if ratio > self.grid.tail_tol() {
            return Err(CssError::Validation(format!(
                "tail bound violated: |u(R_max)|/max|u| = {ratio:.3e} exceeds {:.3e}",
                self.grid.tail_tol()
            )));
        }
        Ok(())
    }

    /// Values replaced by their absolute values.
    pub fn abs(&self) -> RadialField {
        RadialField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<RadialField> {
        RadialField::new(
            Arc::clone(&self.grid),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// `self + s * other` on the same grid.
    pub fn axpy(&self, s: f64, other: &[f64]) -> Result<RadialField> {
        if other.len() != self.len() {
            return Err(CssError::Shape {
                expected: self.len(),
                found: other.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(other)
            .map(|(a, b)| a + s * b)
            .collect();
        RadialField::new(Arc::clone(&self.grid), values)
    }

    /// Strict positivity on every node but the last. Nodes deep in an
    /// exponential tail may underflow; once a value drops below `1e-280`
    /// every later value must stay there and be nonnegative.
    pub fn is_positive_interior(&self) -> bool {
        const UNDERFLOW: f64 = 1e-280;
        let inner = &self.values[..self.values.len() - 1];
        match inner.iter().position(|&v| v <= UNDERFLOW) {
            None => true,
            Some(k) => k > 0 && inner[k..].iter().all(|&v| (0.0..=UNDERFLOW).contains(&v)),
        }
    }
}
