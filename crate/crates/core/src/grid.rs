//! Truncated radial meshes on `[0, R_max]` and composite trapezoid quadrature.
//!
//! Nodes are either uniform or power graded, `r_i = R_max (i/N)^kappa`.
//! Grading with `kappa > 1` clusters nodes near the origin, where the
//! profiles curve, and stretches them over the algebraic tail.

use serde::{Deserialize, Serialize};

use crate::error::{CssError, Result};

/// Smallest admissible number of intervals.
pub const MIN_INTERVALS: usize = 4;

/// Default relative tail threshold used by the truncation audit.
pub const DEFAULT_TAIL_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub r_max: f64,
    /// Number of intervals; the grid has `n + 1` nodes.
    pub n: usize,
    /// Grading exponent `kappa`; `1.0` gives a uniform mesh.
    pub grading: f64,
    /// Admissibility bound on `|u(R_max)| / max |u|`.
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

fn default_tail_tol() -> f64 {
    DEFAULT_TAIL_TOL
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            r_max: 50.0,
            n: 2000,
            grading: 2.0,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

impl GridConfig {
    pub fn uniform(r_max: f64, n: usize) -> Self {
        GridConfig {
            r_max,
            n,
            grading: 1.0,
            ..GridConfig::default()
        }
    }

    /// Large cubically graded mesh for the zero-mass limit, whose profiles
    /// decay only algebraically.
    pub fn far_field() -> Self {
        GridConfig {
            r_max: 1.0e4,
            n: 8000,
            grading: 3.0,
            ..GridConfig::default()
        }
    }

    pub fn with_r_max(self, r_max: f64) -> Self {
        GridConfig { r_max, ..self }
    }

    pub fn with_n(self, n: usize) -> Self {
        GridConfig { n, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(CssError::Config(format!(
                "grid requires R_max > 0 (got {})",
                self.r_max
            )));
        }
        if self.n < MIN_INTERVALS {
            return Err(CssError::Config(format!(
                "grid requires N >= {MIN_INTERVALS} intervals (got {})",
                self.n
            )));
        }
        if !(self.grading.is_finite() && self.grading >= 1.0) {
            return Err(CssError::Config(format!(
                "grading exponent must be >= 1 (got {})",
                self.grading
            )));
        }
        if !(self.tail_tol.is_finite() && self.tail_tol > 0.0) {
            return Err(CssError::Config(format!(
                "tail threshold must be positive (got {})",
                self.tail_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grading {
    Uniform,
    Power(f64),
    /// Nodes supplied explicitly, e.g. read back from a profile file.
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    grading: Grading,
    tail_tol: f64,
}

impl RadialGrid {
    pub fn build(config: &GridConfig) -> Result<RadialGrid> {
        config.validate()?;
        let n = config.n;
        let uniform = config.grading == 1.0;
        let nodes: Vec<f64> = (0..=n)
            .map(|i| {
                if i == n {
                    config.r_max
                } else {
                    let x = i as f64 / n as f64;
                    if uniform {
                        config.r_max * x
                    } else {
                        config.r_max * x.powf(config.grading)
                    }
                }
            })
            .collect();
        let grading = if uniform {
            Grading::Uniform
        } else {
            Grading::Power(config.grading)
        };
        Self::assemble(nodes, grading, config.tail_tol)
    }

    /// Grid over explicit nodes; weights are recomputed exactly as
    /// [`RadialGrid::build`] would.
    pub fn from_nodes(nodes: Vec<f64>, tail_tol: f64) -> Result<RadialGrid> {
        if nodes.len() < MIN_INTERVALS + 1 {
            return Err(CssError::Config(format!(
                "grid requires N >= {MIN_INTERVALS} intervals (got {})",
                nodes.len().saturating_sub(1)
            )));
        }
        if nodes[0] != 0.0 {
            return Err(CssError::Validation(format!(
                "first node must be r = 0 (got {})",
                nodes[0]
            )));
        }
        if let Some(w) = nodes
            .windows(2)
            .find(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(CssError::Validation(format!(
                "nodes must be strictly increasing and finite (found {} then {})",
                w[0], w[1]
            )));
        }
        Self::assemble(nodes, Grading::Explicit, tail_tol)
    }

    fn assemble(nodes: Vec<f64>, grading: Grading, tail_tol: f64) -> Result<RadialGrid> {
        let n = nodes.len() - 1;
        let mut weights = vec![0.0; n + 1];
        for i in 0..n {
            let half = 0.5 * (nodes[i + 1] - nodes[i]);
            weights[i] += half;
            weights[i + 1] += half;
        }
        Ok(RadialGrid {
            nodes,
            weights,
            grading,
            tail_tol,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Number of nodes (`N + 1`).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Interval length `r_{i+1} - r_i`.
    #[inline]
    pub fn spacing(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Lumped planar mass `2 pi w_i r_i`, the weight of node `i` in
    /// `int_{R^2} g dx`.
    pub fn planar_mass(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| 2.0 * std::f64::consts::PI * w * r)
            .collect()
    }

    /// Composite trapezoid value of `int_0^{R_max} g(r) dr`.
    pub fn integrate(&self, g: &[f64]) -> Result<f64> {
        if g.len() != self.len() {
            return Err(CssError::Shape {
                expected: self.len(),
                found: g.len(),
            });
        }
        Ok(self.weights.iter().zip(g).map(|(w, v)| w * v).sum())
    }

    /// Running trapezoid integral `int_0^{r_i} g dr` for every node.
    pub fn cumulative(&self, g: &[f64]) -> Result<Vec<f64>> {
        if g.len() != self.len() {
            return Err(CssError::Shape {
                expected: self.len(),
                found: g.len(),
            });
        }
        Ok(prefix_trapezoid(&self.nodes, g))
    }

    /// Index of the node closest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&r).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.len() => self.len() - 1,
            Err(i) => {
                if r - self.nodes[i - 1] <= self.nodes[i] - r {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    /// Tail window: nodes in `[R_max/10, R_max]`, minus the last five.
    pub fn tail_window(&self) -> std::ops::Range<usize> {
        let lo = self.nodes.partition_point(|&r| r < 0.1 * self.r_max());
        let hi = self.len().saturating_sub(5).max(lo);
        lo..hi
    }

    /// Little-endian bytes of the nodes; used to fingerprint a grid.
    pub fn node_bytes(&self) -> Vec<u8> {
        self.nodes.iter().flat_map(|x| x.to_le_bytes()).collect()
    }
}

pub(crate) fn prefix_trapezoid(nodes: &[f64], g: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..g.len() {
        acc += 0.5 * (nodes[i] - nodes[i - 1]) * (g[i - 1] + g[i]);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes_are_equispaced() {
        let g = RadialGrid::build(&GridConfig::uniform(50.0, 4)).unwrap();
        assert_eq!(g.nodes(), &[0.0, 12.5, 25.0, 37.5, 50.0]);
        assert_eq!(g.grading(), Grading::Uniform);
    }

    #[test]
    fn weights_sum_to_r_max() {
        for cfg in [
            GridConfig::default(),
            GridConfig::far_field(),
            GridConfig::uniform(3.0, 17),
            GridConfig {
                grading: 2.7,
                ..GridConfig::uniform(12.0, 333)
            },
        ] {
            let g = RadialGrid::build(&cfg).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!(
                (s - cfg.r_max).abs() <= 1e-12 * cfg.r_max,
                "{s} vs {}",
                cfg.r_max
            );
            assert!(g.weights().iter().all(|&w| w >= 0.0));
            assert_eq!(g.nodes()[0], 0.0);
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn graded_nodes_cluster_near_origin() {
        let g = RadialGrid::build(&GridConfig::default()).unwrap();
        assert!(g.spacing(0) < g.spacing(g.intervals() - 1) / 100.0);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(
            RadialGrid::build(&GridConfig::uniform(0.0, 100)),
            Err(CssError::Config(_))
        ));
        assert!(matches!(
            RadialGrid::build(&GridConfig::uniform(-3.0, 100)),
            Err(CssError::Config(_))
        ));
        assert!(matches!(
            RadialGrid::build(&GridConfig::uniform(10.0, 3)),
            Err(CssError::Config(_))
        ));
    }

    #[test]
    fn trapezoid_closed_forms() {
        let g = RadialGrid::build(&GridConfig::default()).unwrap();
        let ones = vec![1.0; g.len()];
        assert!((g.integrate(&ones).unwrap() - 50.0).abs() < 1e-12);

        let unit = RadialGrid::build(&GridConfig {
            grading: 2.0,
            ..GridConfig::uniform(1.0, 37)
        })
        .unwrap();
        let lin: Vec<f64> = unit.nodes().to_vec();
        assert!((unit.integrate(&lin).unwrap() - 0.5).abs() < 1e-15);

        let fine = RadialGrid::build(&GridConfig::uniform(1.0, 1000)).unwrap();
        let sq: Vec<f64> = fine.nodes().iter().map(|r| r * r).collect();
        assert!((fine.integrate(&sq).unwrap() - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn integrate_rejects_length_mismatch() {
        let g = RadialGrid::build(&GridConfig::uniform(1.0, 10)).unwrap();
        assert!(matches!(
            g.integrate(&[1.0; 3]),
            Err(CssError::Shape {
                expected: 11,
                found: 3
            })
        ));
    }

    #[test]
    fn from_nodes_matches_build() {
        let g = RadialGrid::build(&GridConfig::default()).unwrap();
        let h = RadialGrid::from_nodes(g.nodes().to_vec(), g.tail_tol()).unwrap();
        assert_eq!(g.weights(), h.weights());
        assert!(RadialGrid::from_nodes(vec![0.0, 1.0, 1.0, 2.0, 3.0], 0.05).is_err());
        assert!(RadialGrid::from_nodes(vec![0.1, 1.0, 2.0, 3.0, 4.0], 0.05).is_err());
    }

    #[test]
    fn tail_window_is_outer_decade() {
        let g = RadialGrid::build(&GridConfig::default()).unwrap();
        let w = g.tail_window();
        assert!(g.nodes()[w.start] >= 5.0);
        assert!(g.nodes()[w.start - 1] < 5.0);
        assert_eq!(w.end, g.len() - 5);
    }
}
