use serde::{Deserialize, Serialize};

use crate::error::{CssError, Result};

/// Nonlinearity exponent `p`, mass/frequency `eps` (the same parameter is
/// the standing-wave frequency `omega`) and fibering exponent `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub eps: f64,
    pub alpha: f64,
}

impl ModelParams {
    /// Validated parameters; `alpha = None` selects [`default_alpha`].
    pub fn new(p: f64, eps: f64, alpha: Option<f64>) -> Result<ModelParams> {
        if !(p.is_finite() && p > 3.0) {
            return Err(CssError::Config(format!(
                "nonlinearity requires p > 3 (got {p})"
            )));
        }
        let params = ModelParams {
            p,
            eps,
            alpha: alpha.unwrap_or_else(|| default_alpha(p)),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let ModelParams { p, eps, alpha } = *self;
        if !(p.is_finite() && p > 3.0) {
            return Err(CssError::Config(format!(
                "nonlinearity requires p > 3 (got {p})"
            )));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(CssError::Config(format!(
                "mass parameter requires eps >= 0 (got {eps})"
            )));
        }
        let (lo, hi) = alpha_interval(p);
        if !(alpha.is_finite() && alpha > lo && alpha < hi) {
            return Err(CssError::Config(format!(
                "fibering exponent requires {lo} < alpha < {hi} for p = {p} (got {alpha})"
            )));
        }
        Ok(())
    }

    pub fn with_eps(self, eps: f64) -> ModelParams {
        ModelParams { eps, ..self }
    }

    /// `(p+1) alpha - 2`, the exponent of the nonlinear term along the fiber.
    pub fn fiber_exponent(&self) -> f64 {
        (self.p + 1.0) * self.alpha - 2.0
    }
}

/// Open interval of admissible `alpha`: `alpha > 1` together with
/// `2/(p-1) < alpha < 2/(5-p)` when `3 < p < 5`.
pub fn alpha_interval(p: f64) -> (f64, f64) {
    if p < 5.0 {
        ((2.0 / (p - 1.0)).max(1.0), 2.0 / (5.0 - p))
    } else {
        (1.0, f64::INFINITY)
    }
}

/// Midpoint of `(2/(p-1), 2/(5-p))` for `3 < p < 5`, and `2` for `p >= 5`.
pub fn default_alpha(p: f64) -> f64 {
    if p < 5.0 {
        0.5 * (2.0 / (p - 1.0) + 2.0 / (5.0 - p))
    } else {
        2.0
    }
}
