//! Norm observer for the unmeasured mutation state.
//!
//! The scalar filter `x2_hat' = -lambda x2_hat + gamma |y|` upper-bounds
//! `|x2|` up to an exponentially decaying slack `pi(t)`, provided
//! `0 < lambda < sigma^2 beta_m` and `gamma > sigma^2 beta_m sqrt(w_m) / (K sqrt 2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverParams {
    /// Filter pole, 1/h.
    pub lambda: f64,
    /// Input gain, 1/(cells/ml h).
    pub gamma: f64,
}

impl ObserverParams {
    pub const PUBLISHED: ObserverParams = ObserverParams {
        lambda: 1.14e-2,
        gamma: 1.70e-9,
    };

    pub fn derivative(&self, s: ObserverState, y: f64) -> f64 {
        -self.lambda * s.x2_hat + self.gamma * y.abs()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.lambda.is_finite() && self.gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::Validation(vec![format!(
                "observer gains must be finite (lambda = {}, gamma = {})",
                self.lambda, self.gamma
            )]))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObserverState {
    pub x2_hat: f64,
}

/// Outcome of checking observer gains against a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainReport {
    pub lambda: f64,
    pub gamma: f64,
    /// `sigma^2 beta_m`; lambda must lie strictly inside `(0, lambda_max)`.
    pub lambda_max: f64,
    /// gamma must strictly exceed this.
    pub gamma_min: f64,
    pub lambda_ok: bool,
    pub gamma_ok: bool,
}

impl GainReport {
    pub fn passes(&self) -> bool {
        self.lambda_ok && self.gamma_ok
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.lambda_ok {
            out.push(format!(
                "observer lambda = {:e} outside (0, sigma^2 beta_m = {:e})",
                self.lambda, self.lambda_max
            ));
        }
        if !self.gamma_ok {
            out.push(format!(
                "observer gamma = {:e} not above sigma^2 beta_m sqrt(w_m)/(K sqrt 2) = {:e}",
                self.gamma, self.gamma_min
            ));
        }
        out
    }
}

pub fn validate_gains(p: &ModelParams, o: &ObserverParams) -> GainReport {
    let lambda_max = p.mutation_decay();
    let gamma_min = p.mutation_source_gain() / p.k();
    GainReport {
        lambda: o.lambda,
        gamma: o.gamma,
        lambda_max,
        gamma_min,
        lambda_ok: o.lambda > 0.0 && o.lambda < lambda_max,
        gamma_ok: o.gamma > gamma_min,
    }
}

/// Decaying slack `e^(-lambda t) (|x2(0)| + |x2_hat(0)|)`.
///
/// Underflows to exactly zero for very large `lambda t`.
pub fn pi_bound(lambda: f64, x2_0_abs: f64, x2_hat_0_abs: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("pi(t) needs t >= 0 (got {t})")));
    }
    if !(x2_0_abs >= 0.0 && x2_hat_0_abs >= 0.0) {
        return Err(Error::domain("pi(t) needs non-negative initial magnitudes"));
    }
    Ok((-lambda * t).exp() * (x2_0_abs + x2_hat_0_abs))
}

/// Certified bound on `|x2|`: `|x2_hat| + pi`.
pub fn certified_bound(s: ObserverState, pi: f64) -> f64 {
    s.x2_hat.abs() + pi
}
