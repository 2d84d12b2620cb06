//! Plant model: logistic population growth driven by a mutation-dependent
//! growth rate and a drug-dose input.
//!
//! State `x1` is the trophozoite population (cells/ml), `x2` the drug
//! resistance acquired by mutation (dimensionless). Only `y = x1` is measured.
//!
//! ```text
//! r   = r0 x1/K + beta_m x2 exp(-x2^2/w_m) - beta_d u
//! x1' = r x1 (1 - x1/K)
//! x2' = -s x2 + s sqrt(w_m/2) exp(-x2^2/w_m) x1/K,     s = sigma^2 beta_m
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bisection tolerance for the open-loop mutation fixed point.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;
const EQUILIBRIUM_MAX_ITER: usize = 200;

/// The six plant constants. All strictly positive; enforced by [`ModelParams::new`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams", into = "RawModelParams")]
pub struct ModelParams {
    r0: f64,
    k: f64,
    beta_d: f64,
    beta_m: f64,
    w_m: f64,
    sigma: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelParams {
    r0: f64,
    #[serde(rename = "K")]
    k: f64,
    beta_d: f64,
    beta_m: f64,
    w_m: f64,
    sigma: f64,
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModelParams) -> Result<Self> {
        ModelParams::new(raw.r0, raw.k, raw.beta_d, raw.beta_m, raw.w_m, raw.sigma)
    }
}

impl From<ModelParams> for RawModelParams {
    fn from(p: ModelParams) -> Self {
        RawModelParams {
            r0: p.r0,
            k: p.k,
            beta_d: p.beta_d,
            beta_m: p.beta_m,
            w_m: p.w_m,
            sigma: p.sigma,
        }
    }
}

impl ModelParams {
    /// Natural growth rate 0.179527 1/h, K = 6.596e7 cells/ml and the
    /// identified drug / mutation constants of the in-vitro model.
    pub const PUBLISHED: ModelParams = ModelParams {
        r0: 0.179527,
        k: 6.596e7,
        beta_d: 0.00874109,
        beta_m: 0.04162605,
        w_m: 45.8677,
        sigma: 0.52947229225,
    };

    pub fn new(r0: f64, k: f64, beta_d: f64, beta_m: f64, w_m: f64, sigma: f64) -> Result<Self> {
        let mut failed = Vec::new();
        for (name, value) in [
            ("r0", r0),
            ("K", k),
            ("beta_d", beta_d),
            ("beta_m", beta_m),
            ("w_m", w_m),
            ("sigma", sigma),
        ] {
            if !(value.is_finite() && value > 0.0) {
                failed.push(format!("model.{name} must be finite and > 0 (got {value})"));
            }
        }
        if failed.is_empty() {
            Ok(ModelParams {
                r0,
                k,
                beta_d,
                beta_m,
                w_m,
                sigma,
            })
        } else {
            Err(Error::Validation(failed))
        }
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Carrying capacity, cells/ml.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn beta_d(&self) -> f64 {
        self.beta_d
    }

    pub fn beta_m(&self) -> f64 {
        self.beta_m
    }

    pub fn w_m(&self) -> f64 {
        self.w_m
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Mutation decay rate `sigma^2 beta_m`, the upper limit for the observer pole.
    pub fn mutation_decay(&self) -> f64 {
        self.sigma * self.sigma * self.beta_m
    }

    /// `sigma^2 beta_m sqrt(w_m) / sqrt(2)`, gain of the population-driven mutation source.
    pub fn mutation_source_gain(&self) -> f64 {
        self.mutation_decay() * self.w_m.sqrt() / std::f64::consts::SQRT_2
    }

    /// Time-varying growth rate for dose `u` (μg/ml). May be negative.
    pub fn growth_rate(&self, s: &PlantState, u: f64) -> Result<f64> {
        check_dose(u)?;
        Ok(self.r0 * s.x1 / self.k + self.beta_m * s.x2 * (-s.x2 * s.x2 / self.w_m).exp() - self.beta_d * u)
    }

    pub fn vector_field(&self, s: &PlantState, u: f64) -> Result<Derivative> {
        let r = self.growth_rate(s, u)?;
        let occupancy = s.x1 / self.k;
        Ok(Derivative {
            dx1: r * s.x1 * (1.0 - occupancy),
            dx2: -self.mutation_decay() * s.x2
                + self.mutation_source_gain() * (-s.x2 * s.x2 / self.w_m).exp() * occupancy,
        })
    }

    /// Open-loop (zero dose) equilibrium reached from any positive population.
    ///
    /// `x1* = K`; `x2*` is the root of `x - sqrt(w_m/2) exp(-x^2/w_m)` in
    /// `(0, sqrt(w_m/2)]`. Note that this root lies strictly below
    /// `sqrt(w_m/2)` (about 3.61 vs 4.79 for the published constants).
    pub fn open_loop_equilibrium(&self) -> Result<Equilibrium> {
        let half_width = (self.w_m / 2.0).sqrt();
        let g = |x: f64| x - half_width * (-x * x / self.w_m).exp();
        let (mut lo, mut hi) = (0.0_f64, half_width);
        for _ in 0..EQUILIBRIUM_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < EQUILIBRIUM_TOL {
                return Ok(Equilibrium {
                    x1: self.k,
                    x2: 0.5 * (lo + hi),
                });
            }
        }
        Err(Error::Numeric {
            t: 0.0,
            message: format!("mutation fixed point did not converge in {EQUILIBRIUM_MAX_ITER} bisections"),
        })
    }
}

fn check_dose(u: f64) -> Result<()> {
    if u.is_finite() && u >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("dose must be finite and >= 0 (got {u})")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// Population, cells/ml.
    pub x1: f64,
    /// Mutation level; any sign allowed.
    pub x2: f64,
}

impl PlantState {
    /// Initial state; the population must lie in `[0, K]`.
    pub fn initial(p: &ModelParams, x1: f64, x2: f64) -> Result<Self> {
        let mut failed = Vec::new();
        if !(x1.is_finite() && (0.0..=p.k).contains(&x1)) {
            failed.push(format!("initial x1 must lie in [0, K = {}] (got {x1})", p.k));
        }
        if !x2.is_finite() {
            failed.push(format!("initial x2 must be finite (got {x2})"));
        }
        if failed.is_empty() {
            Ok(PlantState { x1, x2 })
        } else {
            Err(Error::Validation(failed))
        }
    }

    /// Measured output `y = x1`.
    pub fn output(&self) -> f64 {
        self.x1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub dx1: f64,
    pub dx2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub x1: f64,
    pub x2: f64,
}
