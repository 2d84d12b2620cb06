use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{validate_adaptive, AdaptiveConfig, ControllerConfig, ETA_CONDITION};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::observer::ObserverParams;
use crate::sim::{self, check_envelope, check_observer_bound, simulate, SimConfig};

use super::time_to_fraction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl From<[f64; 2]> for Interval {
    fn from([low, high]: [f64; 2]) -> Self {
        Interval { low, high }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.low, i.high]
    }
}

impl Interval {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.low == self.high {
            self.low
        } else {
            Uniform::new_inclusive(self.low, self.high).sample(rng)
        }
    }
}

/// Closed intervals for each plant constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyRanges {
    pub r0: Interval,
    #[serde(rename = "K")]
    pub k: Interval,
    pub beta_d: Interval,
    pub beta_m: Interval,
    pub w_m: Interval,
    pub sigma: Interval,
}

impl UncertaintyRanges {
    fn named(&self) -> [(&'static str, Interval); 6] {
        [
            ("r0", self.r0),
            ("K", self.k),
            ("beta_d", self.beta_d),
            ("beta_m", self.beta_m),
            ("w_m", self.w_m),
            ("sigma", self.sigma),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let failed: Vec<String> = self
            .named()
            .into_iter()
            .filter(|(_, i)| !(i.low > 0.0 && i.low <= i.high && i.high.is_finite()))
            .map(|(n, i)| {
                format!(
                    "ranges.{n} must satisfy 0 < low <= high (got [{}, {}])",
                    i.low, i.high
                )
            })
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(failed))
        }
    }

    /// `[p (1 - rel), p (1 + rel)]` around each nominal constant.
    pub fn around(p: &ModelParams, rel: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rel) {
            return Err(Error::domain(format!(
                "relative half-width must lie in [0, 1) (got {rel})"
            )));
        }
        let iv = |v: f64| Interval {
            low: v * (1.0 - rel),
            high: v * (1.0 + rel),
        };
        Ok(UncertaintyRanges {
            r0: iv(p.r0()),
            k: iv(p.k()),
            beta_d: iv(p.beta_d()),
            beta_m: iv(p.beta_m()),
            w_m: iv(p.w_m()),
            sigma: iv(p.sigma()),
        })
    }

    /// Designer bounds dominate the worst case of the ranges.
    pub fn dominated_by(&self, design: &AdaptiveConfig) -> bool {
        design.r0_bar > self.r0.high / self.k.low
            && design.beta_m_bar > self.beta_m.high
            && design.beta_d_low < self.beta_d.low
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<ModelParams> {
        let r0 = self.r0.sample(rng);
        let k = self.k.sample(rng);
        let beta_d = self.beta_d.sample(rng);
        let beta_m = self.beta_m.sample(rng);
        let w_m = self.w_m.sample(rng);
        let sigma = self.sigma.sample(rng);
        ModelParams::new(r0, k, beta_d, beta_m, w_m, sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub n_runs: usize,
    pub seed: u64,
    /// Design dominates the ranges and satisfies the eta condition, so the
    /// envelope is guaranteed for every draw.
    pub certified: bool,
    pub envelope_violations: Vec<usize>,
    pub observer_violations: Vec<usize>,
    /// Fraction of runs with no envelope violation.
    pub fraction_clean: f64,
    /// Spread of the time (h) to reach 10% of the initial population.
    pub time_to_10pct: Option<Spread>,
    pub runs_not_reaching_10pct: usize,
}

struct RunOutcome {
    envelope: usize,
    observer: usize,
    t10: Option<f64>,
}

/// Simulates the adaptive design over `n` parameter draws, uniform and
/// independent on each interval. Draws are taken sequentially from a
/// ChaCha8 stream seeded with `seed`; runs execute in parallel and are
/// merged in draw order.
pub fn monte_carlo(
    ranges: &UncertaintyRanges,
    design: &AdaptiveConfig,
    o: &ObserverParams,
    sc: &SimConfig,
    n: usize,
    seed: u64,
) -> Result<McSummary> {
    if n == 0 {
        return Err(Error::Validation(vec!["monte carlo needs n >= 1".to_string()]));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = (0..n)
        .map(|_| ranges.draw(&mut rng))
        .collect::<Result<Vec<_>>>()?;

    let controller = ControllerConfig::Adaptive(*design);
    let x2_bound = sc.ics.x2_bound();
    let x2_hat_0 = sc.ics.x2_hat.abs();
    let outcomes = draws
        .par_iter()
        .map(|p| -> Result<RunOutcome> {
            let tr = simulate(p, o, &controller, sc)?;
            let delta = tr.delta.unwrap_or(design.delta);
            Ok(RunOutcome {
                envelope: check_envelope(&tr.records, sc.ics.x1, delta).len(),
                observer: check_observer_bound(&tr.records, o.lambda, x2_bound, x2_hat_0).len(),
                t10: time_to_fraction(&tr.records, 0.10),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let resolved = match sim::resolve_controller(&draws[0], o, &controller, sc)?.0 {
        ControllerConfig::Adaptive(a) => a,
        _ => unreachable!("adaptive stays adaptive"),
    };
    let eta_ok = validate_adaptive(&resolved, &draws[0], x2_bound, x2_hat_0)
        .get(ETA_CONDITION)
        .is_some_and(|c| c.pass);

    let mut times: Vec<f64> = outcomes.iter().filter_map(|r| r.t10).collect();
    times.sort_by(f64::total_cmp);
    let time_to_10pct = (!times.is_empty()).then(|| {
        let m = times.len() / 2;
        let median = if times.len().is_multiple_of(2) {
            0.5 * (times[m - 1] + times[m])
        } else {
            times[m]
        };
        Spread {
            min: times[0],
            median,
            max: times[times.len() - 1],
        }
    });
    let clean = outcomes.iter().filter(|r| r.envelope == 0).count();

    Ok(McSummary {
        n_runs: n,
        seed,
        certified: ranges.dominated_by(design) && eta_ok,
        envelope_violations: outcomes.iter().map(|r| r.envelope).collect(),
        observer_violations: outcomes.iter().map(|r| r.observer).collect(),
        fraction_clean: clean as f64 / n as f64,
        runs_not_reaching_10pct: n - times.len(),
        time_to_10pct,
    })
}
