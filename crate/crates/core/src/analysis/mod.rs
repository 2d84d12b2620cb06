//! Closed-form bounds, trajectory metrics, unit conversion and comparison
//! against measured counts.

mod monte_carlo;

pub use monte_carlo::{monte_carlo, Interval, McSummary, Spread, UncertaintyRanges};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::{Trajectory, TrajectoryRecord};

/// Metronidazole: 1 μg/ml ≈ 5.8425 μM.
pub const MICROMOLAR_PER_UGML: f64 = 5.8425;

/// Unit a dose value is expressed in; conversion goes to the other unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoseUnit {
    MicrogramPerMl,
    MicroMolar,
}

/// Converts `value` from `from` into the other unit.
pub fn convert_dose(value: f64, from: DoseUnit) -> Result<f64> {
    if !(value >= 0.0) {
        return Err(Error::domain(format!("dose must be >= 0 (got {value})")));
    }
    Ok(match from {
        DoseUnit::MicrogramPerMl => value * MICROMOLAR_PER_UGML,
        DoseUnit::MicroMolar => value / MICROMOLAR_PER_UGML,
    })
}

/// Closed-form Riccati bound
///
/// `ybar(t) = y0 e^(-delta t) / (1 + (y0/K)(1 - e^(-delta t)))`
///
/// This solves `ybar' = -delta ybar (1 + ybar/K)`, `ybar(0) = y0`. It does
/// not solve `ybar' = -delta ybar (1 - ybar/K)`; that ODE decays slower than
/// `y0 e^(-delta t)`. Always at or below `y0 e^(-delta t)`.
pub fn riccati_bound(y0: f64, k: f64, delta: f64, t: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::domain(format!("K must be > 0 (got {k})")));
    }
    if !(0.0..=k).contains(&y0) {
        return Err(Error::domain(format!("y0 = {y0} outside [0, K = {k}]")));
    }
    if !(delta > 0.0) {
        return Err(Error::domain(format!("delta must be > 0 (got {delta})")));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t must be >= 0 (got {t})")));
    }
    let decay = (-delta * t).exp();
    Ok(y0 * decay / (1.0 + (y0 / k) * (1.0 - decay)))
}

/// First time the population falls to `frac * y(0)`.
///
/// Interpolates in log-population between records (linearly once a record
/// reaches zero). `None` if never reached or `y(0) <= 0`.
pub fn time_to_fraction(records: &[TrajectoryRecord], frac: f64) -> Option<f64> {
    let first = records.first()?;
    let y0 = first.x1;
    if !(y0 > 0.0 && frac > 0.0) {
        return None;
    }
    let target = frac * y0;
    let k = records.iter().position(|r| r.x1 <= target)?;
    if k == 0 {
        return Some(first.t);
    }
    let (a, b) = (&records[k - 1], &records[k]);
    let w = if b.x1 > 0.0 {
        (target.ln() - a.x1.ln()) / (b.x1.ln() - a.x1.ln())
    } else {
        (a.x1 - target) / (a.x1 - b.x1)
    };
    Some(a.t + w * (b.t - a.t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub t: f64,
    pub simulated: f64,
    pub observed: f64,
    /// `log10(simulated / observed)`.
    pub log10_ratio: f64,
}

/// Aligns observed counts with the simulated population (linear interpolation).
pub fn compare_experiment(traj: &Trajectory, data: &[(f64, f64)]) -> Result<Vec<Comparison>> {
    let t_end = traj.last().map_or(f64::NAN, |r| r.t);
    data.iter()
        .map(|&(t, observed)| {
            let simulated = traj
                .population_at(t)
                .ok_or_else(|| Error::domain(format!("observation at t = {t} h outside [0, {t_end}] h")))?;
            if !(observed > 0.0) {
                return Err(Error::domain(format!(
                    "observed count at t = {t} h must be > 0 (got {observed})"
                )));
            }
            Ok(Comparison {
                t,
                simulated,
                observed,
                log10_ratio: (simulated / observed).log10(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{AdaptiveConfig, ControllerConfig};
    use crate::model::ModelParams;
    use crate::observer::ObserverParams;
    use crate::sim::{simulate, SimConfig};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn adaptive_run() -> Trajectory {
        simulate(
            &ModelParams::PUBLISHED,
            &ObserverParams::PUBLISHED,
            &ControllerConfig::Adaptive(AdaptiveConfig::PUBLISHED),
            &SimConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn dose_conversion_examples() {
        assert_eq!(convert_dose(1.0, DoseUnit::MicrogramPerMl).unwrap(), 5.8425);
        assert_eq!(convert_dose(0.0, DoseUnit::MicroMolar).unwrap(), 0.0);
        assert_relative_eq!(
            convert_dose(320.0, DoseUnit::MicroMolar).unwrap(),
            54.771_074_026_529_74,
            max_relative = 1e-14
        );
        assert!(convert_dose(-1.0, DoseUnit::MicroMolar).is_err());
    }

    #[test]
    fn riccati_examples() {
        assert_eq!(riccati_bound(1e5, 6.596e7, 0.024, 0.0).unwrap(), 1e5);
        // mpmath closed-form evaluation
        assert_relative_eq!(
            riccati_bound(1e5, 6.596e7, 0.024, 10.0).unwrap(),
            78_637.347_933_325_16,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            riccati_bound(6.596e7, 6.596e7, 0.024, 10.0).unwrap(),
            42_761_797.515_441_226,
            max_relative = 1e-13
        );
        assert!(riccati_bound(7e7, 6.596e7, 0.024, 1.0).is_err());
        assert!(riccati_bound(1e5, 6.596e7, 0.024, -1.0).is_err());
    }

    #[test]
    fn riccati_matches_its_ode() {
        let (y0, k, delta) = (3e7, 6.596e7, 0.05);
        let f = |_t: f64, y: &[f64; 1]| Ok([-delta * y[0] * (1.0 + y[0] / k)]);
        let mut y = [y0];
        for i in 0..40_000 {
            y = crate::sim::rk4_step(&y, i as f64 * 1e-3, 1e-3, f).unwrap();
        }
        assert_relative_eq!(
            y[0],
            riccati_bound(y0, k, delta, 40.0).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn time_to_fraction_examples() {
        let tr = adaptive_run();
        let t10 = time_to_fraction(&tr.records, 0.10).unwrap();
        assert!(t10 > 0.0 && t10 <= 10.0, "{t10}");
        assert_eq!(time_to_fraction(&tr.records, 1.0), Some(0.0));

        let open = simulate(
            &ModelParams::PUBLISHED,
            &ObserverParams::PUBLISHED,
            &ControllerConfig::Zero,
            &SimConfig::default(),
        )
        .unwrap();
        assert_eq!(time_to_fraction(&open.records, 0.5), None);
    }

    #[test]
    fn time_to_fraction_is_exact_for_exponentials() {
        let recs: Vec<TrajectoryRecord> = (0..=10)
            .map(|i| {
                let t = i as f64;
                TrajectoryRecord {
                    t,
                    x1: 1e5 * (-0.3 * t).exp(),
                    x2: 0.0,
                    x2_hat: 0.0,
                    u: 0.0,
                    r: 0.0,
                    envelope: None,
                    pi: 0.0,
                }
            })
            .collect();
        let t = time_to_fraction(&recs, 0.25).unwrap();
        assert_relative_eq!(t, 4.0f64.ln() / 0.3, max_relative = 1e-12);
    }

    #[test]
    fn compare_examples() {
        let tr = adaptive_run();
        let same: Vec<(f64, f64)> = tr.records.iter().map(|r| (r.t, r.x1)).collect();
        let cmp = compare_experiment(&tr, &same).unwrap();
        assert!(cmp.iter().all(|c| c.log10_ratio == 0.0));

        let y0 = tr.records[0].x1;
        let one = compare_experiment(&tr, &[(0.0, y0)]).unwrap();
        assert_eq!(one[0].log10_ratio, 0.0);

        let doubled: Vec<(f64, f64)> = tr.records.iter().step_by(50).map(|r| (r.t, 2.0 * r.x1)).collect();
        for c in compare_experiment(&tr, &doubled).unwrap() {
            assert_relative_eq!(c.log10_ratio, -std::f64::consts::LOG10_2, max_relative = 1e-12);
        }
        assert!(compare_experiment(&tr, &[(61.0, 1.0)]).is_err());
        assert!(compare_experiment(&tr, &[(1.0, 0.0)]).is_err());
    }

    proptest! {
        #[test]
        fn riccati_never_exceeds_envelope(
            k in 1.0..1e9f64,
            frac in 0.0..=1.0f64,
            delta in 1e-4..2.0f64,
            t in 0.0..500.0f64,
        ) {
            let y0 = frac * k;
            let ybar = riccati_bound(y0, k, delta, t).unwrap();
            prop_assert!(ybar <= y0 * (-delta * t).exp());
            prop_assert!(ybar >= 0.0);
        }

        #[test]
        fn dose_conversion_round_trips(v in 0.0..1e6f64) {
            let back = convert_dose(convert_dose(v, DoseUnit::MicrogramPerMl).unwrap(), DoseUnit::MicroMolar).unwrap();
            prop_assert!((back - v).abs() <= v * f64::EPSILON);
        }
    }
}
