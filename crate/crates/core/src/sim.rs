//! Fixed-step closed-loop simulation of plant, norm observer and dose law,
//! plus checkers for the certified inequalities along a recorded trajectory.

use serde::{Deserialize, Serialize};

use crate::control::ControllerConfig;
use crate::error::{Error, Result};
use crate::model::{ModelParams, PlantState};
use crate::observer::{self, ObserverParams, ObserverState};

/// Relative slack allowed when checking `y <= y0 e^(-delta t)`.
pub const ENVELOPE_TOL: f64 = 1e-6;
/// Relative slack allowed when checking `|x2| <= |x2_hat| + pi`.
pub const OBSERVER_TOL: f64 = 1e-6;
/// Undershoot below zero (as a fraction of K) that is clamped rather than fatal.
pub const NEGATIVE_X1_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Use the configured eta as given, even if it violates the eta condition.
    #[default]
    Paper,
    /// Replace eta by the smallest value satisfying the eta condition.
    Theorem,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Paper => "paper-replication",
            Profile::Theorem => "theorem-compliant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    pub x1: f64,
    pub x2: f64,
    pub x2_hat: f64,
    /// Assumed bound on `|x2(0)|` used for pi(t) and eta; the true `x2(0)` is
    /// not measurable outside simulation. Defaults to `|x2|`.
    pub x2_abs_bound: Option<f64>,
}

impl InitialConditions {
    pub const PUBLISHED: InitialConditions = InitialConditions {
        x1: 1e5,
        x2: 4.80,
        x2_hat: 11.25,
        x2_abs_bound: None,
    };

    pub fn x2_bound(&self) -> f64 {
        self.x2_abs_bound.unwrap_or(self.x2.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Horizon, hours.
    pub t_end: f64,
    /// Step, hours.
    pub dt: f64,
    /// Record every `record_stride`-th step (the final step is always recorded).
    pub record_stride: usize,
    pub ics: InitialConditions,
    pub profile: Profile,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            t_end: 60.0,
            dt: 0.01,
            record_stride: 10,
            ics: InitialConditions::PUBLISHED,
            profile: Profile::Paper,
        }
    }
}

impl SimConfig {
    /// Validates the time grid and returns the number of steps.
    pub fn steps(&self) -> Result<usize> {
        let mut failed = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            failed.push(format!("sim.dt must be > 0 (got {})", self.dt));
        } else if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            failed.push(format!("sim.t_end must be >= dt (got {})", self.t_end));
        }
        if self.record_stride == 0 {
            failed.push("sim.record_stride must be >= 1".to_string());
        }
        if !failed.is_empty() {
            return Err(Error::Validation(failed));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::Validation(vec![format!(
                "sim.t_end = {} is not an integer multiple of dt = {}",
                self.t_end, self.dt
            )]));
        }
        Ok(n as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub x2_hat: f64,
    /// Dose, μg/ml.
    pub u: f64,
    pub r: f64,
    /// `y(0) e^(-delta t)` for strategies with a decay target.
    pub envelope: Option<f64>,
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    /// Decay rate the strategy targets, if any.
    pub delta: Option<f64>,
    /// Diagnostics about the configuration (gain or eta conditions not met).
    pub warnings: Vec<String>,
    /// Steps after which a small negative x1 was clamped to zero.
    pub x1_clamp_events: usize,
}

impl Trajectory {
    pub fn first(&self) -> Option<&TrajectoryRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&TrajectoryRecord> {
        self.records.last()
    }

    /// Population at `t`, linearly interpolated between records.
    pub fn population_at(&self, t: f64) -> Option<f64> {
        let recs = &self.records;
        let first = recs.first()?;
        let last = recs.last()?;
        if t < first.t || t > last.t {
            return None;
        }
        let idx = recs.partition_point(|r| r.t < t);
        let hi = &recs[idx];
        if hi.t == t || idx == 0 {
            return Some(hi.x1);
        }
        let lo = &recs[idx - 1];
        let w = (t - lo.t) / (hi.t - lo.t);
        Some(lo.x1 + w * (hi.x1 - lo.x1))
    }
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(state: &[f64; N], t: f64, dt: f64, mut f: F) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let shifted =
        |base: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] { std::array::from_fn(|i| base[i] + h * k[i]) };
    let stage = |i: usize, k: [f64; N]| -> Result<[f64; N]> {
        if k.iter().all(|v| v.is_finite()) {
            Ok(k)
        } else {
            Err(Error::Numeric {
                t,
                message: format!("non-finite derivative in RK4 stage {i}: {k:?}"),
            })
        }
    };
    let k1 = stage(1, f(t, state)?)?;
    let k2 = stage(2, f(t + 0.5 * dt, &shifted(state, &k1, 0.5 * dt))?)?;
    let k3 = stage(3, f(t + 0.5 * dt, &shifted(state, &k2, 0.5 * dt))?)?;
    let k4 = stage(4, f(t + dt, &shifted(state, &k3, dt))?)?;
    Ok(std::array::from_fn(|i| {
        state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

/// Applies the profile to the controller and collects configuration warnings.
pub fn resolve_controller(
    p: &ModelParams,
    o: &ObserverParams,
    c: &ControllerConfig,
    sc: &SimConfig,
) -> Result<(ControllerConfig, Vec<String>)> {
    let mut warnings = observer::validate_gains(p, o).failures();
    let x2_bound = sc.ics.x2_bound();
    let x2_hat_0 = sc.ics.x2_hat.abs();
    let resolved = match (c, sc.profile) {
        (ControllerConfig::Adaptive(a), Profile::Theorem) => {
            ControllerConfig::Adaptive(a.with_min_eta(x2_bound, x2_hat_0)?)
        }
        _ => c.clone(),
    };
    if let ControllerConfig::Adaptive(a) = &resolved {
        let report = crate::control::validate_adaptive(a, p, x2_bound, x2_hat_0);
        warnings.extend(report.failures());
    }
    Ok((resolved, warnings))
}

/// Runs the closed loop from `t = 0` to `sc.t_end`.
///
/// The adaptive dose is evaluated from each RK4 stage's own `(y, x2_hat)`;
/// schedules are evaluated at the step start, so segment boundaries must lie
/// on the step grid.
pub fn simulate(
    p: &ModelParams,
    o: &ObserverParams,
    c: &ControllerConfig,
    sc: &SimConfig,
) -> Result<Trajectory> {
    let n_steps = sc.steps()?;
    o.check_finite()?;
    let plant0 = PlantState::initial(p, sc.ics.x1, sc.ics.x2)?;
    if !sc.ics.x2_hat.is_finite() {
        return Err(Error::Validation(vec![format!(
            "initial x2_hat must be finite (got {})",
            sc.ics.x2_hat
        )]));
    }
    if let Some(b) = sc.ics.x2_abs_bound {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::Validation(vec![format!(
                "sim.x2_abs_bound must be >= 0 (got {b})"
            )]));
        }
    }
    if let ControllerConfig::Schedule(s) = c {
        for seg in s.segments() {
            let k = seg.start / sc.dt;
            if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                return Err(Error::Validation(vec![format!(
                    "schedule segment at {} h does not fall on the dt = {} grid",
                    seg.start, sc.dt
                )]));
            }
        }
    }

    let (controller, warnings) = resolve_controller(p, o, c, sc)?;
    let delta = controller.decay_rate();
    let y0 = plant0.output();
    let x2_bound = sc.ics.x2_bound();
    let x2_hat_0 = sc.ics.x2_hat.abs();

    let dynamics = |t_step: f64| {
        let controller = &controller;
        move |_t: f64, s: &[f64; 3]| -> Result<[f64; 3]> {
            let plant = PlantState { x1: s[0], x2: s[1] };
            let y = plant.output();
            let u = controller.dose(p, t_step, y, s[2])?;
            let d = p.vector_field(&plant, u)?;
            Ok([d.dx1, d.dx2, o.derivative(ObserverState { x2_hat: s[2] }, y)])
        }
    };
    let record = |t: f64, s: &[f64; 3]| -> Result<TrajectoryRecord> {
        let plant = PlantState { x1: s[0], x2: s[1] };
        let u = controller.dose(p, t, plant.output(), s[2])?;
        Ok(TrajectoryRecord {
            t,
            x1: s[0],
            x2: s[1],
            x2_hat: s[2],
            u,
            r: p.growth_rate(&plant, u)?,
            envelope: delta.map(|d| y0 * (-d * t).exp()),
            pi: observer::pi_bound(o.lambda, x2_bound, x2_hat_0, t)?,
        })
    };

    let mut state = [plant0.x1, plant0.x2, sc.ics.x2_hat];
    let mut records = Vec::with_capacity(n_steps / sc.record_stride + 2);
    records.push(record(0.0, &state)?);
    let mut clamps = 0;
    let floor = -NEGATIVE_X1_GUARD * p.k();
    for k in 0..n_steps {
        let t = k as f64 * sc.dt;
        state = rk4_step(&state, t, sc.dt, dynamics(t))?;
        let t_next = (k + 1) as f64 * sc.dt;
        if state[0] < 0.0 {
            if state[0] < floor {
                return Err(Error::Numeric {
                    t: t_next,
                    message: format!("population undershoot x1 = {} below -1e-9 K", state[0]),
                });
            }
            log::debug!("clamped x1 = {} to 0 at t = {t_next}", state[0]);
            state[0] = 0.0;
            clamps += 1;
        }
        if (k + 1) % sc.record_stride == 0 || k + 1 == n_steps {
            records.push(record(t_next, &state)?);
        }
    }

    Ok(Trajectory {
        records,
        delta,
        warnings,
        x1_clamp_events: clamps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

/// Samples where `y(t) > y0 e^(-delta t) (1 + ENVELOPE_TOL)`.
pub fn check_envelope(records: &[TrajectoryRecord], y0: f64, delta: f64) -> Vec<Violation> {
    records
        .iter()
        .filter_map(|r| {
            let bound = y0 * (-delta * r.t).exp();
            (r.x1 > bound * (1.0 + ENVELOPE_TOL)).then_some(Violation {
                t: r.t,
                value: r.x1,
                bound,
            })
        })
        .collect()
}

/// Samples where `|x2(t)| > (|x2_hat(t)| + pi(t)) (1 + OBSERVER_TOL)`.
///
/// `pi` is recomputed from `lambda` and the given initial magnitudes rather
/// than read from the record.
pub fn check_observer_bound(
    records: &[TrajectoryRecord],
    lambda: f64,
    x2_0_abs: f64,
    x2_hat_0_abs: f64,
) -> Vec<Violation> {
    records
        .iter()
        .filter_map(|r| {
            let pi = (-lambda * r.t).exp() * (x2_0_abs + x2_hat_0_abs);
            let bound = observer::certified_bound(ObserverState { x2_hat: r.x2_hat }, pi);
            (r.x2.abs() > bound * (1.0 + OBSERVER_TOL)).then_some(Violation {
                t: r.t,
                value: r.x2.abs(),
                bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{AdaptiveConfig, DoseSchedule};
    use approx::assert_relative_eq;

    const P: ModelParams = ModelParams::PUBLISHED;
    const O: ObserverParams = ObserverParams::PUBLISHED;

    fn decay(_t: f64, s: &[f64; 1]) -> Result<[f64; 1]> {
        Ok([-s[0]])
    }

    fn integrate_decay(dt: f64) -> f64 {
        let n = (1.0 / dt).round() as usize;
        let mut s = [1.0];
        for k in 0..n {
            s = rk4_step(&s, k as f64 * dt, dt, decay).unwrap();
        }
        s[0]
    }

    #[test]
    fn rk4_zero_field_is_identity() {
        let s = [1.0, -2.0, 3.5];
        let next = rk4_step(&s, 0.0, 0.1, |_, _| Ok([0.0; 3])).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn rk4_exponential_decay() {
        let next = rk4_step(&[1.0], 0.0, 0.1, decay).unwrap();
        assert!((next[0] - 0.904_837_5).abs() < 1e-12);
        assert!((next[0] - (-0.1f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn rk4_fourth_order() {
        let e1 = (integrate_decay(0.1) - (-1.0f64).exp()).abs();
        let e2 = (integrate_decay(0.05) - (-1.0f64).exp()).abs();
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 0.2 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn rk4_reports_non_finite_stage() {
        let err = rk4_step(&[1.0], 2.0, 0.1, |_, _| Ok([f64::NAN])).unwrap_err();
        assert!(matches!(err, Error::Numeric { t, .. } if t == 2.0));
    }

    #[test]
    fn sim_config_grid_validation() {
        let mut sc = SimConfig::default();
        assert_eq!(sc.steps().unwrap(), 6000);
        sc.dt = 0.007;
        assert!(sc.steps().is_err());
        sc.dt = 0.0;
        assert!(sc.steps().is_err());
        sc = SimConfig {
            record_stride: 0,
            ..SimConfig::default()
        };
        assert!(sc.steps().is_err());
    }

    #[test]
    fn records_are_ordered_and_include_endpoint() {
        let sc = SimConfig {
            t_end: 1.0,
            dt: 0.03125,
            record_stride: 7,
            ..SimConfig::default()
        };
        let tr = simulate(&P, &O, &ControllerConfig::Zero, &sc).unwrap();
        assert!(tr.records.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(tr.last().unwrap().t, 1.0);
        assert_eq!(tr.first().unwrap().t, 0.0);
        assert!(tr.records.iter().all(|r| r.envelope.is_none()));
    }

    #[test]
    fn deterministic() {
        let sc = SimConfig::default();
        let c = ControllerConfig::Adaptive(AdaptiveConfig::PUBLISHED);
        let a = simulate(&P, &O, &c, &sc).unwrap();
        let b = simulate(&P, &O, &c, &sc).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.x1.to_bits(), y.x1.to_bits());
            assert_eq!(x.x2.to_bits(), y.x2.to_bits());
            assert_eq!(x.x2_hat.to_bits(), y.x2_hat.to_bits());
        }
    }

    #[test]
    fn paper_profile_warns_about_eta() {
        let c = ControllerConfig::Adaptive(AdaptiveConfig::PUBLISHED);
        let tr = simulate(&P, &O, &c, &SimConfig::default()).unwrap();
        assert_eq!(tr.warnings.len(), 1);
        assert!(tr.warnings[0].starts_with("eta"));
        let sc = SimConfig {
            profile: Profile::Theorem,
            ..SimConfig::default()
        };
        let tr = simulate(&P, &O, &c, &sc).unwrap();
        assert!(tr.warnings.is_empty());
    }

    #[test]
    fn schedule_must_align_with_grid() {
        let c = ControllerConfig::Schedule(DoseSchedule::experiment(1).unwrap());
        let sc = SimConfig {
            dt: 0.07,
            t_end: 70.0,
            ..SimConfig::default()
        };
        assert!(matches!(simulate(&P, &O, &c, &sc), Err(Error::Validation(_))));
    }

    #[test]
    fn schedule_switches_at_boundaries() {
        let c = ControllerConfig::Schedule(DoseSchedule::experiment(4).unwrap());
        let sc = SimConfig {
            record_stride: 1,
            ..SimConfig::default()
        };
        let tr = simulate(&P, &O, &c, &sc).unwrap();
        let at = |t: f64| tr.records.iter().find(|r| (r.t - t).abs() < 1e-9).unwrap().u;
        assert_relative_eq!(at(23.99) * 5.8425, 320.0, max_relative = 1e-12);
        assert_relative_eq!(at(24.0) * 5.8425, 80.0, max_relative = 1e-12);
        assert_relative_eq!(at(48.0) * 5.8425, 40.0, max_relative = 1e-12);
    }

    #[test]
    fn invalid_initial_population_rejected() {
        let sc = SimConfig {
            ics: InitialConditions {
                x1: 1e8,
                ..InitialConditions::PUBLISHED
            },
            ..SimConfig::default()
        };
        assert!(simulate(&P, &O, &ControllerConfig::Zero, &sc).is_err());
    }

    #[test]
    fn envelope_checker_flags_growth() {
        let sc = SimConfig::default();
        let tr = simulate(&P, &O, &ControllerConfig::Zero, &sc).unwrap();
        let v = check_envelope(&tr.records, sc.ics.x1, 0.024);
        assert!(!v.is_empty());
        assert!(v.iter().all(|v| v.value > v.bound));
    }

    #[test]
    fn observer_checker_reports_rather_than_asserts() {
        // lambda far above sigma^2 beta_m, observer starts at zero and gamma = 0
        let bad = ObserverParams {
            lambda: 1.0,
            gamma: 0.0,
        };
        let sc = SimConfig {
            ics: InitialConditions {
                x2_hat: 0.0,
                ..InitialConditions::PUBLISHED
            },
            ..SimConfig::default()
        };
        let tr = simulate(&P, &bad, &ControllerConfig::Zero, &sc).unwrap();
        assert_eq!(tr.warnings.len(), 2);
        let v = check_observer_bound(&tr.records, bad.lambda, 4.8, 0.0);
        assert!(!v.is_empty());
    }

    #[test]
    fn observer_checker_trivial_zero_case() {
        let sc = SimConfig {
            ics: InitialConditions {
                x1: 0.0,
                x2: 0.0,
                x2_hat: 0.0,
                x2_abs_bound: None,
            },
            ..SimConfig::default()
        };
        let tr = simulate(&P, &O, &ControllerConfig::Zero, &sc).unwrap();
        assert!(tr.records.iter().all(|r| r.x1 == 0.0 && r.x2 == 0.0));
        assert!(check_observer_bound(&tr.records, O.lambda, 0.0, 0.0).is_empty());
    }

    #[test]
    fn observer_converges_for_constant_output() {
        // Population pinned at 0 or K keeps y constant.
        let sc = SimConfig {
            t_end: 10.0 / O.lambda,
            dt: 10.0 / O.lambda / 20_000.0,
            record_stride: 1000,
            ics: InitialConditions {
                x1: P.k(),
                x2: 0.0,
                x2_hat: 0.0,
                x2_abs_bound: None,
            },
            profile: Profile::Paper,
        };
        let tr = simulate(&P, &O, &ControllerConfig::Zero, &sc).unwrap();
        let target = O.gamma * P.k() / O.lambda;
        let last = tr.last().unwrap();
        assert_eq!(last.x1, P.k());
        assert!((last.x2_hat - target).abs() < 1e-3 * target);
        assert!(tr.records.iter().all(|r| r.x2_hat >= 0.0));
    }

    #[test]
    fn population_interpolation() {
        let sc = SimConfig {
            t_end: 1.0,
            dt: 0.5,
            record_stride: 1,
            ..SimConfig::default()
        };
        let tr = simulate(&P, &O, &ControllerConfig::Zero, &sc).unwrap();
        let (a, b) = (tr.records[0].x1, tr.records[1].x1);
        assert_relative_eq!(tr.population_at(0.25).unwrap(), 0.5 * (a + b));
        assert_eq!(tr.population_at(0.5).unwrap(), b);
        assert!(tr.population_at(1.5).is_none());
    }
}
