//! Dose laws: zero, known-parameter constant dose, adaptive output feedback
//! and piecewise-constant schedules.
//!
//! All doses are μg/ml internally. Schedules are stored in μM and converted
//! when evaluated.

use serde::Serialize;

use crate::analysis::{convert_dose, DoseUnit};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Designer bounds for the adaptive output-feedback law
/// `u = (r0_bar |y| + beta_m_bar |x2_hat| + eta) / beta_d_low`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptiveConfig {
    /// Upper bound on `r0 / K`.
    pub r0_bar: f64,
    /// Upper bound on `beta_m`.
    pub beta_m_bar: f64,
    /// Lower bound on `beta_d`.
    pub beta_d_low: f64,
    pub eta: f64,
    /// Target exponential decay rate of the output, 1/h.
    pub delta: f64,
}

impl AdaptiveConfig {
    /// Controller constants used for the published closed-loop simulation.
    /// Note `eta = delta`, which does not satisfy the eta condition.
    pub const PUBLISHED: AdaptiveConfig = AdaptiveConfig {
        r0_bar: 3e-9,
        beta_m_bar: 0.05,
        beta_d_low: 0.007,
        eta: 0.024,
        delta: 0.024,
    };

    pub fn new(r0_bar: f64, beta_m_bar: f64, beta_d_low: f64, eta: f64, delta: f64) -> Result<Self> {
        let failed: Vec<String> = [
            ("r0_bar", r0_bar),
            ("beta_m_bar", beta_m_bar),
            ("beta_d_low", beta_d_low),
            ("eta", eta),
            ("delta", delta),
        ]
        .into_iter()
        .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
        .map(|(name, v)| format!("controller.{name} must be finite and > 0 (got {v})"))
        .collect();
        if failed.is_empty() {
            Ok(AdaptiveConfig {
                r0_bar,
                beta_m_bar,
                beta_d_low,
                eta,
                delta,
            })
        } else {
            Err(Error::Validation(failed))
        }
    }

    pub fn dose(&self, y: f64, x2_hat: f64) -> f64 {
        (self.r0_bar * y.abs() + self.beta_m_bar * x2_hat.abs() + self.eta) / self.beta_d_low
    }

    /// Same bounds with `eta` replaced by [`min_eta`].
    pub fn with_min_eta(&self, x2_0_abs: f64, x2_hat_0_abs: f64) -> Result<Self> {
        Ok(AdaptiveConfig {
            eta: min_eta(self.beta_m_bar, x2_0_abs, x2_hat_0_abs, self.delta)?,
            ..*self
        })
    }
}

/// Known-parameter constant dose `(r0 + beta_m sqrt(w_m/2) + delta) / beta_d`.
pub fn constant_dose(p: &ModelParams, delta: f64) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::domain(format!("delta must be > 0 (got {delta})")));
    }
    Ok((p.r0() + p.beta_m() * (p.w_m() / 2.0).sqrt() + delta) / p.beta_d())
}

/// Smallest eta for which the exponential envelope is guaranteed:
/// `beta_m_bar (|x2(0)| + |x2_hat(0)|) + delta`.
pub fn min_eta(beta_m_bar: f64, x2_0_abs: f64, x2_hat_0_abs: f64, delta: f64) -> Result<f64> {
    if !(beta_m_bar >= 0.0 && x2_0_abs >= 0.0 && x2_hat_0_abs >= 0.0) {
        return Err(Error::domain("min_eta needs non-negative bounds"));
    }
    if !(delta > 0.0) {
        return Err(Error::domain(format!("delta must be > 0 (got {delta})")));
    }
    Ok(beta_m_bar * x2_0_abs + beta_m_bar * x2_hat_0_abs + delta)
}

pub fn clamp_nonneg(u: f64) -> f64 {
    if u < 0.0 {
        log::warn!("dose saturated at 0 (requested {u})");
        0.0
    } else {
        u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveReport {
    pub conditions: Vec<Condition>,
}

impl AdaptiveReport {
    pub fn passes(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<String> {
        self.conditions
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} fails: {:e} vs threshold {:e}", c.name, c.value, c.threshold))
            .collect()
    }
}

/// Checks the designer bounds against a (nominal) parameter set and the
/// initial magnitudes `|x2(0)|`, `|x2_hat(0)|`. All inequalities are strict.
/// Name of the dosing-margin condition in [`AdaptiveReport`]; its threshold
/// is [`min_eta`].
pub const ETA_CONDITION: &str = "eta >= beta_m_bar (|x2(0)| + |x2_hat(0)|) + delta";

pub fn validate_adaptive(
    c: &AdaptiveConfig,
    p: &ModelParams,
    x2_0_abs: f64,
    x2_hat_0_abs: f64,
) -> AdaptiveReport {
    let eta_min = c.beta_m_bar * x2_0_abs + c.beta_m_bar * x2_hat_0_abs + c.delta;
    let r0_k = p.r0() / p.k();
    AdaptiveReport {
        conditions: vec![
            Condition {
                name: "r0_bar > r0/K",
                value: c.r0_bar,
                threshold: r0_k,
                pass: c.r0_bar > r0_k,
            },
            Condition {
                name: "beta_m_bar > beta_m",
                value: c.beta_m_bar,
                threshold: p.beta_m(),
                pass: c.beta_m_bar > p.beta_m(),
            },
            Condition {
                name: "beta_d_low < beta_d",
                value: c.beta_d_low,
                threshold: p.beta_d(),
                pass: c.beta_d_low < p.beta_d(),
            },
            Condition {
                name: ETA_CONDITION,
                value: c.eta,
                threshold: eta_min,
                pass: c.eta >= eta_min,
            },
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoseSegment {
    /// Segment start, hours.
    pub start: f64,
    /// Dose, μM.
    pub dose_um: f64,
}

/// Piecewise-constant, right-continuous dose profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoseSchedule {
    segments: Vec<DoseSegment>,
}

impl DoseSchedule {
    pub fn new(segments: Vec<DoseSegment>) -> Result<Self> {
        let mut failed = Vec::new();
        match segments.first() {
            None => failed.push("schedule has no segments".to_string()),
            Some(s) if s.start != 0.0 => failed.push(format!(
                "first schedule segment must start at 0 h (got {})",
                s.start
            )),
            _ => {}
        }
        for w in segments.windows(2) {
            if !(w[1].start > w[0].start) {
                failed.push(format!(
                    "schedule starts must be strictly increasing ({} then {})",
                    w[0].start, w[1].start
                ));
            }
        }
        for s in &segments {
            if !(s.dose_um.is_finite() && s.dose_um >= 0.0) {
                failed.push(format!(
                    "schedule dose must be >= 0 (got {} at {} h)",
                    s.dose_um, s.start
                ));
            }
            if !s.start.is_finite() {
                failed.push(format!("schedule start must be finite (got {})", s.start));
            }
        }
        if failed.is_empty() {
            Ok(DoseSchedule { segments })
        } else {
            Err(Error::Validation(failed))
        }
    }

    /// Metronidazole exposure of the four in-vitro experiments: 320 μM at
    /// 0 h, then re-dosing at 24 h and 48 h.
    pub fn experiment(experiment: u8) -> Result<Self> {
        let (d24, d48) = match experiment {
            1 => (240.0, 180.0),
            2 => (240.0, 160.0),
            3 => (160.0, 80.0),
            4 => (80.0, 40.0),
            n => return Err(Error::domain(format!("no experiment {n} (expected 1-4)"))),
        };
        DoseSchedule::new(vec![
            DoseSegment {
                start: 0.0,
                dose_um: 320.0,
            },
            DoseSegment {
                start: 24.0,
                dose_um: d24,
            },
            DoseSegment {
                start: 48.0,
                dose_um: d48,
            },
        ])
    }

    pub fn segments(&self) -> &[DoseSegment] {
        &self.segments
    }

    fn segment_at(&self, t: f64) -> Result<&DoseSegment> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("schedule queried at t = {t} h")));
        }
        let idx = self.segments.partition_point(|s| s.start <= t);
        Ok(&self.segments[idx - 1])
    }

    pub fn dose_um_at(&self, t: f64) -> Result<f64> {
        Ok(self.segment_at(t)?.dose_um)
    }

    /// Dose at time `t`, μg/ml.
    pub fn dose_at(&self, t: f64) -> Result<f64> {
        convert_dose(self.segment_at(t)?.dose_um, DoseUnit::MicroMolar)
    }

    /// `∫_0^t_end u dt` in μg/ml·h.
    pub fn integrated_dose(&self, t_end: f64) -> f64 {
        self.segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let end = self.segments.get(i + 1).map_or(t_end, |n| n.start.min(t_end));
                let width = (end - s.start).max(0.0);
                width * convert_dose(s.dose_um, DoseUnit::MicroMolar).unwrap_or(0.0)
            })
            .sum()
    }
}

/// Dose strategy driving a simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum ControllerConfig {
    Zero,
    /// Known-parameter constant dose for decay rate `delta`.
    Constant {
        delta: f64,
    },
    Adaptive(AdaptiveConfig),
    Schedule(DoseSchedule),
}

impl ControllerConfig {
    /// Decay rate whose envelope this strategy certifies, if any.
    pub fn decay_rate(&self) -> Option<f64> {
        match self {
            ControllerConfig::Constant { delta } => Some(*delta),
            ControllerConfig::Adaptive(c) => Some(c.delta),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ControllerConfig::Zero => "open-loop",
            ControllerConfig::Constant { .. } => "constant",
            ControllerConfig::Adaptive(_) => "adaptive",
            ControllerConfig::Schedule(_) => "schedule",
        }
    }

    /// Dose in μg/ml. `t` selects the schedule segment; `y` and `x2_hat` feed
    /// the adaptive law.
    pub fn dose(&self, p: &ModelParams, t: f64, y: f64, x2_hat: f64) -> Result<f64> {
        let u = match self {
            ControllerConfig::Zero => 0.0,
            ControllerConfig::Constant { delta } => constant_dose(p, *delta)?,
            ControllerConfig::Adaptive(c) => c.dose(y, x2_hat),
            ControllerConfig::Schedule(s) => s.dose_at(t)?,
        };
        Ok(clamp_nonneg(u))
    }
}
