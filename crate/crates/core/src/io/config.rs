//! JSON run configuration.
//!
//! ```json
//! {
//!   "model":      { "r0": 0.179527, "K": 6.596e7, "beta_d": 0.00874109,
//!                   "beta_m": 0.04162605, "w_m": 45.8677, "sigma": 0.52947229225 },
//!   "observer":   { "lambda": 0.0114, "gamma": 1.7e-9 },
//!   "controller": { "strategy": "adaptive", "delta": 0.024, "r0_bar": 3e-9,
//!                   "beta_m_bar": 0.05, "beta_d_low": 0.007, "eta": 0.024,
//!                   "schedule": [[0, 320], [24, 240], [48, 180]] },
//!   "sim":        { "t_end": 60, "dt": 0.01, "record_stride": 10, "x1_0": 1e5,
//!                   "x2_0": 4.8, "x2_hat_0": 11.25, "x2_abs_bound": null,
//!                   "profile": "paper" },
//!   "ranges":     { "r0": [0.16, 0.20], "K": [...], ... }
//! }
//! ```
//!
//! `ranges` is optional, as are `schedule` and `x2_abs_bound`. Unknown keys
//! are rejected everywhere.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::analysis::UncertaintyRanges;
use crate::control::{AdaptiveConfig, ControllerConfig, DoseSchedule, DoseSegment};
use crate::error::{Error, Result};
use crate::model::{ModelParams, PlantState};
use crate::observer::ObserverParams;
use crate::sim::{InitialConditions, Profile, SimConfig};

/// Configuration reproducing the published simulation set-up.
pub const DEFAULT_CONFIG: &str = include_str!("../../../../data/default.json");

const SECTIONS: [&str; 5] = ["model", "observer", "controller", "sim", "ranges"];
const REQUIRED: [&str; 4] = ["model", "observer", "controller", "sim"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StrategyName {
    OpenLoop,
    Constant,
    Adaptive,
    Schedule,
}

/// Strategy selector as given on the command line:
/// `open-loop | constant | adaptive | schedule[:<file>]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    OpenLoop,
    Constant,
    Adaptive,
    /// Schedule from a CSV file, or from the config when `None`.
    Schedule(Option<PathBuf>),
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "open-loop" | "zero" => Ok(Strategy::OpenLoop),
            "constant" => Ok(Strategy::Constant),
            "adaptive" => Ok(Strategy::Adaptive),
            "schedule" => Ok(Strategy::Schedule(None)),
            _ => match s.strip_prefix("schedule:") {
                Some(path) if !path.is_empty() => Ok(Strategy::Schedule(Some(PathBuf::from(path)))),
                _ => Err(format!(
                    "unknown strategy '{s}' (expected open-loop, constant, adaptive or schedule:<file>)"
                )),
            },
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::OpenLoop => f.write_str("open-loop"),
            Strategy::Constant => f.write_str("constant"),
            Strategy::Adaptive => f.write_str("adaptive"),
            Strategy::Schedule(None) => f.write_str("schedule"),
            Strategy::Schedule(Some(p)) => write!(f, "schedule:{}", p.display()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    observer: RawObserver,
    controller: RawController,
    sim: RawSim,
    ranges: Option<UncertaintyRanges>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    r0: f64,
    #[serde(rename = "K")]
    k: f64,
    beta_d: f64,
    beta_m: f64,
    w_m: f64,
    sigma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObserver {
    lambda: f64,
    gamma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    strategy: StrategyName,
    delta: Option<f64>,
    r0_bar: Option<f64>,
    beta_m_bar: Option<f64>,
    beta_d_low: Option<f64>,
    eta: Option<f64>,
    schedule: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    t_end: f64,
    dt: f64,
    record_stride: usize,
    x1_0: f64,
    x2_0: f64,
    x2_hat_0: f64,
    #[serde(default)]
    x2_abs_bound: Option<f64>,
    #[serde(default)]
    profile: Profile,
}

/// All controller constants from the config, independent of which strategy
/// is finally selected.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSpec {
    pub delta: Option<f64>,
    pub r0_bar: Option<f64>,
    pub beta_m_bar: Option<f64>,
    pub beta_d_low: Option<f64>,
    pub eta: Option<f64>,
    pub schedule: Option<Vec<(f64, f64)>>,
}

impl ControllerSpec {
    fn require(&self, name: &str, v: Option<f64>) -> Result<f64> {
        v.ok_or_else(|| Error::Validation(vec![format!("controller.{name} is required for this strategy")]))
    }

    pub fn adaptive(&self) -> Result<AdaptiveConfig> {
        AdaptiveConfig::new(
            self.require("r0_bar", self.r0_bar)?,
            self.require("beta_m_bar", self.beta_m_bar)?,
            self.require("beta_d_low", self.beta_d_low)?,
            self.require("eta", self.eta)?,
            self.require("delta", self.delta)?,
        )
    }

    /// Builds the controller for `strategy`; schedule files are read here.
    pub fn build(&self, strategy: &Strategy) -> Result<ControllerConfig> {
        match strategy {
            Strategy::OpenLoop => Ok(ControllerConfig::Zero),
            Strategy::Constant => {
                let delta = self.require("delta", self.delta)?;
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(Error::Validation(vec![format!(
                        "controller.delta must be finite and > 0 (got {delta})"
                    )]));
                }
                Ok(ControllerConfig::Constant { delta })
            }
            Strategy::Adaptive => Ok(ControllerConfig::Adaptive(self.adaptive()?)),
            Strategy::Schedule(Some(path)) => match super::tables::read_experiment_csv(path)? {
                super::tables::ExperimentData::Schedule(s) => Ok(ControllerConfig::Schedule(s)),
                super::tables::ExperimentData::Counts(_) => Err(Error::Config(format!(
                    "{} holds counts (t_hours,value), not a dose schedule (t_hours,dose_uM)",
                    path.display()
                ))),
            },
            Strategy::Schedule(None) => {
                let rows = self.schedule.as_ref().ok_or_else(|| {
                    Error::Validation(vec![
                        "controller.schedule is required for the schedule strategy".into()
                    ])
                })?;
                let segments = rows
                    .iter()
                    .map(|&(start, dose_um)| DoseSegment { start, dose_um })
                    .collect();
                Ok(ControllerConfig::Schedule(DoseSchedule::new(segments)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub observer: ObserverParams,
    /// Strategy named in the config.
    pub strategy: Strategy,
    pub controller_spec: ControllerSpec,
    /// Controller built from `strategy` and `controller_spec`.
    pub controller: ControllerConfig,
    pub sim: SimConfig,
    pub ranges: Option<UncertaintyRanges>,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config_str(DEFAULT_CONFIG, Path::new("<default>")).expect("shipped default config is valid")
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, path)
}

/// Parses and validates a config; `origin` is only used in error messages.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<RunConfig> {
    let parse_err = |e: serde_json::Error| Error::Parse {
        path: origin.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    };

    let value: serde_json::Value = if text.trim().is_empty() {
        serde_json::Value::Object(Default::default())
    } else {
        serde_json::from_str(text).map_err(parse_err)?
    };
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Config("top level must be a JSON object".into()))?;
    if let Some(k) = obj.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown section: {k}")));
    }
    if let Some(missing) = REQUIRED.iter().find(|s| !obj.contains_key(**s)) {
        return Err(Error::Config(format!("missing required section: {missing}")));
    }

    let raw: RawConfig = serde_json::from_str(text).map_err(parse_err)?;
    let mut failed = Vec::new();
    let mut collect = |e: Error| match e {
        Error::Validation(v) => failed.extend(v),
        other => failed.push(other.to_string()),
    };

    let m = &raw.model;
    let model = ModelParams::new(m.r0, m.k, m.beta_d, m.beta_m, m.w_m, m.sigma)
        .map_err(&mut collect)
        .ok();
    let observer = ObserverParams {
        lambda: raw.observer.lambda,
        gamma: raw.observer.gamma,
    };
    if let Err(e) = observer.check_finite() {
        collect(e);
    }

    let c = raw.controller;
    let strategy = match c.strategy {
        StrategyName::OpenLoop => Strategy::OpenLoop,
        StrategyName::Constant => Strategy::Constant,
        StrategyName::Adaptive => Strategy::Adaptive,
        StrategyName::Schedule => Strategy::Schedule(None),
    };
    let controller_spec = ControllerSpec {
        delta: c.delta,
        r0_bar: c.r0_bar,
        beta_m_bar: c.beta_m_bar,
        beta_d_low: c.beta_d_low,
        eta: c.eta,
        schedule: c.schedule,
    };
    let controller = controller_spec.build(&strategy).map_err(&mut collect).ok();

    let s = raw.sim;
    let sim = SimConfig {
        t_end: s.t_end,
        dt: s.dt,
        record_stride: s.record_stride,
        ics: InitialConditions {
            x1: s.x1_0,
            x2: s.x2_0,
            x2_hat: s.x2_hat_0,
            x2_abs_bound: s.x2_abs_bound,
        },
        profile: s.profile,
    };
    if let Err(e) = sim.steps() {
        collect(e);
    }
    if let Some(b) = s.x2_abs_bound {
        if !(b >= 0.0 && b.is_finite()) {
            collect(Error::Validation(vec![format!(
                "sim.x2_abs_bound must be >= 0 (got {b})"
            )]));
        }
    }
    if let Some(p) = &model {
        if let Err(e) = PlantState::initial(p, s.x1_0, s.x2_0) {
            collect(e);
        }
    }
    if !s.x2_hat_0.is_finite() {
        collect(Error::Validation(vec![format!(
            "sim.x2_hat_0 must be finite (got {})",
            s.x2_hat_0
        )]));
    }
    if let Some(r) = &raw.ranges {
        if let Err(e) = r.validate() {
            collect(e);
        }
    }

    match (model, controller) {
        (Some(model), Some(controller)) if failed.is_empty() => Ok(RunConfig {
            model,
            observer,
            strategy,
            controller_spec,
            controller,
            sim,
            ranges: raw.ranges,
        }),
        _ => Err(Error::Validation(failed)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config_str(text, Path::new("test.json"))
    }

    #[test]
    fn default_config_is_published_set() {
        let c = RunConfig::default();
        assert_eq!(c.model, ModelParams::PUBLISHED);
        assert_eq!(c.model.r0(), 0.179527);
        assert_eq!(c.model.k(), 6.596e7);
        assert_eq!(c.model.beta_d(), 0.00874109);
        assert_eq!(c.model.beta_m(), 0.04162605);
        assert_eq!(c.model.w_m(), 45.8677);
        assert_eq!(c.model.sigma(), 0.52947229225);
        assert_eq!(c.observer, ObserverParams::PUBLISHED);
        assert_eq!(
            c.controller,
            ControllerConfig::Adaptive(AdaptiveConfig::PUBLISHED)
        );
        assert_eq!(c.sim.ics, InitialConditions::PUBLISHED);
        assert_eq!(c.sim.profile, Profile::Paper);
    }

    #[test]
    fn empty_file_names_missing_section() {
        let err = parse("").unwrap_err();
        assert_eq!(
            err.to_string(),
            "configuration error: missing required section: model"
        );
        assert!(parse("  \n").is_err());
    }

    fn with_model_k(k: &str) -> String {
        DEFAULT_CONFIG.replace("\"K\": 6.596e7", &format!("\"K\": {k}"))
    }

    #[test]
    fn negative_k_names_invariant() {
        let text = with_model_k("-6.596e7");
        assert_ne!(text, DEFAULT_CONFIG);
        match parse(&text).unwrap_err() {
            Error::Validation(v) => assert!(v.iter().any(|m| m.contains("model.K must be finite and > 0"))),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line() {
        let text = "{\n  \"model\": {\n    \"r0\": ,\n  }\n}";
        match parse(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = DEFAULT_CONFIG.replace("\"lambda\"", "\"lamda\"");
        assert!(matches!(parse(&text), Err(Error::Parse { .. })));
        let text = DEFAULT_CONFIG.replacen('{', "{\"extra\": 1, ", 1);
        assert_eq!(
            parse(&text).unwrap_err().to_string(),
            "configuration error: unknown section: extra"
        );
    }

    #[test]
    fn multiple_failures_listed() {
        let text = with_model_k("-1").replace("\"dt\": 0.01", "\"dt\": -0.01");
        match parse(&text).unwrap_err() {
            Error::Validation(v) => assert!(v.len() >= 2, "{v:?}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn strategies_parse() {
        assert_eq!("open-loop".parse::<Strategy>().unwrap(), Strategy::OpenLoop);
        assert_eq!(
            "schedule:data/x.csv".parse::<Strategy>().unwrap(),
            Strategy::Schedule(Some("data/x.csv".into()))
        );
        assert!("schedule:".parse::<Strategy>().is_err());
        assert!("pid".parse::<Strategy>().is_err());
        assert_eq!(
            Strategy::Schedule(Some("a.csv".into())).to_string(),
            "schedule:a.csv"
        );
    }

    #[test]
    fn inline_schedule() {
        let c = RunConfig::default();
        let ctl = c.controller_spec.build(&Strategy::Schedule(None)).unwrap();
        assert_eq!(
            ctl,
            ControllerConfig::Schedule(DoseSchedule::experiment(1).unwrap())
        );
    }
}
