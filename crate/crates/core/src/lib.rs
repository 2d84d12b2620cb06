//! Simulation and verification toolkit for drug-dosage control of a
//! *Giardia lamblia* population with drug resistance acquired by mutation.
//!
//! The plant ([`model`]) is observed only through its population. A scalar
//! norm observer ([`observer`]) bounds the unmeasured mutation state, which
//! the adaptive dose law ([`control`]) uses to force exponential decay of the
//! population. [`sim`] integrates the closed loop and checks the certified
//! inequalities; [`analysis`] holds closed-form bounds, metrics and Monte
//! Carlo robustness sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod control;
pub mod error;
pub mod io;
pub mod model;
pub mod observer;
pub mod sim;

pub use control::{AdaptiveConfig, ControllerConfig, DoseSchedule, DoseSegment};
pub use error::{Error, Result};
pub use model::{Derivative, Equilibrium, ModelParams, PlantState};
pub use observer::{ObserverParams, ObserverState};
pub use sim::{simulate, InitialConditions, Profile, SimConfig, Trajectory, TrajectoryRecord};
