//! Simulator and learners for a UAV-powered aerial-IRS IoT network.
//!
//! A multi-antenna MUAV serves ground nodes through an IRS carried by a
//! second UAV (the AUAV) and can recharge it wirelessly in flight.

pub mod channel;
pub mod config;
pub mod energy;
pub mod env;
pub mod nn;
pub mod agents;

pub use channel::{ArrayConfig, ChannelError, Geometry, Point, PropagationParams};
pub use config::{Algorithm, ConfigError, EnvParams, ExperimentConfig, Mode, TrainParams};
pub use energy::{EnergyModel, RotorParams};
pub use env::{AgentAction, Environment, OptionId, StepOutcome, WorldState};
