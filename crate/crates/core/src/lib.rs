//! Two-class semantics-aware wireless networked control over a finite compute
//! pool: Age of Actuation, Cost of Missing Actuation, exact and approximate
//! queue engines, a slot-level simulator and a Pareto grid search.

pub mod channel;
pub mod config;
pub mod engine;
pub mod erlang;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod linalg;
pub mod markov;
pub mod metrics;
pub mod pareto;
pub mod pool;
pub mod queue_det;
pub mod queue_geo;
pub mod report;
pub mod sim;
pub mod special;

pub use config::{Preset, SystemConfig, TaskId};
pub use engine::{Engine, EngineOptions};
pub use error::{Error, Result};
pub use metrics::{Age, MetricsReport};
