//! Passer-centric star graphs and a message-passing network for predicting
//! the receiver of a football pass.

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod config;
mod error;
pub mod geometry;
pub mod graph;
pub mod kinematics;
pub mod kpi;
pub mod metrics;
pub mod model_io;
pub mod mpnn;
pub mod nn;
pub mod optim;
pub mod pipeline;
pub mod pitch;
pub mod report;
pub mod snapshot;
pub mod state;
pub mod synth;
pub mod train;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use geometry::GeometryConfig;
pub use graph::{build_graph, FeatureScaler, GraphBatch, PassGraph};
pub use mpnn::{Aggregator, MpnnConfig, MpnnModel};
pub use pitch::PitchSpec;
pub use state::{GameState, PassLabel, PlayerId, PlayerState, Role};
