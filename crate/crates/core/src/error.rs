use crate::bench::BenchError;
use crate::config::ConfigError;
use crate::geometry::GeometryError;
use crate::graph::GraphError;
use crate::kinematics::KinematicsError;
use crate::metrics::MetricsError;
use crate::model_io::ModelIoError;
use crate::mpnn::MpnnError;
use crate::optim::OptimError;
use crate::pitch::PitchError;
use crate::snapshot::SnapshotError;
use crate::state::StateError;
use crate::synth::GeneratorError;
use crate::train::TrainError;

/// Every failure the library can report, grouped for CLI exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Pitch(#[from] PitchError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mpnn(#[from] MpnnError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    ModelIo(#[from] ModelIoError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Short category name, also used to pick the process exit code.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Pitch(_) | Error::Geometry(_) | Error::Generator(_) | Error::Config(_) => {
                "config"
            }
            Error::State(_) | Error::Snapshot(_) | Error::Kinematics(_) | Error::Graph(_) => "data",
            Error::Mpnn(_) | Error::Optim(_) | Error::Train(_) | Error::ModelIo(_) => "model",
            Error::Metrics(_) | Error::Bench(_) => "evaluation",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
