//! Dataset loaders, experiment drivers and CSV reporting for the
//! complex-step Newton-Krylov optimizer in `csnk-core`.

pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod records;
pub mod studies;

pub use data::Dataset;
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, train, ExperimentSpec, ModelKind, OptimizerKind, Run};
pub use records::RunRecord;
