//! Base/detail/noise decomposition of a quaternion image by ADMM.

mod config;
mod solver;

pub use config::QfedConfig;
pub use solver::{
    decompose, write_trace_csv, Block, IterationRecord, QfedResult, QfedSolver, QfedState,
};
