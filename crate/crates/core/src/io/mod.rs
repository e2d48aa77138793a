//! Run configuration, experiment presets, and VTK/CSV export.

pub mod config;
pub mod report;
pub mod runner;
pub mod vtk;


// pub use runner::{run, RunArtifacts};
