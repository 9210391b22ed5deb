pub mod config;
pub mod corpus;
pub mod diagnostics;
pub mod digest;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod model;
pub mod neural;
pub mod scalar;
pub mod training;
pub mod transforms;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = neural::Tensor<f64>;
pub type Tensor32 = neural::Tensor<f32>;
pub type GazeModel64 = model::GazeModel<f64>;
pub type GazeModel32 = model::GazeModel<f32>;
pub type Bundle64 = model::Bundle<f64>;
pub type Bundle32 = model::Bundle<f32>;
pub type TrainOutcome64 = training::TrainOutcome<f64>;
pub type TrainOutcome32 = training::TrainOutcome<f32>;
