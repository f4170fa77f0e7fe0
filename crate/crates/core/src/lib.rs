//! 2D TM microwave inverse scattering with alternating contrast-source
//! updates and a neural representation of the material maps.

pub mod batch;
pub mod cli;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod greens;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod mie;
pub mod scalar;
pub mod special;
pub mod train;

pub use error::{Error, Result};
pub use scalar::{Real, C};

/// Double-precision instantiations.
pub type MeasurementSet64 = forward::MeasurementSet<f64>;
pub type Problem64 = loss::Problem<f64>;
pub type NetworkState64 = net::NetworkState<f64>;
pub type TrainRun64 = train::TrainRun<f64>;

/// Single-precision instantiations.
pub type MeasurementSet32 = forward::MeasurementSet<f32>;
pub type Problem32 = loss::Problem<f32>;
pub type NetworkState32 = net::NetworkState<f32>;
pub type TrainRun32 = train::TrainRun<f32>;
