//! Perimeter flow control for a protected urban region.
//!
//! The crate holds the grid network model, a queue-based traffic plant,
//! detector emulation with network fundamental diagram (NFD) aggregation,
//! the sliding-mode and proportional-integral perimeter controllers, and an
//! experiment harness that ties them together.
//!
//! Controller and sensing code is generic over [`Scalar`]; the aliases at
//! the bottom fix it to `f64` (and `f32` where useful).

pub mod config;
pub mod control;
pub mod demand;
pub mod error;
pub mod harness;
pub mod network;
pub mod plant;
pub mod scalar;
pub mod sensing;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SmcConfig64 = control::SmcConfig<f64>;
pub type SmcState64 = control::SmcState<f64>;
pub type SmcInput64 = control::SmcInput<f64>;
pub type PicConfig64 = control::PicConfig<f64>;
pub type PicState64 = control::PicState<f64>;
pub type NfdSample64 = sensing::NfdSample<f64>;
pub type SetPoint64 = sensing::SetPoint<f64>;
pub type SmcConfig32 = control::SmcConfig<f32>;
pub type SmcState32 = control::SmcState<f32>;
