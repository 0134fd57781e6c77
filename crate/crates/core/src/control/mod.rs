//! Perimeter gating controllers.
//!
//! Everything here is written against [`Scalar`](crate::Scalar) so the same
//! control law can be evaluated in `f32`, `f64`, or any other float type.
//!
//! Units: densities in veh/km, flows in veh/h, region length in meters at
//! the interface (converted to km internally), time steps in seconds at the
//! interface (converted to hours internally). `λ` is in 1/h and `η`, `α`,
//! `β` are in veh/km/h.

mod activation;
mod green;
mod pic;
mod smc;
mod switching;
mod tune;

pub use activation::{Activation, Transition};
pub use green::{green_allocation, EntryApproach, GreenAllocation, GreenLimits};
pub use pic::{pic_command, PicConfig, PicState, PicStep};
pub use smc::{
    activation_reaching_bound, lyapunov_value, reaching_time_bound, sliding_value, smc_command,
    SmcConfig, SmcInput, SmcState, SmcStep,
};
pub use switching::{switching, Switching, SwitchingKind};
pub use tune::{pic_tune, PicTuning, TuningFlag};
