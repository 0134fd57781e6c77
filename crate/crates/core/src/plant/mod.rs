//! Microscopic-enough traffic plant: signalized grid, point queues with
//! spillback, time-dependent shortest-path routing.

mod loader;
mod routing;
mod signal;
mod sim;

pub use loader::{all_pairs, DemandLoader, DemandMode, OdPair};
pub use routing::{path_cost, shortest_path};
pub(crate) use signal::proportional_with_floor as split_with_floor;
pub use signal::{webster_splits, SignalPlan, SignalTiming};
pub use sim::{
    supply_veh_h, Conservation, CycleCounters, LinkState, Plant, PlantConfig, Vehicle, VehicleId,
};
