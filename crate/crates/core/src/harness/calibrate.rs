//! Demand calibration: scale the profile peak until the uncontrolled run
//! congests to a target band above the set point.

use serde::{Deserialize, Serialize};

use super::scenario::{run_scenario, ControllerSpec, ScenarioSpec};
use crate::error::{Error, Result};
use crate::network::{Network, ProtectedRegion};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTarget {
    /// Band for the uncontrolled peak density, as multiples of k̄.
    pub low_ratio: f64,
    pub high_ratio: f64,
    /// Search bracket for the peak rate, veh/h per OD pair.
    pub peak_min_veh_h: f64,
    pub peak_max_veh_h: f64,
    pub max_iterations: u32,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        Self {
            low_ratio: 1.2,
            high_ratio: 1.6,
            peak_min_veh_h: 1.0,
            peak_max_veh_h: 72.0,
            max_iterations: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub peak_veh_h: f64,
    pub peak_density_veh_km: f64,
    pub kbar_veh_per_km: f64,
    pub iterations: u32,
    pub within_band: bool,
    /// Summed over every trial run.
    pub conservation_violations: u64,
}

/// Bisects the peak rate of `base.demand` (base rate held) on uncontrolled
/// runs. Returns the last rate tried if the band is never hit.
pub fn calibrate_demand(
    network: &Network,
    region: &ProtectedRegion,
    base: &ScenarioSpec,
    target: &CalibrationTarget,
) -> Result<CalibrationOutcome> {
    if !(target.low_ratio < target.high_ratio) || !(target.peak_min_veh_h < target.peak_max_veh_h) {
        return Err(Error::param("calibration", "empty search band"));
    }
    let kbar = base.gating.kbar_veh_per_km;
    let (lo_k, hi_k) = (target.low_ratio * kbar, target.high_ratio * kbar);
    let mut lo = target.peak_min_veh_h;
    let mut hi = target.peak_max_veh_h;
    let mut last = None;
    let mut violations = 0;
    for it in 1..=target.max_iterations.max(1) {
        let peak = 0.5 * (lo + hi);
        let mut spec = base.clone();
        spec.controller = ControllerSpec::None;
        spec.demand.peak_veh_h = peak;
        let res = run_scenario(network, region, &spec)?;
        let pk = res.peak_density();
        violations += res.conservation_violations;
        log::info!("calibration {it}: peak {peak:.3} veh/h/pair -> peak density {pk:.2} veh/km");
        let within = (lo_k..=hi_k).contains(&pk);
        last = Some(CalibrationOutcome {
            peak_veh_h: peak,
            peak_density_veh_km: pk,
            kbar_veh_per_km: kbar,
            iterations: it,
            within_band: within,
            conservation_violations: violations,
        });
        if within {
            break;
        }
        if pk < lo_k {
            lo = peak;
        } else {
            hi = peak;
        }
    }
    Ok(last.expect("at least one iteration"))
}
