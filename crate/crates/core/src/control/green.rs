//! Conversion of a commanded total inflow into entry-approach green times,
//! `G = C·q_in/q_s`.

use serde::{Deserialize, Serialize};

use crate::network::LinkId;
use crate::scalar::{clamp, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntryApproach<T> {
    pub link: LinkId,
    pub saturation_flow_per_lane: T,
    pub lanes: u32,
    /// Measured upstream demand used to apportion the command; any
    /// non-negative unit works as only ratios matter.
    pub demand: T,
}

impl<T: Scalar> EntryApproach<T> {
    fn saturation(&self) -> T {
        self.saturation_flow_per_lane * T::count(self.lanes as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenLimits<T> {
    pub cycle_s: T,
    pub min_green_s: T,
    pub max_green_s: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreenAllocation<T> {
    pub greens_s: Vec<T>,
    /// Per-entry share of the command, veh/h.
    pub shares_veh_h: Vec<T>,
    /// Inflow the clamped greens would pass at saturation, veh/h.
    pub realized_veh_h: T,
    pub clamped: bool,
}

/// Splits `command_veh_h` across `entries` in proportion to their demand
/// (equal split when no demand is measured) and converts each share to a
/// green time clamped to the limits.
pub fn green_allocation<T: Scalar>(
    command_veh_h: T,
    entries: &[EntryApproach<T>],
    limits: &GreenLimits<T>,
) -> GreenAllocation<T> {
    let n = entries.len();
    if n == 0 {
        return GreenAllocation {
            greens_s: vec![],
            shares_veh_h: vec![],
            realized_veh_h: T::zero(),
            clamped: false,
        };
    }
    let total_demand = entries
        .iter()
        .fold(T::zero(), |acc, e| acc + e.demand.max(T::zero()));
    let shares: Vec<T> = if total_demand > T::zero() {
        entries
            .iter()
            .map(|e| command_veh_h * e.demand.max(T::zero()) / total_demand)
            .collect()
    } else {
        vec![command_veh_h / T::count(n); n]
    };
    let mut clamped = false;
    let mut realized = T::zero();
    let greens = entries
        .iter()
        .zip(&shares)
        .map(|(e, &q)| {
            let raw = limits.cycle_s * q / e.saturation();
            let g = clamp(raw, limits.min_green_s, limits.max_green_s);
            clamped |= g != raw;
            realized = realized + g / limits.cycle_s * e.saturation();
            g
        })
        .collect();
    if clamped {
        log::debug!(
            "green clamp: commanded {:.1} veh/h, greens pass {:.1} veh/h",
            command_veh_h.to_f64().unwrap_or(f64::NAN),
            realized.to_f64().unwrap_or(f64::NAN)
        );
    }
    GreenAllocation {
        greens_s: greens,
        shares_veh_h: shares,
        realized_veh_h: realized,
        clamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(i: u32, demand: f64) -> EntryApproach<f64> {
        EntryApproach {
            link: LinkId(i),
            saturation_flow_per_lane: 1800.0,
            lanes: 1,
            demand,
        }
    }

    const LIMITS: GreenLimits<f64> = GreenLimits {
        cycle_s: 60.0,
        min_green_s: 5.0,
        max_green_s: 56.0,
    };

    #[test]
    fn half_saturation_is_half_cycle() {
        let a = green_allocation(900.0, &[entry(0, 1.0)], &LIMITS);
        assert_eq!(a.greens_s, vec![30.0]);
    }

    #[test]
    fn equal_split_over_eight_entries() {
        let entries: Vec<_> = (0..8).map(|i| entry(i, 10.0)).collect();
        let a = green_allocation(4800.0, &entries, &LIMITS);
        assert!(a.shares_veh_h.iter().all(|&q| (q - 600.0).abs() < 1e-9));
        assert!(a.greens_s.iter().all(|&g| (g - 20.0).abs() < 1e-9));
        assert!(!a.clamped);
    }

    #[test]
    fn no_demand_falls_back_to_equal_split() {
        let entries: Vec<_> = (0..4).map(|i| entry(i, 0.0)).collect();
        let a = green_allocation(2400.0, &entries, &LIMITS);
        assert!(a.greens_s.iter().all(|&g| (g - 20.0).abs() < 1e-9));
    }

    #[test]
    fn minimum_command_hits_min_green() {
        let entries: Vec<_> = (0..8).map(|i| entry(i, 1.0)).collect();
        let a = green_allocation(480.0, &entries, &LIMITS);
        assert!(a.greens_s.iter().all(|&g| g == 5.0));
        assert!(a.clamped);
        assert!(a.realized_veh_h >= 480.0);
    }

    #[test]
    fn demand_proportional() {
        let a = green_allocation(1800.0, &[entry(0, 3.0), entry(1, 1.0)], &LIMITS);
        assert!((a.shares_veh_h[0] - 1350.0).abs() < 1e-9);
        assert!((a.greens_s[0] - 45.0).abs() < 1e-9);
        assert!((a.greens_s[1] - 15.0).abs() < 1e-9);
    }
}
