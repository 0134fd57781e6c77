//! Trip-level aggregates and percent comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::Vehicle;

/// Linear fuel surrogate `a·distance + b·delay`. This is a stand-in, not a
/// calibrated emissions model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelModel {
    pub litres_per_km: f64,
    pub litres_per_delay_s: f64,
}

impl Default for FuelModel {
    fn default() -> Self {
        Self {
            litres_per_km: 0.08,
            litres_per_delay_s: 0.0003,
        }
    }
}

impl FuelModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.litres_per_km >= 0.0) || !(self.litres_per_delay_s >= 0.0) {
            return Err(Error::param("fuel", "coefficients must be non-negative"));
        }
        Ok(())
    }

    pub fn litres(&self, distance_km: f64, delay_s: f64) -> f64 {
        self.litres_per_km * distance_km + self.litres_per_delay_s * delay_s
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub vehicles: u64,
    /// Vehicles that had not arrived at the horizon; they are counted with
    /// the horizon as their arrival time.
    pub unfinished: u64,
    pub mean_travel_time_s: f64,
    pub mean_delay_s: f64,
    pub mean_fuel_l: f64,
    pub mean_speed_kmh: f64,
    pub total_distance_km: f64,
    pub total_time_h: f64,
    /// No vehicle was generated; every mean is zero.
    pub no_traffic: bool,
}

/// Per-vehicle travel time and delay, with `horizon_s` standing in for the
/// arrival of unfinished trips.
pub fn trip_times(v: &Vehicle, horizon_s: f64) -> (f64, f64) {
    let arrival = v.arrival_s.unwrap_or(horizon_s);
    let tt = (arrival - v.departure_s).max(0.0);
    let delay = (tt - v.free_flow_time_s).max(0.0);
    (tt, delay)
}

pub fn compute_metrics(vehicles: &[Vehicle], horizon_s: f64, fuel: &FuelModel) -> Metrics {
    if vehicles.is_empty() {
        return Metrics {
            no_traffic: true,
            ..Metrics::default()
        };
    }
    let mut tt_sum = 0.0;
    let mut delay_sum = 0.0;
    let mut fuel_sum = 0.0;
    let mut dist_km = 0.0;
    let mut unfinished = 0;
    for v in vehicles {
        let (tt, delay) = trip_times(v, horizon_s);
        let d = v.distance_m / 1000.0;
        tt_sum += tt;
        delay_sum += delay;
        dist_km += d;
        fuel_sum += fuel.litres(d, delay);
        if v.arrival_s.is_none() {
            unfinished += 1;
        }
    }
    let n = vehicles.len() as f64;
    let total_time_h = tt_sum / 3600.0;
    Metrics {
        vehicles: vehicles.len() as u64,
        unfinished,
        mean_travel_time_s: tt_sum / n,
        mean_delay_s: delay_sum / n,
        mean_fuel_l: fuel_sum / n,
        mean_speed_kmh: if total_time_h > 0.0 {
            dist_km / total_time_h
        } else {
            0.0
        },
        total_distance_km: dist_km,
        total_time_h,
        no_traffic: false,
    }
}

impl Metrics {
    /// Vehicle-weighted aggregate of several runs, as if all trips came from
    /// one run.
    pub fn pooled(runs: &[Metrics]) -> Metrics {
        let n: u64 = runs.iter().map(|m| m.vehicles).sum();
        if n == 0 {
            return Metrics {
                no_traffic: true,
                ..Metrics::default()
            };
        }
        let weighted = |f: fn(&Metrics) -> f64| {
            runs.iter().map(|m| f(m) * m.vehicles as f64).sum::<f64>() / n as f64
        };
        let dist: f64 = runs.iter().map(|m| m.total_distance_km).sum();
        let time: f64 = runs.iter().map(|m| m.total_time_h).sum();
        Metrics {
            vehicles: n,
            unfinished: runs.iter().map(|m| m.unfinished).sum(),
            mean_travel_time_s: weighted(|m| m.mean_travel_time_s),
            mean_delay_s: weighted(|m| m.mean_delay_s),
            mean_fuel_l: weighted(|m| m.mean_fuel_l),
            mean_speed_kmh: if time > 0.0 { dist / time } else { 0.0 },
            total_distance_km: dist,
            total_time_h: time,
            no_traffic: false,
        }
    }
}

/// Percent change of one aggregate; `None` when the baseline is zero.
pub type PercentChange = Option<f64>;

pub fn percent_change(baseline: f64, treated: f64) -> PercentChange {
    (baseline != 0.0).then(|| 100.0 * (treated - baseline) / baseline)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub travel_time_pct: PercentChange,
    pub delay_pct: PercentChange,
    pub fuel_pct: PercentChange,
    pub speed_pct: PercentChange,
}

/// Percent change of every aggregate, negative meaning a decrease.
pub fn compare(baseline: &Metrics, treated: &Metrics) -> Comparison {
    Comparison {
        travel_time_pct: percent_change(baseline.mean_travel_time_s, treated.mean_travel_time_s),
        delay_pct: percent_change(baseline.mean_delay_s, treated.mean_delay_s),
        fuel_pct: percent_change(baseline.mean_fuel_l, treated.mean_fuel_l),
        speed_pct: percent_change(baseline.mean_speed_kmh, treated.mean_speed_kmh),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{LinkId, ZoneId};

    fn vehicle(dep: f64, arr: Option<f64>, dist_m: f64, ff_s: f64) -> Vehicle {
        Vehicle {
            id: 0,
            origin: ZoneId(0),
            destination: ZoneId(1),
            route: vec![LinkId(0)],
            pos: 0,
            departure_s: dep,
            entered_s: Some(dep),
            arrival_s: arr,
            distance_m: dist_m,
            free_flow_time_s: ff_s,
        }
    }

    #[test]
    fn pooling_equals_one_big_run() {
        let fuel = FuelModel::default();
        let a = [
            vehicle(0.0, Some(40.8), 150.0, 10.8),
            vehicle(5.0, Some(20.0), 300.0, 21.6),
        ];
        let b = [vehicle(3.0, Some(90.0), 450.0, 32.4)];
        let all: Vec<Vehicle> = a.iter().chain(&b).cloned().collect();
        let pooled = Metrics::pooled(&[
            compute_metrics(&a, 100.0, &fuel),
            compute_metrics(&b, 100.0, &fuel),
        ]);
        let direct = compute_metrics(&all, 100.0, &fuel);
        assert_eq!(pooled.vehicles, 3);
        assert!((pooled.mean_delay_s - direct.mean_delay_s).abs() < 1e-9);
        assert!((pooled.mean_speed_kmh - direct.mean_speed_kmh).abs() < 1e-9);
        assert!((pooled.mean_fuel_l - direct.mean_fuel_l).abs() < 1e-12);
        assert!(Metrics::pooled(&[]).no_traffic);
    }

    #[test]
    fn free_flow_trip_has_no_delay() {
        let m = compute_metrics(
            &[vehicle(0.0, Some(10.8), 150.0, 10.8)],
            100.0,
            &FuelModel::default(),
        );
        assert_eq!(m.mean_delay_s, 0.0);
        assert!((m.mean_speed_kmh - 50.0).abs() < 1e-9);
    }

    #[test]
    fn stop_adds_delay() {
        let m = compute_metrics(
            &[vehicle(0.0, Some(40.8), 150.0, 10.8)],
            100.0,
            &FuelModel::default(),
        );
        assert!((m.mean_delay_s - 30.0).abs() < 1e-9);
        assert!(m.mean_delay_s <= m.mean_travel_time_s);
    }

    #[test]
    fn fuel_without_delay_term() {
        let f = FuelModel {
            litres_per_km: 0.1,
            litres_per_delay_s: 0.0,
        };
        let a = compute_metrics(&[vehicle(0.0, Some(100.0), 1000.0, 20.0)], 200.0, &f);
        let b = compute_metrics(&[vehicle(0.0, Some(500.0), 1000.0, 20.0)], 600.0, &f);
        assert!((a.mean_fuel_l - 0.1).abs() < 1e-12);
        assert_eq!(a.mean_fuel_l, b.mean_fuel_l);
    }

    #[test]
    fn unfinished_trips_use_horizon() {
        let m = compute_metrics(
            &[vehicle(100.0, None, 300.0, 21.6)],
            1000.0,
            &FuelModel::default(),
        );
        assert_eq!(m.unfinished, 1);
        assert_eq!(m.mean_travel_time_s, 900.0);
    }

    #[test]
    fn empty_is_no_traffic() {
        let m = compute_metrics(&[], 1000.0, &FuelModel::default());
        assert!(m.no_traffic);
        assert_eq!(m.vehicles, 0);
    }

    #[test]
    fn comparisons() {
        let base = Metrics {
            mean_travel_time_s: 100.0,
            mean_delay_s: 40.0,
            mean_fuel_l: 0.5,
            mean_speed_kmh: 20.0,
            ..Metrics::default()
        };
        let same = compare(&base, &base);
        assert_eq!(same.travel_time_pct, Some(0.0));
        assert_eq!(same.speed_pct, Some(0.0));
        let treated = Metrics {
            mean_travel_time_s: 88.0,
            ..base
        };
        assert!((compare(&base, &treated).travel_time_pct.unwrap() + 12.0).abs() < 1e-12);
        let zero = Metrics::default();
        assert_eq!(compare(&zero, &base).delay_pct, None);
    }
}
