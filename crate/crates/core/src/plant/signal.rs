//! Fixed-cycle signal plans and Webster phase splits.
//!
//! Every signalized node runs one phase per incoming approach, in the order
//! the approaches appear in the node's in-link list. Each phase is followed
//! by its lost time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalTiming {
    pub cycle_s: f64,
    pub lost_time_per_phase_s: f64,
    pub min_green_s: f64,
}

impl Default for SignalTiming {
    fn default() -> Self {
        Self {
            cycle_s: 60.0,
            lost_time_per_phase_s: 4.0,
            min_green_s: 5.0,
        }
    }
}

impl SignalTiming {
    pub fn validate(&self, max_phases: usize) -> Result<()> {
        if !(self.cycle_s > 0.0) || self.cycle_s.fract() != 0.0 {
            return Err(Error::param(
                "cycle_s",
                "must be a positive whole number of seconds",
            ));
        }
        if !(self.lost_time_per_phase_s >= 0.0) {
            return Err(Error::param(
                "lost_time_per_phase_s",
                "must be non-negative",
            ));
        }
        if !(self.min_green_s > 0.0) {
            return Err(Error::param("min_green_s", "must be positive"));
        }
        let n = max_phases as f64;
        if n * (self.lost_time_per_phase_s + self.min_green_s) > self.cycle_s {
            return Err(Error::param(
                "cycle_s",
                "too short for minimum greens plus lost time",
            ));
        }
        Ok(())
    }

    /// Green time available to all phases of a node with `phases` phases.
    pub fn effective_green(&self, phases: usize) -> f64 {
        self.cycle_s - phases as f64 * self.lost_time_per_phase_s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalPlan {
    pub node: NodeId,
    pub cycle_s: f64,
    /// Green per phase, seconds.
    pub greens_s: Vec<f64>,
    pub lost_time_per_phase_s: f64,
}

impl SignalPlan {
    pub fn phases(&self) -> usize {
        self.greens_s.len()
    }

    /// Start and end of phase `i`'s green, seconds into the cycle.
    pub fn green_window(&self, phase: usize) -> (f64, f64) {
        let start: f64 = self.greens_s[..phase]
            .iter()
            .map(|g| g + self.lost_time_per_phase_s)
            .sum();
        (start, start + self.greens_s[phase])
    }

    /// Seconds of green phase `i` shows during `[t0, t1)`, both measured
    /// from the start of the cycle.
    pub fn green_overlap(&self, phase: usize, t0: f64, t1: f64) -> f64 {
        let (g0, g1) = self.green_window(phase);
        (t1.min(g1) - t0.max(g0)).max(0.0)
    }

    pub fn green_ratio(&self, phase: usize) -> f64 {
        self.greens_s[phase] / self.cycle_s
    }

    /// Checks `Σ greens + lost times = C` and every green `≥ min_green`.
    pub fn is_consistent(&self, min_green_s: f64) -> bool {
        let total: f64 =
            self.greens_s.iter().sum::<f64>() + self.phases() as f64 * self.lost_time_per_phase_s;
        (total - self.cycle_s).abs() < 1e-9
            && self.greens_s.iter().all(|&g| g >= min_green_s - 1e-9)
    }
}

/// Distributes `available` seconds in proportion to `weights`, holding any
/// share that would fall below `min` at `min`.
pub(crate) fn proportional_with_floor(weights: &[f64], available: f64, min: f64) -> Vec<f64> {
    let n = weights.len();
    let mut fixed = vec![false; n];
    let mut out = vec![0.0; n];
    loop {
        let free_weight: f64 = (0..n).filter(|&i| !fixed[i]).map(|i| weights[i]).sum();
        let remaining = available - fixed.iter().filter(|&&f| f).count() as f64 * min;
        let free = fixed.iter().filter(|&&f| !f).count();
        if free == 0 {
            break;
        }
        let mut changed = false;
        for i in 0..n {
            if fixed[i] {
                out[i] = min;
                continue;
            }
            out[i] = if free_weight > 0.0 {
                remaining * (weights[i] / free_weight)
            } else {
                remaining / free as f64
            };
            if out[i] < min {
                fixed[i] = true;
                out[i] = min;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    out
}

/// Webster split: green proportional to each approach's flow ratio
/// `y = q / (q_s·nl)`, floored at the minimum green.
///
/// `saturation_veh_h[i]` is the saturation flow of approach `i` across all
/// its lanes. All-zero flows give an equal split.
pub fn webster_splits(
    node: NodeId,
    approach_flows_veh_h: &[f64],
    saturation_veh_h: &[f64],
    timing: &SignalTiming,
) -> Result<SignalPlan> {
    if approach_flows_veh_h.is_empty() || approach_flows_veh_h.len() != saturation_veh_h.len() {
        return Err(Error::param(
            "approach_flows_veh_h",
            "one flow per approach required",
        ));
    }
    let ratios: Vec<f64> = approach_flows_veh_h
        .iter()
        .zip(saturation_veh_h)
        .map(|(&q, &s)| (q.max(0.0)) / s)
        .collect();
    let available = timing.effective_green(ratios.len());
    let greens = proportional_with_floor(&ratios, available, timing.min_green_s);
    Ok(SignalPlan {
        node,
        cycle_s: timing.cycle_s,
        greens_s: greens,
        lost_time_per_phase_s: timing.lost_time_per_phase_s,
    })
}
