//! Single-reservoir synthetic plant: the whole protected region as one
//! bucket, `L·dk/dt = q_in + q_d - q_out(k)`, stepped with explicit Euler.

use serde::{Deserialize, Serialize};

use crate::control::{smc_command, SmcConfig, SmcInput, SmcState};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reservoir {
    pub length_m: f64,
    pub kbar_veh_per_km: f64,
    /// Density at activation.
    pub k0_veh_per_km: f64,
    /// Peak of the parabolic outflow curve, reached at `k̄`.
    pub q_max_veh_h: f64,
    /// Constant internal generation.
    pub q_d_veh_h: f64,
    pub dt_s: f64,
}

impl Default for Reservoir {
    fn default() -> Self {
        Self {
            length_m: 7200.0,
            kbar_veh_per_km: 48.0,
            k0_veh_per_km: 0.85 * 48.0,
            q_max_veh_h: 4000.0,
            q_d_veh_h: 300.0,
            dt_s: 1.0,
        }
    }
}

impl Reservoir {
    /// `q_max·r·(2 - r)` with `r = k/k̄`, floored at zero.
    pub fn outflow_veh_h(&self, k: f64) -> f64 {
        let r = k / self.kbar_veh_per_km;
        (self.q_max_veh_h * r * (2.0 - r)).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReservoirStep {
    pub t_s: f64,
    pub density_veh_km: f64,
    /// Sliding variable the controller saw at this step.
    pub sliding: f64,
    /// Integral of the error entering this step, veh·h/km.
    pub integral_x: f64,
    pub command_veh_h: f64,
    pub saturated: bool,
}

/// Closes the loop from activation for `steps` steps. `errors(n)` gives the
/// outflow and disturbance estimate errors at step `n`, veh/h.
pub fn run_reservoir(
    res: &Reservoir,
    cfg: &SmcConfig<f64>,
    steps: usize,
    mut errors: impl FnMut(usize) -> (f64, f64),
) -> Result<Vec<ReservoirStep>> {
    if !(res.length_m > 0.0) || !(res.dt_s > 0.0) {
        return Err(Error::param(
            "reservoir",
            "length and step must be positive",
        ));
    }
    cfg.validate()?;
    let length_km = res.length_m / 1000.0;
    let dt_h = res.dt_s / 3600.0;
    let mut st = SmcState::activated();
    let mut k = res.k0_veh_per_km;
    let mut out = Vec::with_capacity(steps);
    for n in 0..steps {
        let q_out = res.outflow_veh_h(k);
        let (e_out, e_d) = errors(n);
        let input = SmcInput {
            k_meas: k,
            q_out_prev: q_out + e_out,
            q_d_prev: res.q_d_veh_h + e_d,
            kbar: res.kbar_veh_per_km,
            region_length_m: res.length_m,
            dt_s: res.dt_s,
        };
        let step = smc_command(cfg, &st, &input)?;
        out.push(ReservoirStep {
            t_s: n as f64 * res.dt_s,
            density_veh_km: k,
            sliding: step.sliding,
            integral_x: st.integral_x,
            command_veh_h: step.command_veh_h,
            saturated: step.saturated,
        });
        k += dt_h * (step.command_veh_h + res.q_d_veh_h - q_out) / length_km;
        st = step.state;
    }
    Ok(out)
}

/// Index of the first step at which the sliding variable reaches zero or
/// changes sign.
pub fn first_surface_crossing(trace: &[ReservoirStep]) -> Option<usize> {
    let s0 = trace.first()?.sliding;
    trace
        .iter()
        .position(|s| s.sliding == 0.0 || s.sliding.signum() != s0.signum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outflow_peaks_at_set_point() {
        let r = Reservoir::default();
        assert_eq!(r.outflow_veh_h(48.0), 4000.0);
        assert!(r.outflow_veh_h(40.0) < 4000.0 && r.outflow_veh_h(56.0) < 4000.0);
        assert_eq!(r.outflow_veh_h(200.0), 0.0);
    }

    #[test]
    fn converges_to_set_point() {
        let r = Reservoir::default();
        let mut cfg = SmcConfig::new(15.0, 20.0);
        cfg.u_min_veh_h = -1e12;
        cfg.u_max_veh_h = 1e12;
        let trace = run_reservoir(&r, &cfg, 4 * 3600, |_| (0.0, 0.0)).unwrap();
        assert!(first_surface_crossing(&trace).is_some());
        let last = trace.last().unwrap();
        assert!((last.density_veh_km - 48.0).abs() < 0.05, "{last:?}");
    }
}
