//! Sliding-mode perimeter controller.
//!
//! The controller works on the tracking error `e = k - k̄`, its running
//! integral `x`, and the sliding variable `S = e + λ·x`. Each cycle it
//! commands
//!
//! ```text
//! u = q_out/L - q_d/L - λ·e - γ·sw(S) - λ·x,    γ = α + β + η
//! ```
//!
//! in veh/km/h, then converts to an inflow `u·L` clamped to `[U_min, U_max]`.

use serde::{Deserialize, Serialize};

use super::switching::Switching;
use crate::error::{Error, Result};
use crate::scalar::{clamp, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmcConfig<T> {
    /// Sliding-surface slope, 1/h.
    pub lambda_per_h: T,
    /// Reaching gain, veh/km/h.
    pub eta: T,
    /// Bound on the outflow-estimate error, veh/km/h.
    pub alpha: T,
    /// Bound on the disturbance-estimate error, veh/km/h.
    pub beta: T,
    pub switching: Switching<T>,
    pub u_min_veh_h: T,
    pub u_max_veh_h: T,
    pub activation_ratio: T,
}

impl<T: Scalar> SmcConfig<T> {
    pub fn new(lambda_per_h: T, eta: T) -> Self {
        Self {
            lambda_per_h,
            eta,
            alpha: T::zero(),
            beta: T::zero(),
            switching: Switching::sign(),
            u_min_veh_h: T::lit(480.0),
            u_max_veh_h: T::lit(12_960.0),
            activation_ratio: T::lit(0.85),
        }
    }

    /// Total switching gain `α + β + η`.
    pub fn gamma(&self) -> T {
        self.alpha + self.beta + self.eta
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: T| v.is_finite();
        if !(self.lambda_per_h > T::zero()) || !finite(self.lambda_per_h) {
            return Err(Error::param("lambda_per_h", "must be strictly positive"));
        }
        if !(self.eta > T::zero()) || !finite(self.eta) {
            return Err(Error::param("eta", "must be strictly positive"));
        }
        if !(self.alpha >= T::zero()) || !finite(self.alpha) {
            return Err(Error::param("alpha", "must be non-negative"));
        }
        if !(self.beta >= T::zero()) || !finite(self.beta) {
            return Err(Error::param("beta", "must be non-negative"));
        }
        if !(self.u_min_veh_h < self.u_max_veh_h) {
            return Err(Error::param("u_min_veh_h", "must be below u_max_veh_h"));
        }
        if self.switching.kind != super::SwitchingKind::Sign
            && !(self.switching.boundary_width > T::zero())
        {
            return Err(Error::param(
                "boundary_width",
                "must be positive for sat/tanh",
            ));
        }
        if !(self.activation_ratio > T::zero() && self.activation_ratio <= T::one()) {
            return Err(Error::param("activation_ratio", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Controller memory carried from cycle to cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SmcState<T> {
    /// Running `Σ (k[i] - k̄)·Δt`, veh·h/km.
    pub integral_x: T,
    pub prev_k: T,
    pub prev_q_out: T,
    pub prev_q_d: T,
    pub active: bool,
}

impl<T: Scalar> SmcState<T> {
    /// Fresh state for a controller that just switched on.
    pub fn activated() -> Self {
        Self {
            active: true,
            ..Self::default()
        }
    }
}

/// Measurements from the previous cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmcInput<T> {
    pub k_meas: T,
    pub q_out_prev: T,
    pub q_d_prev: T,
    pub kbar: T,
    pub region_length_m: T,
    pub dt_s: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmcStep<T> {
    /// Commanded inflow after clamping, veh/h.
    pub command_veh_h: T,
    /// `u·L` before clamping, veh/h.
    pub unclamped_veh_h: T,
    /// Control law output, veh/km/h.
    pub u: T,
    pub sliding: T,
    pub saturated: bool,
    pub state: SmcState<T>,
}

pub fn sliding_value<T: Scalar>(k: T, integral_x: T, lambda_per_h: T, kbar: T) -> T {
    (k - kbar) + lambda_per_h * integral_x
}

pub fn lyapunov_value<T: Scalar>(s: T) -> T {
    s * s / T::lit(2.0)
}

/// Upper bound on the time (hours) needed to reach the sliding surface.
pub fn reaching_time_bound<T: Scalar>(s0: T, eta: T) -> Result<T> {
    if !(eta > T::zero()) {
        return Err(Error::param("eta", "must be strictly positive"));
    }
    Ok(s0.abs() / eta)
}

/// Reaching-time bound when the controller switches on at `ratio·k̄` with an
/// empty integral: `(1 - ratio)·k̄/η`.
pub fn activation_reaching_bound<T: Scalar>(kbar: T, eta: T, ratio: T) -> Result<T> {
    reaching_time_bound((T::one() - ratio) * kbar, eta)
}

/// One controller evaluation. The integral is advanced after it is used and
/// frozen while the command is saturated.
pub fn smc_command<T: Scalar>(
    cfg: &SmcConfig<T>,
    st: &SmcState<T>,
    input: &SmcInput<T>,
) -> Result<SmcStep<T>> {
    if !st.active {
        return Err(Error::Inactive);
    }
    let length_km = input.region_length_m / T::lit(1000.0);
    let dt_h = input.dt_s / T::lit(3600.0);
    let lambda = cfg.lambda_per_h;
    let error = input.k_meas - input.kbar;
    let s = sliding_value(input.k_meas, st.integral_x, lambda, input.kbar);

    let u = input.q_out_prev / length_km
        - input.q_d_prev / length_km
        - lambda * error
        - cfg.gamma() * cfg.switching.eval(s)
        - lambda * st.integral_x;
    let unclamped = u * length_km;
    let command = clamp(unclamped, cfg.u_min_veh_h, cfg.u_max_veh_h);
    let saturated = unclamped < cfg.u_min_veh_h || unclamped > cfg.u_max_veh_h;

    let integral_x = if saturated {
        st.integral_x
    } else {
        st.integral_x + error * dt_h
    };
    Ok(SmcStep {
        command_veh_h: command,
        unclamped_veh_h: unclamped,
        u,
        sliding: s,
        saturated,
        state: SmcState {
            integral_x,
            prev_k: input.k_meas,
            prev_q_out: input.q_out_prev,
            prev_q_d: input.q_d_prev,
            active: true,
        },
    })
}
