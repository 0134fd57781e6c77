//! Proportional-integral gating in velocity form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{clamp, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicConfig<T> {
    /// Proportional gain, (veh/h)/(veh/km).
    pub kp: T,
    /// Integral gain, (veh/h)/(veh/km).
    pub ki: T,
    pub kbar: T,
    pub u_min_veh_h: T,
    pub u_max_veh_h: T,
    pub activation_ratio: T,
}

impl<T: Scalar> PicConfig<T> {
    /// Gains from identified plant parameters: `K_P = μ/ζ`, `K_I = (1-μ)/ζ`.
    pub fn from_identified(mu: T, zeta: T, kbar: T) -> Result<Self> {
        if zeta == T::zero() || !zeta.is_finite() {
            return Err(Error::param("zeta", "must be finite and non-zero"));
        }
        Ok(Self::from_gains(mu / zeta, (T::one() - mu) / zeta, kbar))
    }

    pub fn from_gains(kp: T, ki: T, kbar: T) -> Self {
        Self {
            kp,
            ki,
            kbar,
            u_min_veh_h: T::lit(480.0),
            u_max_veh_h: T::lit(12_960.0),
            activation_ratio: T::lit(0.85),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kp.is_finite() || !self.ki.is_finite() {
            return Err(Error::param("kp", "gains must be finite"));
        }
        if !(self.u_min_veh_h < self.u_max_veh_h) {
            return Err(Error::param("u_min_veh_h", "must be below u_max_veh_h"));
        }
        if !(self.kbar > T::zero()) {
            return Err(Error::param("kbar", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PicState<T> {
    pub prev_q_in: T,
    pub prev_k: T,
    pub active: bool,
}

impl<T: Scalar> PicState<T> {
    /// State at activation, seeded with the inflow measured at that moment.
    pub fn activated(measured_inflow: T, k: T) -> Self {
        Self {
            prev_q_in: measured_inflow,
            prev_k: k,
            active: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicStep<T> {
    pub command_veh_h: T,
    pub unclamped_veh_h: T,
    pub saturated: bool,
    pub state: PicState<T>,
}

/// `q_in[n] = q_in[n-1] - K_P·(k[n] - k[n-1]) + K_I·(k̄ - k[n])`, clamped.
pub fn pic_command<T: Scalar>(
    cfg: &PicConfig<T>,
    st: &PicState<T>,
    k_now: T,
    k_prev: T,
) -> Result<PicStep<T>> {
    if !st.active {
        return Err(Error::Inactive);
    }
    let unclamped = st.prev_q_in - cfg.kp * (k_now - k_prev) + cfg.ki * (cfg.kbar - k_now);
    let command = clamp(unclamped, cfg.u_min_veh_h, cfg.u_max_veh_h);
    Ok(PicStep {
        command_veh_h: command,
        unclamped_veh_h: unclamped,
        saturated: unclamped != command,
        state: PicState {
            prev_q_in: command,
            prev_k: k_now,
            active: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_at_set_point() {
        let cfg = PicConfig::from_gains(100.0, 50.0, 48.0);
        let st = PicState::activated(3000.0, 48.0);
        let step = pic_command(&cfg, &st, 48.0, 48.0).unwrap();
        assert_eq!(step.command_veh_h, 3000.0);
    }

    #[test]
    fn hand_evaluated_step() {
        let cfg = PicConfig::from_gains(100.0, 50.0, 48.0);
        let st = PicState::activated(3000.0, 49.0);
        let step = pic_command(&cfg, &st, 50.0, 49.0).unwrap();
        assert_eq!(step.command_veh_h, 2800.0);
        assert_eq!(step.state.prev_q_in, 2800.0);
    }

    #[test]
    fn clamps_low() {
        let cfg = PicConfig::from_gains(100.0, 50.0, 48.0);
        let st = PicState::activated(500.0, 49.0);
        let step = pic_command(&cfg, &st, 60.0, 49.0).unwrap();
        assert_eq!(step.command_veh_h, 480.0);
        assert!(step.saturated);
    }

    #[test]
    fn gains_from_identified_parameters() {
        let cfg = PicConfig::<f64>::from_identified(0.847, 0.002, 48.76).unwrap();
        assert!((cfg.kp - 423.5).abs() < 1e-9);
        assert!((cfg.ki - 76.5).abs() < 1e-9);
        assert!(PicConfig::from_identified(0.5, 0.0, 48.0).is_err());
    }

    #[test]
    fn inactive_is_an_error() {
        let cfg = PicConfig::from_gains(100.0, 50.0, 48.0);
        assert!(matches!(
            pic_command(&cfg, &PicState::default(), 1.0, 1.0),
            Err(Error::Inactive)
        ));
    }
}
