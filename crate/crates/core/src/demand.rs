//! Time-varying OD demand profiles.
//!
//! A profile is piecewise constant over fixed periods (300 s by default) and
//! gives the rate for every OD pair; the total network demand is that rate
//! times the number of pairs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandShape {
    /// Linear ramp from base to peak at the middle period and back down.
    Triangular,
    /// Half-ellipse: steep shoulders, broad top.
    Dome,
    /// Raised cosine oscillating between base and peak.
    Sinusoidal { oscillation_period_s: f64 },
    /// Explicit per-period rates, veh/h per OD pair.
    Table { rates_veh_h: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandProfile {
    pub name: String,
    pub shape: DemandShape,
    #[serde(default = "default_period")]
    pub period_s: f64,
    pub duration_s: f64,
    /// Per OD pair, veh/h.
    pub base_veh_h: f64,
    /// Per OD pair, veh/h.
    pub peak_veh_h: f64,
}

fn default_period() -> f64 {
    300.0
}

/// Named profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DemandName {
    D1,
    D2,
    D3,
}

impl fmt::Display for DemandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DemandName::D1 => "D1",
            DemandName::D2 => "D2",
            DemandName::D3 => "D3",
        };
        f.write_str(s)
    }
}

impl FromStr for DemandName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "D1" => Ok(DemandName::D1),
            "D2" => Ok(DemandName::D2),
            "D3" => Ok(DemandName::D3),
            other => Err(Error::Config(format!("unknown demand profile `{other}`"))),
        }
    }
}

/// Loading window of the named profiles: 75 minutes.
pub const LOADING_DURATION_S: f64 = 4500.0;
/// Oscillation period of the sinusoidal profile.
pub const D3_OSCILLATION_S: f64 = 1500.0;

/// Builds a named profile: D1 triangular, D2 dome, D3 sinusoidal, all
/// loading for 75 minutes in 300 s steps.
pub fn build_demand(name: DemandName, base_veh_h: f64, peak_veh_h: f64) -> Result<DemandProfile> {
    let shape = match name {
        DemandName::D1 => DemandShape::Triangular,
        DemandName::D2 => DemandShape::Dome,
        DemandName::D3 => DemandShape::Sinusoidal {
            oscillation_period_s: D3_OSCILLATION_S,
        },
    };
    let p = DemandProfile {
        name: name.to_string(),
        shape,
        period_s: default_period(),
        duration_s: LOADING_DURATION_S,
        base_veh_h,
        peak_veh_h,
    };
    p.validate()?;
    Ok(p)
}

impl DemandProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_s > 0.0) {
            return Err(Error::param("period_s", "must be positive"));
        }
        if !(self.duration_s >= 0.0) {
            return Err(Error::param("duration_s", "must be non-negative"));
        }
        if !(self.base_veh_h >= 0.0) || !(self.peak_veh_h >= 0.0) {
            return Err(Error::param("base_veh_h", "rates must be non-negative"));
        }
        match &self.shape {
            DemandShape::Sinusoidal {
                oscillation_period_s,
            } if !(*oscillation_period_s > 0.0) => {
                Err(Error::param("oscillation_period_s", "must be positive"))
            }
            DemandShape::Table { rates_veh_h } if rates_veh_h.iter().any(|r| !(*r >= 0.0)) => {
                Err(Error::param("rates_veh_h", "rates must be non-negative"))
            }
            _ => Ok(()),
        }
    }

    pub fn periods(&self) -> usize {
        match &self.shape {
            DemandShape::Table { rates_veh_h } => rates_veh_h.len(),
            _ => (self.duration_s / self.period_s).ceil() as usize,
        }
    }

    /// Rate of period `p`, veh/h per OD pair.
    pub fn period_rate(&self, p: usize) -> f64 {
        let n = self.periods();
        if p >= n {
            return 0.0;
        }
        let span = self.peak_veh_h - self.base_veh_h;
        let centre = (n as f64 - 1.0) / 2.0;
        let x = p as f64;
        match &self.shape {
            DemandShape::Triangular => {
                if centre == 0.0 {
                    self.peak_veh_h
                } else {
                    self.base_veh_h + span * (1.0 - (x - centre).abs() / centre)
                }
            }
            DemandShape::Dome => {
                let r = (x - centre) / (centre + 1.0);
                self.base_veh_h + span * (1.0 - r * r).max(0.0).sqrt()
            }
            DemandShape::Sinusoidal {
                oscillation_period_s,
            } => {
                let phase = 2.0 * PI * x * self.period_s / oscillation_period_s;
                self.base_veh_h + span * 0.5 * (1.0 - phase.cos())
            }
            DemandShape::Table { rates_veh_h } => rates_veh_h[p],
        }
    }

    /// Rate in force at time `t_s`, veh/h per OD pair.
    pub fn rate_at(&self, t_s: f64) -> f64 {
        if t_s < 0.0 {
            return 0.0;
        }
        self.period_rate((t_s / self.period_s).floor() as usize)
    }

    /// Time at which loading stops.
    pub fn end_s(&self) -> f64 {
        self.periods() as f64 * self.period_s
    }

    /// Same profile with both amplitudes multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut p = self.clone();
        p.base_veh_h *= factor;
        p.peak_veh_h *= factor;
        if let DemandShape::Table { rates_veh_h } = &mut p.shape {
            rates_veh_h.iter_mut().for_each(|r| *r *= factor);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_shape() {
        let d1 = build_demand(DemandName::D1, 10.0, 40.0).unwrap();
        assert_eq!(d1.periods(), 15);
        assert_eq!(d1.rate_at(0.0), 10.0);
        // 37.5 min sits inside the peak period.
        let peak_t = 37.5 * 60.0;
        assert_eq!(d1.rate_at(peak_t), 40.0);
        let max = (0..15).map(|p| d1.period_rate(p)).fold(0.0, f64::max);
        assert_eq!(max, d1.rate_at(peak_t));
        assert_eq!(d1.rate_at(75.0 * 60.0), 0.0);
        assert_eq!(d1.rate_at(100.0 * 60.0), 0.0);
        // piecewise constant
        assert_eq!(d1.rate_at(301.0), d1.rate_at(599.0));
    }

    #[test]
    fn d3_is_periodic() {
        let d3 = build_demand(DemandName::D3, 5.0, 30.0).unwrap();
        let steps = (D3_OSCILLATION_S / d3.period_s) as usize;
        for p in 0..d3.periods() - steps {
            assert!((d3.period_rate(p) - d3.period_rate(p + steps)).abs() < 1e-9);
        }
        assert!((d3.rate_at(0.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn d2_is_a_dome() {
        let d2 = build_demand(DemandName::D2, 0.0, 30.0).unwrap();
        let rates: Vec<f64> = (0..d2.periods()).map(|p| d2.period_rate(p)).collect();
        assert_eq!(rates[7], 30.0);
        assert!(rates.windows(2).take(7).all(|w| w[0] < w[1]));
        for p in 0..7 {
            assert!((rates[p] - rates[14 - p]).abs() < 1e-9);
        }
    }

    #[test]
    fn names_parse() {
        assert_eq!("d2".parse::<DemandName>().unwrap(), DemandName::D2);
        assert!("D9".parse::<DemandName>().is_err());
    }
}
