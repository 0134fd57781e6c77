//! Turns a demand profile into vehicle injections.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::demand::DemandProfile;
use crate::network::{Network, ZoneId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandMode {
    /// Fractional rates carried over so counts match `rate·Δt` exactly.
    Deterministic,
    #[default]
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OdPair {
    pub origin: ZoneId,
    pub destination: ZoneId,
}

/// Every ordered pair of distinct zones.
pub fn all_pairs(network: &Network) -> Vec<OdPair> {
    let mut pairs = Vec::new();
    for o in &network.zones {
        for d in &network.zones {
            if o.id != d.id {
                pairs.push(OdPair {
                    origin: o.id,
                    destination: d.id,
                });
            }
        }
    }
    pairs
}

#[derive(Clone, Debug)]
pub struct DemandLoader {
    pub profile: DemandProfile,
    pub mode: DemandMode,
    pairs: Vec<OdPair>,
    carry: Vec<f64>,
}

impl DemandLoader {
    pub fn new(profile: DemandProfile, mode: DemandMode, pairs: Vec<OdPair>) -> Self {
        let carry = vec![0.0; pairs.len()];
        Self {
            profile,
            mode,
            pairs,
            carry,
        }
    }

    pub fn pairs(&self) -> &[OdPair] {
        &self.pairs
    }

    /// Vehicles to inject over `[t_s, t_s + dt_s)` per OD pair, using the
    /// rate of the profile period containing `t_s`. Pairs with no vehicles
    /// are omitted.
    pub fn load_demand<R: Rng + ?Sized>(
        &mut self,
        t_s: f64,
        dt_s: f64,
        rng: &mut R,
    ) -> Vec<(OdPair, u32)> {
        let rate = self.profile.rate_at(t_s);
        if rate <= 0.0 {
            return Vec::new();
        }
        let mean = rate * dt_s / 3600.0;
        let mut out = Vec::new();
        match self.mode {
            DemandMode::Deterministic => {
                for (pair, carry) in self.pairs.iter().zip(self.carry.iter_mut()) {
                    *carry += mean;
                    let n = (*carry + 1e-9).floor();
                    *carry -= n;
                    if n > 0.0 {
                        out.push((*pair, n as u32));
                    }
                }
            }
            DemandMode::Poisson => {
                let dist = Poisson::new(mean).expect("positive Poisson mean");
                for pair in &self.pairs {
                    let n: f64 = dist.sample(rng);
                    if n > 0.0 {
                        out.push((*pair, n as u32));
                    }
                }
            }
        }
        out
    }
}
