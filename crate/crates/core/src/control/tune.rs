//! Least-squares identification of the linearised density dynamics
//! `k[n+1] - k̄ = μ·(k[n] - k̄) + ζ·(q_in[n] - q̄_in) + ε[n]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningFlag {
    ZetaNotPositive,
    MuOutsideUnitInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicTuning<T> {
    pub mu: T,
    pub zeta: T,
    pub flags: Vec<TuningFlag>,
}

/// Fits `(μ, ζ)` from consecutive `(k[n], q_in[n])` samples.
pub fn pic_tune<T: Scalar>(samples: &[(T, T)], kbar: T, q_in_bar: T) -> Result<PicTuning<T>> {
    if samples.len() < 3 {
        return Err(Error::param(
            "samples",
            "need at least 3 consecutive samples",
        ));
    }
    // Normal equations for y = μ·a + ζ·b.
    let (mut saa, mut sab, mut sbb, mut say, mut sby) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for w in samples.windows(2) {
        let a = w[0].0 - kbar;
        let b = w[0].1 - q_in_bar;
        let y = w[1].0 - kbar;
        saa = saa + a * a;
        sab = sab + a * b;
        sbb = sbb + b * b;
        say = say + a * y;
        sby = sby + b * y;
    }
    let det = saa * sbb - sab * sab;
    let scale = saa * sbb;
    if !(scale > T::zero()) || det <= T::lit(1e-10) * scale {
        return Err(Error::RankDeficient);
    }
    let mu = (sbb * say - sab * sby) / det;
    let zeta = (saa * sby - sab * say) / det;

    let mut flags = Vec::new();
    if !(zeta > T::zero()) {
        flags.push(TuningFlag::ZetaNotPositive);
    }
    if !(mu > T::zero() && mu < T::one()) {
        flags.push(TuningFlag::MuOutsideUnitInterval);
    }
    Ok(PicTuning { mu, zeta, flags })
}
