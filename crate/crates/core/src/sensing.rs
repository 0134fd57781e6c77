//! Loop-detector emulation and the region-level density/flow aggregates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Link, LinkId, Network, ProtectedRegion};
use crate::scalar::Scalar;

/// One cycle of detector output for one link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSample<T> {
    pub link: LinkId,
    pub cycle: u32,
    /// Time occupancy, percent.
    pub occupancy_pct: T,
    pub flow_veh_h: T,
}

/// One point of the network fundamental diagram scatter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NfdSample<T> {
    pub cycle: u32,
    pub density_veh_km: T,
    pub flow_veh_h: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetPointWarning {
    /// The scatter never shows flow dropping past the chosen bin.
    NoCongestedBranch,
    SingleSample,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetPoint<T> {
    pub kbar_veh_per_km: T,
    pub q_max_veh_per_h: T,
    pub bin_width_veh_per_km: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<SetPointWarning>,
}

/// Geometry the aggregates need from each monitored link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitoredLink<T> {
    pub id: LinkId,
    pub length_m: T,
}

/// Monitored links of `region` with their lengths converted to `T`.
pub fn monitored_links<T: Scalar>(
    network: &Network,
    region: &ProtectedRegion,
) -> Vec<MonitoredLink<T>> {
    region
        .monitored_links
        .iter()
        .map(|&id| MonitoredLink {
            id,
            length_m: T::lit(network.link(id).length_m),
        })
        .collect()
}

/// Density across all lanes from time occupancy: `nl · k_j · o / 100`.
pub fn link_density<T: Scalar>(occupancy_pct: T, lanes: u32, jam_density_per_lane: T) -> Result<T> {
    let hundred = T::lit(100.0);
    if !(occupancy_pct >= T::zero() && occupancy_pct <= hundred) {
        return Err(Error::OccupancyOutOfRange(
            occupancy_pct.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(T::count(lanes as usize) * jam_density_per_lane * occupancy_pct / hundred)
}

/// Convenience wrapper over [`link_density`] for a network link.
pub fn link_density_for(sample: &DetectorSample<f64>, link: &Link) -> Result<f64> {
    link_density(
        sample.occupancy_pct,
        link.lanes,
        link.jam_density_veh_per_km,
    )
}

/// Occupancy a detector would report for a link holding `vehicles`, the
/// inverse of [`link_density`].
pub fn occupancy_from_count<T: Scalar>(
    vehicles: T,
    lanes: u32,
    jam_density_per_lane: T,
    length_m: T,
) -> T {
    let storage = jam_density_per_lane * T::count(lanes as usize) * length_m / T::lit(1000.0);
    T::lit(100.0) * vehicles / storage
}

fn length_weighted_mean<T: Scalar>(
    values: &BTreeMap<LinkId, T>,
    monitored: &[MonitoredLink<T>],
) -> Result<T> {
    if monitored.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut weighted = T::zero();
    let mut total = T::zero();
    for m in monitored {
        let v = values.get(&m.id).ok_or(Error::MissingSample(m.id))?;
        weighted = weighted + *v * m.length_m;
        total = total + m.length_m;
    }
    Ok(weighted / total)
}

/// Length-weighted mean density over the monitored links, veh/km.
pub fn network_density<T: Scalar>(
    densities: &BTreeMap<LinkId, T>,
    monitored: &[MonitoredLink<T>],
) -> Result<T> {
    length_weighted_mean(densities, monitored)
}

/// Length-weighted mean flow over the monitored links, veh/h.
pub fn network_flow<T: Scalar>(
    flows: &BTreeMap<LinkId, T>,
    monitored: &[MonitoredLink<T>],
) -> Result<T> {
    length_weighted_mean(flows, monitored)
}

/// Reads the set point off an NFD scatter: samples are binned by density and
/// the bin with the highest mean flow wins.
pub fn extract_set_point<T: Scalar>(scatter: &[NfdSample<T>], bin_width: T) -> Result<SetPoint<T>> {
    if !(bin_width > T::zero()) {
        return Err(Error::param("bin_width", "must be positive"));
    }
    if scatter.is_empty() {
        return Err(Error::EmptyScatter);
    }
    if scatter.len() == 1 {
        return Ok(SetPoint {
            kbar_veh_per_km: scatter[0].density_veh_km,
            q_max_veh_per_h: scatter[0].flow_veh_h,
            bin_width_veh_per_km: bin_width,
            warning: Some(SetPointWarning::SingleSample),
        });
    }
    // bin index -> (flow sum, count)
    let mut bins: BTreeMap<i64, (T, usize)> = BTreeMap::new();
    for s in scatter {
        let idx = (s.density_veh_km / bin_width).floor().to_i64().unwrap_or(0);
        let e = bins.entry(idx).or_insert((T::zero(), 0));
        e.0 = e.0 + s.flow_veh_h;
        e.1 += 1;
    }
    let (best_idx, best_mean) = bins
        .iter()
        .map(|(&i, &(sum, n))| (i, sum / T::count(n)))
        .fold(None::<(i64, T)>, |acc, (i, m)| match acc {
            Some((_, bm)) if bm >= m => acc,
            _ => Some((i, m)),
        })
        .expect("non-empty bins");
    let highest = *bins.keys().next_back().expect("non-empty bins");
    let warning = (best_idx == highest).then_some(SetPointWarning::NoCongestedBranch);
    Ok(SetPoint {
        kbar_veh_per_km: (T::from_i64(best_idx).expect("bin index") + T::lit(0.5)) * bin_width,
        q_max_veh_per_h: best_mean,
        bin_width_veh_per_km: bin_width,
        warning,
    })
}
