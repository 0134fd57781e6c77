//! CSV and TOML artifacts. Every file is written to a temporary sibling and
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use super::scenario::{ScenarioMeta, ScenarioResult};
use super::sweep::SweepTable;
use crate::error::{Error, Result};
use crate::harness::ControllerSpec;
use crate::sensing::{NfdSample, SetPoint};

fn write_atomic(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    f(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    write_atomic(path, |w| {
        let mut wr = csv::Writer::from_writer(w);
        for r in rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    })
}

fn to_toml<S: Serialize>(v: &S) -> Result<String> {
    toml::to_string(v).map_err(|e| Error::Config(e.to_string()))
}

#[derive(Serialize)]
struct DensityRow {
    cycle: u32,
    time_s: u64,
    density_veh_km: f64,
    kbar_veh_per_km: f64,
}

#[derive(Serialize)]
struct ControllerRow {
    cycle: u32,
    time_s: u64,
    active: bool,
    command_veh_h: Option<f64>,
    unclamped_veh_h: Option<f64>,
    sliding: Option<f64>,
    integral: Option<f64>,
    saturated: bool,
    green_clamped: bool,
}

#[derive(Serialize)]
struct FlowRow {
    cycle: u32,
    time_s: u64,
    inflow_veh_h: f64,
    outflow_veh_h: f64,
    disturbance_veh_h: f64,
    command_veh_h: Option<f64>,
    in_system: u64,
}

#[derive(Serialize)]
struct LinkRow {
    cycle: u32,
    link: u32,
    count: u32,
    inflow: u32,
    outflow: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub meta: ScenarioMeta,
    pub metrics: Metrics,
    pub peak_density_veh_km: f64,
    pub unfinished: u64,
    pub conservation_violations: u64,
    pub cycles: usize,
}

impl RunSummary {
    pub fn of(r: &ScenarioResult) -> Self {
        Self {
            meta: r.meta.clone(),
            metrics: r.metrics,
            peak_density_veh_km: r.peak_density(),
            unfinished: r.unfinished,
            conservation_violations: r.conservation_violations,
            cycles: r.cycles.len(),
        }
    }
}

pub fn write_nfd(path: &Path, samples: &[NfdSample<f64>]) -> Result<()> {
    write_csv(path, samples.iter().copied())
}

pub fn read_nfd(path: &Path) -> Result<Vec<NfdSample<f64>>> {
    let mut rd = csv::Reader::from_path(path)?;
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_summary(path: &Path, r: &ScenarioResult) -> Result<()> {
    let text = to_toml(&RunSummary::of(r))?;
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

/// Writes `nfd.csv`, `density.csv`, `controller.csv`, `flows.csv`,
/// `summary.toml` and, when link records were kept, `links.csv`.
pub fn write_run_outputs(dir: &Path, r: &ScenarioResult) -> Result<()> {
    write_nfd(&dir.join("nfd.csv"), &r.nfd())?;
    let kbar = r.meta.kbar_veh_per_km;
    write_csv(
        &dir.join("density.csv"),
        r.cycles.iter().map(|c| DensityRow {
            cycle: c.cycle,
            time_s: c.time_s,
            density_veh_km: c.density_veh_km,
            kbar_veh_per_km: kbar,
        }),
    )?;
    write_csv(
        &dir.join("controller.csv"),
        r.cycles.iter().map(|c| ControllerRow {
            cycle: c.cycle,
            time_s: c.time_s,
            active: c.active,
            command_veh_h: c.command_veh_h,
            unclamped_veh_h: c.unclamped_veh_h,
            sliding: c.sliding,
            integral: c.integral,
            saturated: c.saturated,
            green_clamped: c.green_clamped,
        }),
    )?;
    write_csv(
        &dir.join("flows.csv"),
        r.cycles.iter().map(|c| FlowRow {
            cycle: c.cycle,
            time_s: c.time_s,
            inflow_veh_h: c.inflow_veh_h,
            outflow_veh_h: c.outflow_veh_h,
            disturbance_veh_h: c.disturbance_veh_h,
            command_veh_h: c.command_veh_h,
            in_system: c.in_system,
        }),
    )?;
    if !r.links.is_empty() {
        write_csv(
            &dir.join("links.csv"),
            r.links.iter().map(|l| LinkRow {
                cycle: l.cycle,
                link: l.link.0,
                count: l.count,
                inflow: l.inflow,
                outflow: l.outflow,
            }),
        )?;
    }
    write_summary(&dir.join("summary.toml"), r)
}

#[derive(Serialize)]
struct TableCsvRow<'a> {
    label: &'a str,
    controller: &'a str,
    lambda_per_h: Option<f64>,
    eta: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    mu: Option<f64>,
    zeta: Option<f64>,
    travel_time_s: f64,
    delay_s: f64,
    fuel_l: f64,
    speed_kmh: f64,
    travel_time_pct: Option<f64>,
    delay_pct: Option<f64>,
    fuel_pct: Option<f64>,
    speed_pct: Option<f64>,
    unfinished: u64,
}

/// Table with the baseline first and one row per sweep point.
pub fn write_table(path: &Path, t: &SweepTable) -> Result<()> {
    let base = TableCsvRow {
        label: "Base Case (NPC)",
        controller: "npc",
        lambda_per_h: None,
        eta: None,
        alpha: None,
        beta: None,
        mu: None,
        zeta: None,
        travel_time_s: t.baseline.mean_travel_time_s,
        delay_s: t.baseline.mean_delay_s,
        fuel_l: t.baseline.mean_fuel_l,
        speed_kmh: t.baseline.mean_speed_kmh,
        travel_time_pct: None,
        delay_pct: None,
        fuel_pct: None,
        speed_pct: None,
        unfinished: t.baseline.unfinished,
    };
    let rows = t.rows.iter().map(|r| {
        let mut row = TableCsvRow {
            label: &r.label,
            controller: "npc",
            lambda_per_h: None,
            eta: None,
            alpha: None,
            beta: None,
            mu: None,
            zeta: None,
            travel_time_s: r.metrics.mean_travel_time_s,
            delay_s: r.metrics.mean_delay_s,
            fuel_l: r.metrics.mean_fuel_l,
            speed_kmh: r.metrics.mean_speed_kmh,
            travel_time_pct: r.change.travel_time_pct,
            delay_pct: r.change.delay_pct,
            fuel_pct: r.change.fuel_pct,
            speed_pct: r.change.speed_pct,
            unfinished: r.metrics.unfinished,
        };
        match r.controller {
            ControllerSpec::None => {}
            ControllerSpec::Smc(p) => {
                row.controller = "smc";
                row.lambda_per_h = Some(p.lambda_per_h);
                row.eta = Some(p.eta);
                row.alpha = Some(p.alpha);
                row.beta = Some(p.beta);
            }
            ControllerSpec::Pic(p) => {
                row.controller = "pic";
                row.mu = Some(p.mu);
                row.zeta = Some(p.zeta);
            }
        }
        row
    });
    write_csv(path, std::iter::once(base).chain(rows))
}

pub fn write_setpoint(path: &Path, sp: &SetPoint<f64>) -> Result<()> {
    let text = to_toml(sp)?;
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}

pub fn read_setpoint(path: &Path) -> Result<SetPoint<f64>> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nfd_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nfd.csv");
        let s = vec![
            NfdSample {
                cycle: 0,
                density_veh_km: 1.5,
                flow_veh_h: 100.0,
            },
            NfdSample {
                cycle: 1,
                density_veh_km: 30.25,
                flow_veh_h: 900.125,
            },
        ];
        write_nfd(&p, &s).unwrap();
        assert_eq!(read_nfd(&p).unwrap(), s);
        // no stray temporaries
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn setpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("setpoint.toml");
        let sp = SetPoint {
            kbar_veh_per_km: 47.0,
            q_max_veh_per_h: 611.5,
            bin_width_veh_per_km: 2.0,
            warning: None,
        };
        write_setpoint(&p, &sp).unwrap();
        assert_eq!(read_setpoint(&p).unwrap(), sp);
    }
}
