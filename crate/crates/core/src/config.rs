//! Run configuration, read from TOML. Every key carries its unit in the
//! name; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::demand::{build_demand, DemandName, DemandProfile};
use crate::error::{Error, Result};
use crate::harness::{
    alpha_sweep, beta_sweep, pic_point, read_setpoint, smc_grid, CalibrationTarget, ControllerSpec,
    FuelModel, GatingSettings, PicParams, ScenarioSpec, SmcParams, SweepPoint, DEFAULT_HORIZON_S,
};
use crate::network::{
    build_grid, define_protected_region, GridSpec, Network, ProtectedRegion, RegionBounds,
};
use crate::plant::{DemandMode, PlantConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSection {
    /// Named profile; ignored when `custom` is given.
    #[serde(default = "d1")]
    pub name: DemandName,
    #[serde(default)]
    pub base_veh_h: f64,
    pub peak_veh_h: f64,
    #[serde(default)]
    pub mode: DemandMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<DemandProfile>,
}

fn d1() -> DemandName {
    DemandName::D1
}

impl Default for DemandSection {
    fn default() -> Self {
        Self {
            name: DemandName::D1,
            base_veh_h: 0.0,
            peak_veh_h: 36.5,
            mode: DemandMode::default(),
            custom: None,
        }
    }
}

impl DemandSection {
    pub fn profile(&self) -> Result<DemandProfile> {
        match &self.custom {
            Some(p) => {
                p.validate()?;
                Ok(p.clone())
            }
            None => build_demand(self.name, self.base_veh_h, self.peak_veh_h),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub lambdas_per_h: Vec<f64>,
    pub etas: Vec<f64>,
    /// Outflow-error bounds swept with β = 0 around `bounds_base`.
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// Disturbance-error bounds swept with α = 0 around `bounds_base`.
    #[serde(default)]
    pub betas: Vec<f64>,
    pub bounds_base: SmcParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pic: Option<PicParams>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lambdas_per_h: vec![1.5, 15.0, 150.0],
            etas: vec![2.0, 20.0, 200.0],
            alphas: vec![25.0, 50.0, 100.0, 300.0, 400.0],
            betas: vec![25.0, 50.0, 100.0, 300.0, 400.0],
            bounds_base: SmcParams::new(15.0, 200.0),
            pic: Some(PicParams {
                mu: 0.847,
                zeta: 0.002,
            }),
        }
    }
}

impl SweepSection {
    /// Grid rows, then the PIC row, then the α and β rows.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut pts = smc_grid(&self.lambdas_per_h, &self.etas);
        if let Some(p) = self.pic {
            pts.push(pic_point("PIC", p.mu, p.zeta));
        }
        pts.extend(alpha_sweep(self.bounds_base, &self.alphas));
        pts.extend(beta_sweep(self.bounds_base, &self.betas));
        pts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Optional seed list; sweeps pool their rows over it.
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub horizon_s: u64,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub record_links: bool,
    pub grid: GridSpec,
    pub region: RegionBounds,
    pub demand: DemandSection,
    #[serde(default)]
    pub controller: ControllerSpec,
    #[serde(default)]
    pub gating: GatingSettings,
    /// Set-point file written by `setpoint`; overrides `gating.kbar_veh_per_km`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setpoint_file: Option<PathBuf>,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub fuel: FuelModel,
    #[serde(default)]
    pub calibration: CalibrationTarget,
    #[serde(default)]
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            seeds: Vec::new(),
            horizon_s: DEFAULT_HORIZON_S,
            out_dir: PathBuf::from("out"),
            record_links: false,
            grid: GridSpec::standard(),
            region: RegionBounds::standard(),
            demand: DemandSection::default(),
            controller: ControllerSpec::default(),
            gating: GatingSettings::default(),
            setpoint_file: None,
            plant: PlantConfig::default(),
            fuel: FuelModel::default(),
            calibration: CalibrationTarget::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().trim().to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that can be checked without running: network and
    /// region construction, demand, controller and plant parameters.
    pub fn validate(&self) -> Result<()> {
        self.network()?;
        let spec = self.scenario_spec()?;
        self.controller.validate(&spec.gating)?;
        for p in self.sweep.points() {
            p.controller.validate(&spec.gating)?;
        }
        self.plant.validate()?;
        self.fuel.validate()?;
        Ok(())
    }

    pub fn network(&self) -> Result<(Network, ProtectedRegion)> {
        let net = build_grid(&self.grid)?;
        let region = define_protected_region(&net, self.region)?;
        Ok((net, region))
    }

    /// Scenario described by the file, with the set point taken from
    /// `setpoint_file` when present.
    pub fn scenario_spec(&self) -> Result<ScenarioSpec> {
        let mut gating = self.gating;
        if let Some(path) = &self.setpoint_file {
            gating.kbar_veh_per_km = read_setpoint(path)?.kbar_veh_per_km;
        }
        if !(gating.kbar_veh_per_km > 0.0) {
            return Err(Error::param("kbar_veh_per_km", "must be positive"));
        }
        if !(gating.u_min_veh_h >= 0.0 && gating.u_min_veh_h < gating.u_max_veh_h) {
            return Err(Error::param(
                "u_min_veh_h",
                "must be non-negative and below u_max_veh_h",
            ));
        }
        Ok(ScenarioSpec {
            demand: self.demand.profile()?,
            demand_mode: self.demand.mode,
            controller: self.controller,
            gating,
            plant: self.plant,
            fuel: self.fuel,
            seed: self.seed,
            horizon_s: self.horizon_s,
            record_links: self.record_links,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let text = r#"
            seed = 4
            horizon_s = 3600
            out_dir = "runs/a"
            grid = { rows = 6, cols = 6, segments_per_block = 2, link_length_m = 150.0 }
            region = { row_min = 1, row_max = 4, col_min = 1, col_max = 4 }
            demand = { name = "D3", peak_veh_h = 20.0 }
            controller = { kind = "smc", lambda_per_h = 15.0, eta = 200.0 }
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        let spec = cfg.scenario_spec().unwrap();
        assert_eq!(spec.demand.name, "D3");
        assert_eq!(spec.gating, GatingSettings::default());
        assert!(matches!(spec.controller, ControllerSpec::Smc(p) if p.alpha == 0.0));
        assert_eq!(cfg.sweep.points().len(), 9 + 1 + 5 + 5);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut text = RunConfig::default().to_toml().unwrap();
        text.insert_str(0, "speed_limit = 3\n");
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("speed_limit"), "{err}");
    }

    #[test]
    fn bad_values_fail_validation() {
        let mut cfg = RunConfig::default();
        cfg.region = RegionBounds {
            row_min: 0,
            row_max: 5,
            col_min: 0,
            col_max: 5,
        };
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.controller = ControllerSpec::Smc(SmcParams::new(-1.0, 2.0));
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.sweep.etas.push(0.0);
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.demand.peak_veh_h = -3.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn setpoint_file_overrides_kbar() {
        let dir = tempfile::tempdir().unwrap();
        let sp = crate::sensing::SetPoint {
            kbar_veh_per_km: 41.0,
            q_max_veh_per_h: 600.0,
            bin_width_veh_per_km: 2.0,
            warning: None,
        };
        let path = dir.path().join("sp.toml");
        crate::harness::write_setpoint(&path, &sp).unwrap();
        let cfg = RunConfig {
            setpoint_file: Some(path),
            ..RunConfig::default()
        };
        assert_eq!(cfg.scenario_spec().unwrap().gating.kbar_veh_per_km, 41.0);
    }
}
