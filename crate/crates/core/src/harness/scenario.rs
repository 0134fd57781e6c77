//! Closed-loop scenario: plant, detectors, controller, signal plans.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, FuelModel, Metrics};
use crate::control::{
    green_allocation, pic_command, smc_command, Activation, EntryApproach, GreenLimits, PicConfig,
    PicState, SmcConfig, SmcInput, SmcState, Switching, SwitchingKind, Transition,
};
use crate::demand::DemandProfile;
use crate::error::{Error, Result};
use crate::network::{LinkId, Network, NodeId, ProtectedRegion};
use crate::plant::{
    all_pairs, webster_splits, DemandLoader, DemandMode, Plant, PlantConfig, SignalPlan,
};
use crate::sensing::{link_density, monitored_links, network_density, network_flow, NfdSample};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcParams {
    pub lambda_per_h: f64,
    pub eta: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub switching: SwitchingKind,
    #[serde(default)]
    pub boundary_width: f64,
}

impl SmcParams {
    pub fn new(lambda_per_h: f64, eta: f64) -> Self {
        Self {
            lambda_per_h,
            eta,
            alpha: 0.0,
            beta: 0.0,
            switching: SwitchingKind::Sign,
            boundary_width: 0.0,
        }
    }

    pub fn with_bounds(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicParams {
    pub mu: f64,
    pub zeta: f64,
}

/// Which perimeter controller runs, if any.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerSpec {
    #[default]
    None,
    Smc(SmcParams),
    Pic(PicParams),
}

impl ControllerSpec {
    /// Checks the parameters against the shared gating settings.
    pub fn validate(&self, gating: &GatingSettings) -> Result<()> {
        controller_state(self, gating).map(|_| ())
    }

    pub fn label(&self) -> String {
        match self {
            ControllerSpec::None => "NPC".into(),
            ControllerSpec::Smc(p) => format!(
                "SMC(lambda={}, eta={}, alpha={}, beta={})",
                p.lambda_per_h, p.eta, p.alpha, p.beta
            ),
            ControllerSpec::Pic(p) => format!("PIC(mu={}, zeta={})", p.mu, p.zeta),
        }
    }
}

/// Settings shared by every controller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatingSettings {
    pub kbar_veh_per_km: f64,
    pub u_min_veh_h: f64,
    pub u_max_veh_h: f64,
    pub activation_ratio: f64,
    pub hold_down_cycles: u32,
}

impl Default for GatingSettings {
    fn default() -> Self {
        Self {
            kbar_veh_per_km: 48.0,
            u_min_veh_h: 480.0,
            u_max_veh_h: 12_960.0,
            activation_ratio: 0.85,
            hold_down_cycles: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub demand: DemandProfile,
    #[serde(default)]
    pub demand_mode: DemandMode,
    #[serde(default)]
    pub controller: ControllerSpec,
    #[serde(default)]
    pub gating: GatingSettings,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub fuel: FuelModel,
    pub seed: u64,
    pub horizon_s: u64,
    #[serde(default)]
    pub record_links: bool,
}

/// Default horizon: 176 minutes.
pub const DEFAULT_HORIZON_S: u64 = 176 * 60;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: u32,
    pub time_s: u64,
    pub density_veh_km: f64,
    pub flow_veh_h: f64,
    pub inflow_veh_h: f64,
    pub outflow_veh_h: f64,
    pub disturbance_veh_h: f64,
    pub active: bool,
    /// Command in force for the next cycle, veh/h.
    pub command_veh_h: Option<f64>,
    pub unclamped_veh_h: Option<f64>,
    pub sliding: Option<f64>,
    pub integral: Option<f64>,
    pub saturated: bool,
    /// Entry greens clipped to their limits.
    pub green_clamped: bool,
    /// Vehicles generated but not yet arrived.
    pub in_system: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub cycle: u32,
    pub link: LinkId,
    pub count: u32,
    pub inflow: u32,
    pub outflow: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub controller: ControllerSpec,
    pub label: String,
    pub demand: String,
    pub seed: u64,
    pub horizon_s: u64,
    pub kbar_veh_per_km: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub meta: ScenarioMeta,
    pub cycles: Vec<CycleRecord>,
    pub links: Vec<LinkRecord>,
    pub metrics: Metrics,
    /// Ticks at which vehicle accounting failed to balance.
    pub conservation_violations: u64,
    /// Most vehicles ever stored on one link minus its storage; never
    /// positive.
    pub max_storage_excess: i64,
    /// Vehicles still in the system at the horizon.
    pub unfinished: u64,
}

impl ScenarioResult {
    pub fn nfd(&self) -> Vec<NfdSample<f64>> {
        self.cycles
            .iter()
            .map(|c| NfdSample {
                cycle: c.cycle,
                density_veh_km: c.density_veh_km,
                flow_veh_h: c.flow_veh_h,
            })
            .collect()
    }

    pub fn peak_density(&self) -> f64 {
        self.cycles
            .iter()
            .map(|c| c.density_veh_km)
            .fold(0.0, f64::max)
    }

    /// First cycle at which a controller was (or would have been) switched
    /// on: density reaching `ratio·k̄`.
    pub fn activation_cycle(&self, ratio: f64) -> Option<usize> {
        let th = ratio * self.meta.kbar_veh_per_km;
        self.cycles.iter().position(|c| c.density_veh_km >= th)
    }

    /// First and last cycle with the controller on.
    pub fn active_window(&self) -> Option<(usize, usize)> {
        let first = self.cycles.iter().position(|c| c.active)?;
        let last = self.cycles.iter().rposition(|c| c.active)?;
        Some((first, last))
    }

    /// Mean of `|k - k̄|` over cycles `first..=last`.
    pub fn mean_abs_deviation(&self, (first, last): (usize, usize)) -> f64 {
        let kbar = self.meta.kbar_veh_per_km;
        let w = &self.cycles[first..=last.min(self.cycles.len() - 1)];
        w.iter()
            .map(|c| (c.density_veh_km - kbar).abs())
            .sum::<f64>()
            / w.len() as f64
    }
}

enum ControllerState {
    None,
    Smc {
        cfg: SmcConfig<f64>,
        st: SmcState<f64>,
    },
    Pic {
        cfg: PicConfig<f64>,
        st: PicState<f64>,
    },
}

struct Gate {
    node: NodeId,
    /// Positions in the node's phase list of gated entry approaches, with
    /// the index into the region's entry list.
    phases: Vec<(usize, usize)>,
}

fn controller_state(spec: &ControllerSpec, g: &GatingSettings) -> Result<ControllerState> {
    Ok(match *spec {
        ControllerSpec::None => ControllerState::None,
        ControllerSpec::Smc(p) => {
            let cfg = SmcConfig {
                lambda_per_h: p.lambda_per_h,
                eta: p.eta,
                alpha: p.alpha,
                beta: p.beta,
                switching: Switching {
                    kind: p.switching,
                    boundary_width: p.boundary_width,
                },
                u_min_veh_h: g.u_min_veh_h,
                u_max_veh_h: g.u_max_veh_h,
                activation_ratio: g.activation_ratio,
            };
            cfg.validate()?;
            ControllerState::Smc {
                cfg,
                st: SmcState::default(),
            }
        }
        ControllerSpec::Pic(p) => {
            let mut cfg = PicConfig::from_identified(p.mu, p.zeta, g.kbar_veh_per_km)?;
            cfg.u_min_veh_h = g.u_min_veh_h;
            cfg.u_max_veh_h = g.u_max_veh_h;
            cfg.activation_ratio = g.activation_ratio;
            cfg.validate()?;
            ControllerState::Pic {
                cfg,
                st: PicState::default(),
            }
        }
    })
}

/// Runs one closed-loop scenario.
pub fn run_scenario(
    network: &Network,
    region: &ProtectedRegion,
    spec: &ScenarioSpec,
) -> Result<ScenarioResult> {
    spec.demand.validate()?;
    spec.plant.validate()?;
    spec.fuel.validate()?;
    let g = spec.gating;
    if !(g.kbar_veh_per_km > 0.0) {
        return Err(Error::param("kbar_veh_per_km", "must be positive"));
    }
    let timing = spec.plant.timing;
    let cycle_s = timing.cycle_s as u64;
    if spec.horizon_s < cycle_s {
        return Err(Error::param("horizon_s", "shorter than one cycle"));
    }
    if (spec.horizon_s as f64) < spec.demand.end_s() + 1800.0 {
        log::warn!(
            "horizon {} s leaves under 30 min after loading ends at {} s; the network may not clear",
            spec.horizon_s,
            spec.demand.end_s()
        );
    }

    let mut controller = controller_state(&spec.controller, &g)?;
    let mut activation = Activation::new(g.activation_ratio, g.hold_down_cycles);

    let gates = gates_for(network, region)?;
    let monitored = monitored_links::<f64>(network, region);
    let region_length_m = region.total_length_m;
    let limits = GreenLimits {
        cycle_s: timing.cycle_s,
        min_green_s: timing.min_green_s,
        max_green_s: timing.cycle_s - 2.0 * timing.lost_time_per_phase_s - timing.min_green_s,
    };

    let rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut plant = Plant::new(network, spec.plant, Some(region), rng)?;
    let mut loader = DemandLoader::new(spec.demand.clone(), spec.demand_mode, all_pairs(network));
    let reroute_every = spec.plant.reroute_period_s.round().max(1.0) as u64;

    let mut cycles = Vec::new();
    let mut link_records = Vec::new();
    let mut violations = 0u64;
    let mut max_excess = i64::MIN;
    let mut prev_k = 0.0;
    let n_cycles = spec.horizon_s / cycle_s;

    for cycle in 0..n_cycles as u32 {
        let start = cycle as u64 * cycle_s;
        for t in start..start + cycle_s {
            if t > 0 && t % reroute_every == 0 {
                let frac = plant.config().reroute_fraction;
                plant.reroute(frac);
            }
            let batch = loader.load_demand(t as f64, plant.tick_s(), plant.rng());
            for (pair, n) in batch {
                plant.inject(pair, n)?;
            }
            plant.step();
            if !plant.conservation().holds() {
                violations += 1;
            }
            for (i, l) in plant.links().iter().enumerate() {
                let excess = l.vehicle_count() as i64 - network.links[i].storage() as i64;
                max_excess = max_excess.max(excess);
            }
        }
        let end_t = plant.time_s();
        let counters = plant.take_counters();

        // Detector emulation.
        let mut dens = BTreeMap::new();
        let mut flows = BTreeMap::new();
        for m in &monitored {
            let link = network.link(m.id);
            let occ = counters.occupancy_pct(m.id).clamp(0.0, 100.0);
            dens.insert(
                m.id,
                link_density(occ, link.lanes, link.jam_density_veh_per_km)?,
            );
            flows.insert(
                m.id,
                counters.rate_veh_h(counters.outflow[m.id.index()], plant.tick_s()),
            );
        }
        let k = network_density(&dens, &monitored)?;
        let q = network_flow(&flows, &monitored)?;
        let inflow = counters.rate_veh_h(counters.region_in, plant.tick_s());
        let outflow = counters.rate_veh_h(counters.region_out, plant.tick_s());
        let disturbance = counters.rate_veh_h(counters.region_disturbance, plant.tick_s());

        let mut rec = CycleRecord {
            cycle,
            time_s: end_t,
            density_veh_km: k,
            flow_veh_h: q,
            inflow_veh_h: inflow,
            outflow_veh_h: outflow,
            disturbance_veh_h: disturbance,
            in_system: plant.in_system(),
            ..CycleRecord::default()
        };

        if spec.record_links {
            for (i, l) in plant.links().iter().enumerate() {
                link_records.push(LinkRecord {
                    cycle,
                    link: LinkId(i as u32),
                    count: l.vehicle_count() as u32,
                    inflow: counters.inflow[i],
                    outflow: counters.outflow[i],
                });
            }
        }

        // Local signal plans from this cycle's approach demand.
        let now = end_t as f64;
        let approach_demand = |l: LinkId| {
            let waiting = plant.link_state(l).waiting(now) as f64;
            (counters.outflow[l.index()] as f64 + waiting) * 3600.0 / timing.cycle_s
        };
        let mut plans: Vec<SignalPlan> = Vec::new();
        for node in network.signalized_nodes() {
            let ins = &network.in_links[node.id.index()];
            if ins.is_empty() {
                continue;
            }
            let d: Vec<f64> = ins.iter().map(|&l| approach_demand(l)).collect();
            let sat: Vec<f64> = ins
                .iter()
                .map(|&l| network.link(l).capacity_veh_h())
                .collect();
            plans.push(webster_splits(node.id, &d, &sat, &timing)?);
        }

        // Perimeter controller.
        let command = if matches!(controller, ControllerState::None) {
            None
        } else {
            let transition = activation.update(k, g.kbar_veh_per_km);
            match (&mut controller, transition) {
                (ControllerState::Smc { st, .. }, Transition::Activated) => {
                    *st = SmcState::activated()
                }
                (ControllerState::Pic { st, .. }, Transition::Activated) => {
                    *st = PicState::activated(inflow, prev_k)
                }
                (ControllerState::Smc { st, .. }, Transition::Deactivated) => st.active = false,
                (ControllerState::Pic { st, .. }, Transition::Deactivated) => st.active = false,
                _ => {}
            }
            rec.active = activation.active;
            if activation.active {
                match &mut controller {
                    ControllerState::Smc { cfg, st } => {
                        let input = SmcInput {
                            k_meas: k,
                            q_out_prev: outflow,
                            q_d_prev: disturbance,
                            kbar: g.kbar_veh_per_km,
                            region_length_m,
                            dt_s: timing.cycle_s,
                        };
                        let step = smc_command(cfg, st, &input)?;
                        rec.sliding = Some(step.sliding);
                        rec.integral = Some(st.integral_x);
                        rec.unclamped_veh_h = Some(step.unclamped_veh_h);
                        rec.saturated = step.saturated;
                        *st = step.state;
                        Some(step.command_veh_h)
                    }
                    ControllerState::Pic { cfg, st } => {
                        let step = pic_command(cfg, st, k, st.prev_k)?;
                        rec.unclamped_veh_h = Some(step.unclamped_veh_h);
                        rec.saturated = step.saturated;
                        *st = step.state;
                        Some(step.command_veh_h)
                    }
                    ControllerState::None => None,
                }
            } else {
                None
            }
        };
        rec.command_veh_h = command;

        if let Some(cmd) = command {
            let entries: Vec<EntryApproach<f64>> = region
                .entry_links
                .iter()
                .map(|&l| {
                    let link = network.link(l);
                    EntryApproach {
                        link: l,
                        saturation_flow_per_lane: link.saturation_flow_veh_per_h,
                        lanes: link.lanes,
                        demand: approach_demand(l),
                    }
                })
                .collect();
            let alloc = green_allocation(cmd, &entries, &limits);
            rec.green_clamped = alloc.clamped;
            for gate in &gates {
                let plan = plans
                    .iter_mut()
                    .find(|p| p.node == gate.node)
                    .expect("plan for gated node");
                apply_gate(
                    plan,
                    gate,
                    &alloc.greens_s,
                    network,
                    &timing,
                    &approach_demand,
                )?;
            }
        }
        for plan in plans {
            plant.set_plan(plan)?;
        }

        prev_k = k;
        cycles.push(rec);
    }

    let horizon = plant.time_s() as f64;
    let unfinished = plant.in_system();
    let metrics = compute_metrics(plant.vehicles(), horizon, &spec.fuel);
    Ok(ScenarioResult {
        meta: ScenarioMeta {
            controller: spec.controller,
            label: spec.controller.label(),
            demand: spec.demand.name.clone(),
            seed: spec.seed,
            horizon_s: spec.horizon_s,
            kbar_veh_per_km: g.kbar_veh_per_km,
        },
        cycles,
        links: link_records,
        metrics,
        conservation_violations: violations,
        max_storage_excess: max_excess,
        unfinished,
    })
}

fn gates_for(network: &Network, region: &ProtectedRegion) -> Result<Vec<Gate>> {
    let mut gates: Vec<Gate> = Vec::new();
    for (ei, &l) in region.entry_links.iter().enumerate() {
        let node = network.link(l).downstream_node;
        if network.node(node).kind != crate::network::NodeKind::Signalized {
            return Err(Error::InvalidRegion(format!(
                "entry link {l} does not end at a signal"
            )));
        }
        let phase = network.in_links[node.index()]
            .iter()
            .position(|&x| x == l)
            .expect("entry link among node approaches");
        match gates.iter_mut().find(|g| g.node == node) {
            Some(g) => g.phases.push((phase, ei)),
            None => gates.push(Gate {
                node,
                phases: vec![(phase, ei)],
            }),
        }
    }
    Ok(gates)
}

/// Overrides the gated phases of `plan` with the allocated greens and
/// shares what is left among the other phases.
fn apply_gate(
    plan: &mut SignalPlan,
    gate: &Gate,
    greens: &[f64],
    network: &Network,
    timing: &crate::plant::SignalTiming,
    demand: &dyn Fn(LinkId) -> f64,
) -> Result<()> {
    let ins = &network.in_links[gate.node.index()];
    let n = ins.len();
    let available = timing.effective_green(n);
    let free: Vec<usize> = (0..n)
        .filter(|i| !gate.phases.iter().any(|(p, _)| p == i))
        .collect();
    let reserve = free.len() as f64 * timing.min_green_s;
    // Gating only ever shortens the local plan's green.
    let mut fixed: Vec<(usize, f64)> = gate
        .phases
        .iter()
        .map(|&(p, ei)| (p, greens[ei].min(plan.greens_s[p]).max(timing.min_green_s)))
        .collect();
    let fixed_sum: f64 = fixed.iter().map(|(_, g)| g).sum();
    let budget = available - reserve;
    if fixed_sum > budget {
        let scale = budget / fixed_sum;
        for (_, g) in &mut fixed {
            *g = (*g * scale).max(timing.min_green_s);
        }
    }
    let fixed_sum: f64 = fixed.iter().map(|(_, g)| g).sum();
    let mut out = vec![0.0; n];
    for &(p, g) in &fixed {
        out[p] = g;
    }
    if free.is_empty() {
        // Every approach is gated; any slack goes to the first one.
        out[fixed[0].0] += available - fixed_sum;
    } else {
        let rest = available - fixed_sum;
        let w: Vec<f64> = free
            .iter()
            .map(|&i| demand(ins[i]) / network.link(ins[i]).capacity_veh_h())
            .collect();
        let share = crate::plant::split_with_floor(&w, rest, timing.min_green_s);
        for (j, &i) in free.iter().enumerate() {
            out[i] = share[j];
        }
    }
    plan.greens_s = out;
    debug_assert!(plan.is_consistent(timing.min_green_s - 1e-6));
    Ok(())
}
