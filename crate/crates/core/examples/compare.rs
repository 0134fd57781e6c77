//! Runs the uncontrolled, PI and sliding-mode scenarios on one demand and
//! prints the relative changes.
//!
//! `cargo run --release -p perimeter-core --example compare -- [peak] [D1|D2|D3]`

use perimeter_core::demand::{build_demand, DemandName};
use perimeter_core::harness::{
    compare, run_scenario, ControllerSpec, GatingSettings, PicParams, ScenarioSpec, SmcParams,
    DEFAULT_HORIZON_S,
};
use perimeter_core::network::{build_grid, define_protected_region, GridSpec, RegionBounds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let peak: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(36.5);
    let name: DemandName = args
        .next()
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(DemandName::D1);

    let net = build_grid(&GridSpec::standard())?;
    let region = define_protected_region(&net, RegionBounds::standard())?;
    let spec = |controller| ScenarioSpec {
        demand: build_demand(name, 0.0, peak).unwrap(),
        demand_mode: Default::default(),
        controller,
        gating: GatingSettings::default(),
        plant: Default::default(),
        fuel: Default::default(),
        seed: 1,
        horizon_s: DEFAULT_HORIZON_S,
        record_links: false,
    };

    let base = run_scenario(&net, &region, &spec(ControllerSpec::None))?;
    println!(
        "NPC: {} vehicles, delay {:.1} s, peak density {:.1} veh/km",
        base.metrics.vehicles,
        base.metrics.mean_delay_s,
        base.peak_density()
    );
    for (label, c) in [
        (
            "PIC",
            ControllerSpec::Pic(PicParams {
                mu: 0.847,
                zeta: 0.002,
            }),
        ),
        ("SMC", ControllerSpec::Smc(SmcParams::new(15.0, 200.0))),
    ] {
        let r = run_scenario(&net, &region, &spec(c))?;
        let d = compare(&base.metrics, &r.metrics);
        println!(
            "{label}: delay {:+.2} %, travel time {:+.2} %, speed {:+.2} %, fuel {:+.2} %",
            d.delay_pct.unwrap_or(f64::NAN),
            d.travel_time_pct.unwrap_or(f64::NAN),
            d.speed_pct.unwrap_or(f64::NAN),
            d.fuel_pct.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
