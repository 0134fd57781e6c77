//! Parameter sweeps: one scenario per grid point, compared with the
//! uncontrolled baseline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compare, Comparison, Metrics};
use super::scenario::{
    run_scenario, ControllerSpec, PicParams, ScenarioResult, ScenarioSpec, SmcParams,
};
use crate::error::Result;
use crate::network::{Network, ProtectedRegion};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub label: String,
    pub controller: ControllerSpec,
}

/// SMC rows over `λ × η`, λ varying slowest.
pub fn smc_grid(lambdas: &[f64], etas: &[f64]) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &l in lambdas {
        for &e in etas {
            out.push(SweepPoint {
                label: format!("SMC {}", out.len() + 1),
                controller: ControllerSpec::Smc(SmcParams::new(l, e)),
            });
        }
    }
    out
}

/// Rows varying the outflow-error bound α with β = 0.
pub fn alpha_sweep(base: SmcParams, alphas: &[f64]) -> Vec<SweepPoint> {
    alphas
        .iter()
        .map(|&a| SweepPoint {
            label: format!("alpha={a}"),
            controller: ControllerSpec::Smc(base.with_bounds(a, 0.0)),
        })
        .collect()
}

/// Rows varying the disturbance-error bound β with α = 0.
pub fn beta_sweep(base: SmcParams, betas: &[f64]) -> Vec<SweepPoint> {
    betas
        .iter()
        .map(|&b| SweepPoint {
            label: format!("beta={b}"),
            controller: ControllerSpec::Smc(base.with_bounds(0.0, b)),
        })
        .collect()
}

pub fn pic_point(label: &str, mu: f64, zeta: f64) -> SweepPoint {
    SweepPoint {
        label: label.into(),
        controller: ControllerSpec::Pic(PicParams { mu, zeta }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub controller: ControllerSpec,
    pub metrics: Metrics,
    pub change: Comparison,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub baseline: Metrics,
    pub rows: Vec<TableRow>,
    /// Summed over every run behind the table.
    pub conservation_violations: u64,
    /// Largest storage overrun seen in any run; never positive.
    pub max_storage_excess: i64,
}

/// Runs the uncontrolled baseline and every point of the grid, in parallel.
/// Rows come back in grid order.
pub fn sweep(
    network: &Network,
    region: &ProtectedRegion,
    base: &ScenarioSpec,
    points: &[SweepPoint],
) -> Result<SweepTable> {
    sweep_seeds(network, region, base, points, &[base.seed])
}

/// Like [`sweep`], with every row (baseline included) pooled over a seed
/// list. An empty list means `base.seed` alone.
pub fn sweep_seeds(
    network: &Network,
    region: &ProtectedRegion,
    base: &ScenarioSpec,
    points: &[SweepPoint],
    seeds: &[u64],
) -> Result<SweepTable> {
    let seeds = if seeds.is_empty() {
        std::slice::from_ref(&base.seed)
    } else {
        seeds
    };
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let spec = ScenarioSpec {
                seed,
                ..base.clone()
            };
            sweep_results(network, region, &spec, points)
        })
        .collect::<Result<Vec<_>>>()?;
    let all_runs = || {
        per_seed
            .iter()
            .flat_map(|(b, rs)| std::iter::once(b).chain(rs))
    };
    let conservation_violations = all_runs().map(|r| r.conservation_violations).sum();
    let max_storage_excess = all_runs().map(|r| r.max_storage_excess).max().unwrap_or(0);
    let baseline = Metrics::pooled(&per_seed.iter().map(|(b, _)| b.metrics).collect::<Vec<_>>());
    let rows = points
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let m = Metrics::pooled(
                &per_seed
                    .iter()
                    .map(|(_, rs)| rs[j].metrics)
                    .collect::<Vec<_>>(),
            );
            TableRow {
                label: p.label.clone(),
                controller: p.controller,
                metrics: m,
                change: compare(&baseline, &m),
            }
        })
        .collect();
    Ok(SweepTable {
        baseline,
        rows,
        conservation_violations,
        max_storage_excess,
    })
}

/// Full results of the baseline and of every grid point.
pub fn sweep_results(
    network: &Network,
    region: &ProtectedRegion,
    base: &ScenarioSpec,
    points: &[SweepPoint],
) -> Result<(ScenarioResult, Vec<ScenarioResult>)> {
    let mut specs = vec![ScenarioSpec {
        controller: ControllerSpec::None,
        ..base.clone()
    }];
    specs.extend(points.iter().map(|p| ScenarioSpec {
        controller: p.controller,
        ..base.clone()
    }));
    let mut results = specs
        .par_iter()
        .map(|s| run_scenario(network, region, s))
        .collect::<Result<Vec<_>>>()?;
    let baseline = results.remove(0);
    Ok((baseline, results))
}
