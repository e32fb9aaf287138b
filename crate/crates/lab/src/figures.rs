//! The four reproducible figures.
//!
//! - `fig2`: simulated vs closed-form progress rate of a selfish pool.
//! - `fig3`: least piggybacker power against a selfish pool, closed form and
//!   found by bisection over simulated overtakes.
//! - `fig4`: blocks to wait for a target overtake probability.
//! - `fig5`: overtake probability after 120 and 1680 blocks.

use std::collections::BTreeMap;

use piggyback_core::analytic::{
    min_wait_blocks, overtake_probability, progress_rate, resilience, AlphaDomain, ClosedFormStrategy,
    OvertakeModel, Region,
};
use piggyback_core::sim::{mean_and_stderr, run_seed, ScenarioConfig, StopCondition};
use piggyback_core::strategy::{PoolSpec, RevealPolicy, Strategy, StrategyKind};
use piggyback_core::run_simulation;
use rayon::prelude::*;

use crate::config::{parse_grid, FigureName, FigureOptions};
use crate::error::LabError;
use crate::report::{Outcome, RunDigest};
use crate::table::{ColumnType, ResultTable};

pub const FIG2_GRID: &str = "0.1:0.45:0.05";
pub const FIG2_HORIZON: u64 = 1_000_000;
pub const FIG2_SEEDS: u64 = 30;

pub const FIG3_GRID: &str = "0.05:0.45:0.05";
pub const FIG3_HORIZON: u64 = 100_000;
pub const FIG3_SEEDS: u64 = 200;
/// Fraction of seeds that must overtake for a piggybacker power to count.
pub const FIG3_SUCCESS: f64 = 0.95;
pub const FIG3_SAFETY_MARGIN: u32 = 1;
/// Bisection stops once the bracket is this narrow.
pub const FIG3_RESOLUTION: f64 = 0.005;

pub const FIG4_THRESHOLDS: [f64; 3] = [0.9, 0.99, 0.999];
pub const FIG5_BLOCKS: [u64; 2] = [120, 1680];

/// `0.51, 0.525, ...` up to `0.945`, then `0.95` itself.
pub fn overtake_grid() -> Vec<f64> {
    let mut grid = parse_grid("0.51:0.95:0.015").expect("valid grid");
    if grid.last() != Some(&0.95) {
        grid.push(0.95);
    }
    grid
}

pub fn reproduce_figure(name: FigureName, options: &FigureOptions) -> Result<Outcome, LabError> {
    match name {
        FigureName::Fig2 => fig2(options),
        FigureName::Fig3 => fig3(options),
        FigureName::Fig4 => fig4(),
        FigureName::Fig5 => fig5(),
    }
}

/// Selfish pool of share `alpha` against honest miners.
pub fn selfish_scenario(alpha: f64, gamma: f64, horizon: u64, seed: u64) -> ScenarioConfig {
    ScenarioConfig::new(vec![
        PoolSpec::new(alpha, StrategyKind::Selfish.default_strategy()),
        PoolSpec::honest(1.0 - alpha),
    ])
    .with_gamma(gamma)
    .with_horizon(horizon)
    .with_seed(seed)
}

fn seed_list(base: u64, n: u64) -> Vec<u64> {
    (0..n).map(|k| run_seed(base, k)).collect()
}

fn fig2(options: &FigureOptions) -> Result<Outcome, LabError> {
    let grid = parse_grid(FIG2_GRID).expect("valid grid");
    let horizon = options.horizon.unwrap_or(FIG2_HORIZON);
    let seeds = seed_list(options.seed, options.seeds.unwrap_or(FIG2_SEEDS));
    let cells: Vec<(f64, u64)> = grid
        .iter()
        .flat_map(|&a| seeds.iter().map(move |&s| (a, s)))
        .collect();
    let reports = cells
        .par_iter()
        .map(|&(alpha, seed)| run_simulation(&selfish_scenario(alpha, options.gamma, horizon, seed)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = ResultTable::new([
        ("alpha", ColumnType::Real),
        ("theory_rate", ColumnType::Real),
        ("sim_rate", ColumnType::Real),
        ("stderr", ColumnType::Real),
    ]);
    table.metadata.seeds = seeds.clone();
    table.param("alpha_grid", FIG2_GRID);
    table.param("gamma", options.gamma);
    table.param("horizon", horizon);
    let mut outcome = Outcome::new(table);
    let mut max_error: f64 = 0.0;
    for (i, &alpha) in grid.iter().enumerate() {
        let chunk = &reports[i * seeds.len()..(i + 1) * seeds.len()];
        let rates: Vec<f64> = chunk.iter().map(|r| r.progress_rate).collect();
        let summary = mean_and_stderr(&rates).expect("at least one seed");
        let theory = progress_rate(AlphaDomain::new(alpha)?);
        max_error = max_error.max((summary.mean - theory).abs());
        outcome
            .table
            .push(vec![alpha.into(), theory.into(), summary.mean.into(), summary.stderr.into()]);
        for (report, &seed) in chunk.iter().zip(&seeds) {
            outcome
                .runs
                .push(RunDigest::new(format!("alpha={alpha}"), seed, report.trace_digest));
        }
    }
    outcome.aggregates.insert("max_abs_error".into(), max_error);
    Ok(outcome)
}

/// Piggybacker `p` that reveals only at the horizon and only with a lead of
/// the safety margin over everyone else, against selfish `ps` and honest
/// miners holding the rest.
pub fn fig3_scenario(p: f64, ps: f64, gamma: f64, horizon: u64, seed: u64) -> ScenarioConfig {
    let mut pools = vec![
        PoolSpec::new(
            p,
            Strategy::Piggyback {
                reveal: RevealPolicy::Combined {
                    wait_blocks: horizon,
                    safety_margin: FIG3_SAFETY_MARGIN,
                },
            },
        ),
        PoolSpec::new(ps, StrategyKind::Selfish.default_strategy()),
    ];
    let ph = 1.0 - p - ps;
    if ph > 1e-12 {
        pools.push(PoolSpec::honest(ph));
    }
    ScenarioConfig::new(pools)
        .with_gamma(gamma)
        .with_horizon(horizon)
        .with_seed(seed)
        .with_stop(StopCondition::PiggybackRevealed)
}

/// Whether `p` overtakes in at least [`FIG3_SUCCESS`] of the seeds. Stops at
/// the first failure too many; `runs` receives every simulated run.
pub fn fig3_success(
    p: f64,
    ps: f64,
    gamma: f64,
    horizon: u64,
    seeds: &[u64],
    runs: &mut Vec<RunDigest>,
) -> Result<bool, LabError> {
    let required = (FIG3_SUCCESS * seeds.len() as f64).ceil() as usize;
    let allowed = seeds.len() - required;
    let mut failures = 0;
    for &seed in seeds {
        let report = run_simulation(&fig3_scenario(p, ps, gamma, horizon, seed))?;
        runs.push(RunDigest::new(format!("ps={ps},p={p}"), seed, report.trace_digest));
        if report.piggyback_overtook != Some(true) {
            failures += 1;
            if failures > allowed {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Least successful piggybacker power for selfish power `ps`, bisected over
/// `(0, 0.5]`. A majority always succeeds, so `0.5` is never simulated.
pub fn fig3_min_power(
    ps: f64,
    gamma: f64,
    horizon: u64,
    seeds: &[u64],
    runs: &mut Vec<RunDigest>,
) -> Result<f64, LabError> {
    let (mut lo, mut hi) = (0.0, 0.5);
    while hi - lo > FIG3_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if fig3_success(mid, ps, gamma, horizon, seeds, runs)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn fig3(options: &FigureOptions) -> Result<Outcome, LabError> {
    let grid = parse_grid(FIG3_GRID).expect("valid grid");
    let horizon = options.horizon.unwrap_or(FIG3_HORIZON);
    let seeds = seed_list(options.seed, options.seeds.unwrap_or(FIG3_SEEDS));
    let rows = grid
        .par_iter()
        .map(|&ps| {
            let mut runs = Vec::new();
            let sim = fig3_min_power(ps, options.gamma, horizon, &seeds, &mut runs)?;
            Ok((ps, sim, runs))
        })
        .collect::<Result<Vec<_>, LabError>>()?;

    let mut table = ResultTable::new([
        ("ps", ColumnType::Real),
        ("min_p_theory", ColumnType::Real),
        ("min_p_sim", ColumnType::Real),
        ("region", ColumnType::Text),
    ]);
    table.metadata.seeds = seeds;
    table.param("ps_grid", FIG3_GRID);
    table.param("gamma", options.gamma);
    table.param("horizon", horizon);
    table.param("success_fraction", FIG3_SUCCESS);
    table.param("safety_margin", FIG3_SAFETY_MARGIN);
    table.param("resolution", FIG3_RESOLUTION);
    let mut outcome = Outcome::new(table);
    let mut max_error: f64 = 0.0;
    for (ps, sim, runs) in rows {
        let theory = resilience(ps, ClosedFormStrategy::Selfish)?;
        let region = Region::classify(theory, ps, 1.0 - ps - theory);
        max_error = max_error.max((theory - sim).abs());
        outcome
            .table
            .push(vec![ps.into(), theory.into(), sim.into(), region.as_str().into()]);
        outcome.runs.extend(runs);
    }
    outcome.aggregates.insert("max_abs_error".into(), max_error);
    Ok(outcome)
}

fn fig4() -> Result<Outcome, LabError> {
    let grid = overtake_grid();
    let mut columns = vec![("q".to_owned(), ColumnType::Real)];
    columns.extend(FIG4_THRESHOLDS.iter().map(|t| (format!("n_for_{t}"), ColumnType::Int)));
    let mut table = ResultTable::new(columns);
    table.param("q_grid", "0.51:0.95:0.015 and 0.95");
    table.param("thresholds", "0.9,0.99,0.999");
    for &q in &grid {
        let mut row = vec![q.into()];
        for &t in &FIG4_THRESHOLDS {
            row.push(min_wait_blocks(q, t)?.into());
        }
        table.push(row);
    }
    Ok(Outcome::new(table))
}

fn fig5() -> Result<Outcome, LabError> {
    let grid = overtake_grid();
    let mut table = ResultTable::new([
        ("q", ColumnType::Real),
        ("prob_at_120", ColumnType::Real),
        ("prob_at_1680", ColumnType::Real),
    ]);
    table.param("q_grid", "0.51:0.95:0.015 and 0.95");
    let mut aggregates = BTreeMap::new();
    let mut min_at = [f64::INFINITY; 2];
    for &q in &grid {
        let mut row = vec![q.into()];
        for (i, &n) in FIG5_BLOCKS.iter().enumerate() {
            let prob = overtake_probability(OvertakeModel::new(q, n)?);
            min_at[i] = min_at[i].min(prob);
            row.push(prob.into());
        }
        table.push(row);
    }
    aggregates.insert("min_prob_at_120".into(), min_at[0]);
    aggregates.insert("min_prob_at_1680".into(), min_at[1]);
    Ok(Outcome {
        aggregates,
        ..Outcome::new(table)
    })
}
