use std::path::PathBuf;

use piggyback_core::analytic::maxrev::{default_family, evaluate_family, max_rev_over, MaxRevOptions};
use piggyback_core::analytic::{
    min_wait_blocks, overtake_probability, progress_rate, resilience, AlphaDomain, ClosedFormStrategy,
    OvertakeModel, Region,
};
use piggyback_core::sim::{aggregate, run_seed, sweep_cell, ScenarioConfig, SimError, SweepAxis, SweepRow};
use piggyback_core::strategy::{RevealPolicy, Strategy};
use piggyback_core::{run_simulation, SimReport};
use rayon::prelude::*;

use crate::config::{AnalyticFunction, AnalyticSpec, ExperimentSpec, SweepSpec, Task};
use crate::error::LabError;
use crate::figures::reproduce_figure;
use crate::report::{write_artifacts, Outcome, RunDigest};
use crate::table::{ColumnType, ResultTable, Value};

/// Where [`run`] put its artifacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub rows: usize,
}

/// Computes an experiment without touching the disk.
pub fn execute(spec: &ExperimentSpec) -> Result<Outcome, LabError> {
    let mut outcome = match &spec.task {
        Task::Analytic(analytic) => run_analytic(analytic)?,
        Task::Simulate(config) => run_simulate(config, spec.seeds_per_point)?,
        Task::Sweep(config, sweep) => run_sweep(config, sweep, spec.seeds_per_point)?,
        Task::Figure(name, options) => reproduce_figure(*name, options)?,
    };
    outcome.table.metadata.config_hash = spec.config_hash.clone();
    Ok(outcome)
}

/// Runs an experiment and writes its CSV and JSON report. Rerunning the same
/// spec rewrites byte-identical files.
pub fn run(spec: &ExperimentSpec) -> Result<RunSummary, LabError> {
    let outcome = execute(spec)?;
    let json = write_artifacts(&spec.name, spec.kind().as_str(), &spec.output_path, &outcome)?;
    Ok(RunSummary {
        csv: spec.output_path.clone(),
        json,
        rows: outcome.table.rows().len(),
    })
}

/// Short human-readable form of a strategy and its parameters.
pub fn describe(strategy: &Strategy) -> String {
    let reveal = |r: &RevealPolicy| match *r {
        RevealPolicy::WaitBlocks(n) => format!("wait={n}"),
        RevealPolicy::SafetyMargin(k) => format!("margin={k}"),
        RevealPolicy::Combined {
            wait_blocks,
            safety_margin,
        } => format!("wait={wait_blocks} margin={safety_margin}"),
        RevealPolicy::MinWait {
            threshold,
            safety_margin,
        } => format!("threshold={threshold} margin={safety_margin}"),
    };
    let kind = strategy.kind();
    match strategy {
        Strategy::Honest => kind.to_string(),
        Strategy::Selfish { activation } => format!("{kind}(activation={activation})"),
        Strategy::LeadStubborn { max_deficit } => format!("{kind}(max_deficit={max_deficit})"),
        Strategy::Undercut { fork_probability } => format!("{kind}(fork_probability={fork_probability})"),
        Strategy::Piggyback { reveal: r } | Strategy::OpportunisticPiggyback { reveal: r, .. } => {
            format!("{kind}({})", reveal(r))
        }
    }
}

fn run_analytic(spec: &AnalyticSpec) -> Result<Outcome, LabError> {
    let x = spec.function.grid_column();
    let mut table = match spec.function {
        AnalyticFunction::ProgressRate => ResultTable::new([(x, ColumnType::Real), ("rate", ColumnType::Real)]),
        AnalyticFunction::Threshold => ResultTable::new([
            (x, ColumnType::Real),
            ("threshold", ColumnType::Real),
            ("region", ColumnType::Text),
        ]),
        AnalyticFunction::Overtake { .. } => {
            ResultTable::new([(x, ColumnType::Real), ("probability", ColumnType::Real)])
        }
        AnalyticFunction::MinWait { .. } => ResultTable::new([(x, ColumnType::Real), ("n", ColumnType::Int)]),
        AnalyticFunction::Resilience { .. } => {
            ResultTable::new([(x, ColumnType::Real), ("resilience", ColumnType::Real)])
        }
        AnalyticFunction::MaxRev { .. } => ResultTable::new([
            (x, ColumnType::Real),
            ("rev", ColumnType::Real),
            ("best", ColumnType::Text),
        ]),
    };
    let evaluations = match spec.function {
        AnalyticFunction::MaxRev { pd } => Some(evaluate_family(pd, &default_family(), &MaxRevOptions::default())?),
        _ => None,
    };
    for &v in &spec.grid {
        let row: Vec<Value> = match spec.function {
            AnalyticFunction::ProgressRate => vec![v.into(), progress_rate(AlphaDomain::new(v)?).into()],
            AnalyticFunction::Threshold => {
                let threshold = resilience(v, ClosedFormStrategy::Selfish)?;
                let region = Region::classify(threshold, v, 1.0 - v - threshold);
                vec![v.into(), threshold.into(), region.as_str().into()]
            }
            AnalyticFunction::Overtake { events } => {
                vec![v.into(), overtake_probability(OvertakeModel::new(v, events)?).into()]
            }
            AnalyticFunction::MinWait { threshold } => vec![v.into(), min_wait_blocks(v, threshold)?.into()],
            AnalyticFunction::Resilience { strategy } => vec![v.into(), resilience(v, strategy)?.into()],
            AnalyticFunction::MaxRev { pd } => {
                let best = max_rev_over(pd, v, evaluations.as_deref().unwrap_or_default());
                vec![v.into(), best.rev.into(), describe(&best.best).into()]
            }
        };
        table.push(row);
    }
    match spec.function {
        AnalyticFunction::Overtake { events } => table.param("events", events),
        AnalyticFunction::MinWait { threshold } => table.param("threshold", threshold),
        AnalyticFunction::MaxRev { pd } => table.param("pd", pd),
        _ => {}
    }
    Ok(Outcome::new(table))
}

fn seeds_of(config: &ScenarioConfig, n: u64) -> Vec<u64> {
    (0..n).map(|k| run_seed(config.seed, k)).collect()
}

fn run_simulate(config: &ScenarioConfig, seeds_per_point: u64) -> Result<Outcome, LabError> {
    let seeds = seeds_of(config, seeds_per_point);
    let reports = seeds
        .par_iter()
        .map(|&seed| run_simulation(&config.clone().with_seed(seed)))
        .collect::<Result<Vec<_>, _>>()?;
    let pools = config.pools.len();
    let with_overtake = reports.iter().any(|r| r.piggyback_overtook.is_some());

    let mut columns = vec![
        ("seed".to_owned(), ColumnType::Int),
        ("events".into(), ColumnType::Int),
        ("main_length".into(), ColumnType::Int),
        ("orphans".into(), ColumnType::Int),
        ("progress_rate".into(), ColumnType::Real),
    ];
    columns.extend((0..pools).map(|i| (format!("share_{i}"), ColumnType::Real)));
    columns.push(("reveals".into(), ColumnType::Int));
    if with_overtake {
        columns.push(("overtook".into(), ColumnType::Bool));
    }
    columns.push(("digest".into(), ColumnType::Text));
    let mut table = ResultTable::new(columns);
    describe_scenario(&mut table, config);
    table.metadata.seeds = seeds.clone();

    let mut outcome = Outcome::new(table);
    for (report, &seed) in reports.iter().zip(&seeds) {
        let mut row: Vec<Value> = vec![
            seed.into(),
            report.events.into(),
            report.stats.main_length.into(),
            report.stats.orphans.into(),
            report.progress_rate.into(),
        ];
        row.extend(report.per_pool_revenue_share.iter().map(|&s| Value::from(s)));
        row.push(u64::from(report.reveals).into());
        if with_overtake {
            row.push(report.piggyback_overtook.unwrap_or(false).into());
        }
        row.push(format!("{:016x}", report.trace_digest).into());
        outcome.table.push(row);
        outcome.runs.push(RunDigest::new("run", seed, report.trace_digest));
    }
    let row = aggregate(f64::NAN, &reports)?;
    insert_row_aggregates(&mut outcome, &row);
    Ok(outcome)
}

fn insert_row_aggregates(outcome: &mut Outcome, row: &SweepRow) {
    let a = &mut outcome.aggregates;
    a.insert("mean_progress_rate".into(), row.progress.mean);
    a.insert("stderr_progress_rate".into(), row.progress.stderr);
    for (i, share) in row.mean_revenue_share.iter().enumerate() {
        a.insert(format!("mean_share_{i}"), *share);
    }
    if let Some(f) = row.overtake_frequency {
        a.insert("overtake_frequency".into(), f);
    }
}

fn describe_scenario(table: &mut ResultTable, config: &ScenarioConfig) {
    table.param("gamma", config.gamma);
    table.param("horizon", config.horizon_blocks);
    table.param("stop", format!("{:?}", config.stop_condition));
    for (i, pool) in config.pools.iter().enumerate() {
        table.param(&format!("pool.{i}"), format!("{} {}", pool.power, describe(&pool.strategy)));
    }
}

/// [`piggyback_core::sim::sweep`] with the cells spread over threads. Rows
/// are ordered by value and each row aggregates its seeds in order, so the
/// result does not depend on scheduling.
pub fn parallel_sweep(
    base: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    seeds_per_point: u64,
) -> Result<Vec<(SweepRow, Vec<SimReport>)>, SimError> {
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    let cells: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|&v| (0..seeds_per_point).map(move |k| (v, k)))
        .collect();
    let mut reports = cells
        .par_iter()
        .map(|&(value, k)| run_simulation(&sweep_cell(base, axis, value, k)?))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter();
    values
        .iter()
        .map(|&value| {
            let chunk: Vec<SimReport> = reports.by_ref().take(seeds_per_point as usize).collect();
            Ok((aggregate(value, &chunk)?, chunk))
        })
        .collect()
}

fn run_sweep(config: &ScenarioConfig, sweep: &SweepSpec, seeds_per_point: u64) -> Result<Outcome, LabError> {
    let rows = parallel_sweep(config, sweep.axis, &sweep.values, seeds_per_point)?;
    let pools = config.pools.len();
    let with_overtake = rows.iter().any(|(r, _)| r.overtake_frequency.is_some());

    let mut columns = vec![
        (sweep.axis_name.clone(), ColumnType::Real),
        ("progress_mean".into(), ColumnType::Real),
        ("progress_stderr".into(), ColumnType::Real),
    ];
    columns.extend((0..pools).map(|i| (format!("share_{i}"), ColumnType::Real)));
    if with_overtake {
        columns.push(("overtake_frequency".into(), ColumnType::Real));
    }
    let mut table = ResultTable::new(columns);
    describe_scenario(&mut table, config);
    table.param("axis", &sweep.axis_name);
    table.metadata.seeds = seeds_of(config, seeds_per_point);

    let mut outcome = Outcome::new(table);
    for (row, reports) in &rows {
        let mut values: Vec<Value> = vec![row.value.into(), row.progress.mean.into(), row.progress.stderr.into()];
        values.extend(row.mean_revenue_share.iter().map(|&s| Value::from(s)));
        if with_overtake {
            values.push(row.overtake_frequency.unwrap_or(0.0).into());
        }
        outcome.table.push(values);
        for (k, report) in reports.iter().enumerate() {
            outcome.runs.push(RunDigest::new(
                format!("{}={}", sweep.axis_name, row.value),
                run_seed(config.seed, k as u64),
                report.trace_digest,
            ));
        }
    }
    Ok(outcome)
}
