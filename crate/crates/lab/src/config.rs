//! Flat `key = value` experiment documents.
//!
//! ```text
//! # one third selfish against honest miners
//! name = selfish-third
//! kind = simulate
//! horizon = 1e6
//! pool.0.strategy = SELFISH
//! pool.0.power = 0.3333333333
//! pool.1.strategy = HONEST
//! pool.1.power = 0.6666666667
//! ```
//!
//! Everything after `#` is a comment. Keys may appear at most once.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use piggyback_core::analytic::ClosedFormStrategy;
use piggyback_core::sim::{ScenarioConfig, SimError, StopCondition, SweepAxis};
use piggyback_core::strategy::{DetectorConfig, PoolSpec, RevealPolicy, Strategy, StrategyKind};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_HORIZON: u64 = 1_000_000;
pub const DEFAULT_SEEDS_PER_POINT: u64 = 30;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    value: String,
    line: Option<usize>,
}

/// Parsed but uninterpreted document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    entries: BTreeMap<String, Entry>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::at(Some(line), format!("expected `key = value`, got {content:?}")));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::at(Some(line), "empty key"));
            }
            if let Some(first) = doc.entries.get(key) {
                let first = first.line.map_or(String::new(), |l| format!(" (first set on line {l})"));
                return Err(ConfigError::at(Some(line), format!("duplicate key {key}{first}")));
            }
            doc.entries.insert(
                key.to_owned(),
                Entry {
                    value: value.trim().to_owned(),
                    line: Some(line),
                },
            );
        }
        Ok(doc)
    }

    /// Sets or replaces a key, as command-line overrides do.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(
            key.to_owned(),
            Entry {
                value: value.into(),
                line: None,
            },
        );
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).and_then(|e| e.line)
    }

    /// Sorted `key = value` lines, independent of comments and key order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (key, entry) in &self.entries {
            let _ = writeln!(out, "{key} = {}", entry.value);
        }
        out
    }

    /// SHA-256 of [`Document::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key)
            .ok_or_else(|| ConfigError::new(format!("missing required key {key}")))
    }

    fn parsed<T>(&self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => parse(raw)
                .map(Some)
                .ok_or_else(|| ConfigError::at(self.line(key), format!("{key}: expected {what}, got {raw:?}"))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parsed(key, "a number", |s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
    }

    fn count(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.parsed(key, "a non-negative integer", parse_count)
    }
}

/// Integer literal or an integral real such as `1e6`.
pub fn parse_count(s: &str) -> Option<u64> {
    if let Ok(v) = s.parse::<u64>() {
        return Some(v);
    }
    let v: f64 = s.parse().ok()?;
    (v >= 0.0 && v.fract() == 0.0 && v < 1.8e19).then_some(v as u64)
}

/// Comma-separated reals, or an inclusive `start:stop:step` range.
pub fn parse_grid(s: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    match parts[..] {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) = (start.parse().ok()?, stop.parse().ok()?, step.parse().ok()?);
            if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
                return None;
            }
            let n = ((stop - start) / step + 1e-9).floor() as u64;
            if n > 1_000_000 {
                return None;
            }
            Some((0..=n).map(|k| round12(start + k as f64 * step)).collect())
        }
        [_] => s
            .split(',')
            .map(|v| v.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .filter(|v| !v.is_empty()),
        _ => None,
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Analytic,
    Simulate,
    Sweep,
    Figure,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Analytic => "analytic",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Figure => "figure",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" => Ok(ExperimentKind::Analytic),
            "simulate" => Ok(ExperimentKind::Simulate),
            "sweep" => Ok(ExperimentKind::Sweep),
            "figure" => Ok(ExperimentKind::Figure),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureName {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl FigureName {
    pub const ALL: [FigureName; 4] = [FigureName::Fig2, FigureName::Fig3, FigureName::Fig4, FigureName::Fig5];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureName::Fig2 => "fig2",
            FigureName::Fig3 => "fig3",
            FigureName::Fig4 => "fig4",
            FigureName::Fig5 => "fig5",
        }
    }
}

impl FromStr for FigureName {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        FigureName::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

/// Knobs shared by the simulated figures. `None` picks the figure's own
/// default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureOptions {
    pub gamma: f64,
    pub seed: u64,
    pub seeds: Option<u64>,
    pub horizon: Option<u64>,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            seed: 0,
            seeds: None,
            horizon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticFunction {
    /// `alpha,rate`
    ProgressRate,
    /// `ps,threshold,region`: least piggybacker power against a selfish
    /// pool `ps` with honest miners holding the rest.
    Threshold,
    /// `q,probability` after `events` effective block events.
    Overtake { events: u64 },
    /// `q,n`
    MinWait { threshold: f64 },
    /// `ps,resilience`
    Resilience { strategy: ClosedFormStrategy },
    /// `po,rev,best` over the default strategy family.
    MaxRev { pd: f64 },
}

impl AnalyticFunction {
    pub fn grid_column(&self) -> &'static str {
        match self {
            AnalyticFunction::ProgressRate => "alpha",
            AnalyticFunction::Threshold | AnalyticFunction::Resilience { .. } => "ps",
            AnalyticFunction::Overtake { .. } | AnalyticFunction::MinWait { .. } => "q",
            AnalyticFunction::MaxRev { .. } => "po",
        }
    }

    fn default_grid(&self) -> Vec<f64> {
        let spec = match self {
            AnalyticFunction::ProgressRate => "0:0.5:0.01",
            AnalyticFunction::Threshold | AnalyticFunction::Resilience { .. } => "0.05:0.45:0.05",
            AnalyticFunction::Overtake { .. } | AnalyticFunction::MinWait { .. } => "0.51:0.95:0.01",
            AnalyticFunction::MaxRev { .. } => "0:0.5:0.1",
        };
        parse_grid(spec).expect("valid built-in grid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSpec {
    pub function: AnalyticFunction,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Axis as written, e.g. `pool.0.power`.
    pub axis_name: String,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Analytic(AnalyticSpec),
    Simulate(ScenarioConfig),
    Sweep(ScenarioConfig, SweepSpec),
    Figure(FigureName, FigureOptions),
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub output_path: PathBuf,
    pub seeds_per_point: u64,
    pub task: Task,
    /// Hash of the canonical document the spec was built from.
    pub config_hash: String,
}

impl ExperimentSpec {
    pub fn kind(&self) -> ExperimentKind {
        match self.task {
            Task::Analytic(_) => ExperimentKind::Analytic,
            Task::Simulate(_) => ExperimentKind::Simulate,
            Task::Sweep(..) => ExperimentKind::Sweep,
            Task::Figure(..) => ExperimentKind::Figure,
        }
    }

    pub fn from_document(doc: &Document) -> Result<Self, ConfigError> {
        check_keys(doc)?;
        let kind_raw = doc.required("kind")?;
        let kind: ExperimentKind = kind_raw.parse().map_err(|()| {
            ConfigError::at(
                doc.line("kind"),
                format!("unknown kind {kind_raw:?}; expected analytic, simulate, sweep or figure"),
            )
        })?;
        let gamma = doc.real("gamma")?.unwrap_or(DEFAULT_GAMMA);
        if !(0.0..=1.0).contains(&gamma) {
            return Err(ConfigError::at(doc.line("gamma"), format!("gamma must lie in [0, 1], got {gamma}")));
        }
        let seed = doc.count("seed")?.unwrap_or(0);
        let seeds = doc.count("seeds_per_point")?;
        if seeds == Some(0) {
            return Err(ConfigError::at(doc.line("seeds_per_point"), "seeds_per_point must be at least 1"));
        }
        let horizon = doc.count("horizon")?;
        if horizon == Some(0) {
            return Err(ConfigError::at(doc.line("horizon"), "horizon must be at least 1"));
        }

        let task = match kind {
            ExperimentKind::Analytic => Task::Analytic(analytic_spec(doc)?),
            ExperimentKind::Simulate => Task::Simulate(scenario(doc, gamma, horizon, seed)?),
            ExperimentKind::Sweep => {
                let config = scenario(doc, gamma, horizon, seed)?;
                let sweep = sweep_spec(doc, &config)?;
                Task::Sweep(config, sweep)
            }
            ExperimentKind::Figure => {
                let raw = doc.required("figure")?;
                let figure = raw.parse().map_err(|()| {
                    ConfigError::at(
                        doc.line("figure"),
                        format!("unknown figure {raw:?}; expected fig2, fig3, fig4 or fig5"),
                    )
                })?;
                Task::Figure(
                    figure,
                    FigureOptions {
                        gamma,
                        seed,
                        seeds,
                        horizon,
                    },
                )
            }
        };
        let name = match (doc.get("name"), &task) {
            (Some(name), _) => name.to_owned(),
            (None, Task::Figure(f, _)) => f.as_str().to_owned(),
            (None, _) => kind.as_str().to_owned(),
        };
        let output_path = doc
            .get("output")
            .map_or_else(|| PathBuf::from(format!("{name}.csv")), PathBuf::from);
        Ok(ExperimentSpec {
            name,
            output_path,
            seeds_per_point: seeds.unwrap_or(DEFAULT_SEEDS_PER_POINT),
            task,
            config_hash: doc.hash(),
        })
    }
}

/// Parses and validates a config document, applying defaults.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    ExperimentSpec::from_document(&Document::parse(text)?)
}

const TOP_LEVEL: [&str; 10] = [
    "name",
    "kind",
    "figure",
    "gamma",
    "horizon",
    "seed",
    "seeds_per_point",
    "stop",
    "output",
    "sweep.axis",
];

const ANALYTIC_KEYS: [&str; 6] = ["function", "grid", "events", "threshold", "strategy", "pd"];

const POOL_FIELDS: [&str; 12] = [
    "strategy",
    "power",
    "activation",
    "max_deficit",
    "fork_probability",
    "reveal",
    "wait_blocks",
    "safety_margin",
    "threshold",
    "window",
    "baseline",
    "factor",
];

fn check_keys(doc: &Document) -> Result<(), ConfigError> {
    for (key, entry) in &doc.entries {
        let known = TOP_LEVEL.contains(&key.as_str())
            || key == "sweep.values"
            || key
                .strip_prefix("analytic.")
                .is_some_and(|k| ANALYTIC_KEYS.contains(&k))
            || pool_key(key).is_some_and(|(_, field)| POOL_FIELDS.contains(&field));
        if !known {
            return Err(ConfigError::at(entry.line, format!("unknown key {key}")));
        }
    }
    Ok(())
}

fn pool_key(key: &str) -> Option<(usize, &str)> {
    let rest = key.strip_prefix("pool.")?;
    let (index, field) = rest.split_once('.')?;
    Some((index.parse().ok()?, field))
}

fn analytic_spec(doc: &Document) -> Result<AnalyticSpec, ConfigError> {
    let raw = doc.get("analytic.function").unwrap_or("progress_rate");
    let function = match raw.to_ascii_lowercase().as_str() {
        "progress_rate" => AnalyticFunction::ProgressRate,
        "threshold" => AnalyticFunction::Threshold,
        "overtake" => AnalyticFunction::Overtake {
            events: doc
                .count("analytic.events")?
                .ok_or_else(|| ConfigError::new("missing required key analytic.events"))?,
        },
        "min_wait" => {
            let threshold = doc.real("analytic.threshold")?.unwrap_or(0.999);
            if !(threshold > 0.0 && threshold < 1.0) {
                return Err(ConfigError::at(
                    doc.line("analytic.threshold"),
                    format!("analytic.threshold must lie in (0, 1), got {threshold}"),
                ));
            }
            AnalyticFunction::MinWait { threshold }
        }
        "resilience" => {
            let strategy = match doc.get("analytic.strategy").map(str::to_ascii_uppercase).as_deref() {
                None | Some("SELFISH") => ClosedFormStrategy::Selfish,
                Some("HONEST") => ClosedFormStrategy::Honest,
                Some(other) => {
                    return Err(ConfigError::at(
                        doc.line("analytic.strategy"),
                        format!("analytic.strategy {other:?} has no closed form; expected HONEST or SELFISH"),
                    ))
                }
            };
            AnalyticFunction::Resilience { strategy }
        }
        "maxrev" => AnalyticFunction::MaxRev {
            pd: doc
                .real("analytic.pd")?
                .ok_or_else(|| ConfigError::new("missing required key analytic.pd"))?,
        },
        other => {
            return Err(ConfigError::at(
                doc.line("analytic.function"),
                format!(
                    "unknown analytic function {other:?}; expected progress_rate, threshold, overtake, min_wait, resilience or maxrev"
                ),
            ))
        }
    };
    let grid = match doc.parsed("analytic.grid", "a list or start:stop:step range", parse_grid)? {
        Some(grid) => grid,
        None => function.default_grid(),
    };
    Ok(AnalyticSpec { function, grid })
}

fn scenario(doc: &Document, gamma: f64, horizon: Option<u64>, seed: u64) -> Result<ScenarioConfig, ConfigError> {
    let mut indices: Vec<usize> = doc.entries.keys().filter_map(|k| pool_key(k).map(|(i, _)| i)).collect();
    indices.sort_unstable();
    indices.dedup();
    if indices.is_empty() {
        return Err(ConfigError::new("missing required key pool.0.strategy"));
    }
    if let Some(gap) = (0..indices.len()).find(|&i| indices[i] != i) {
        return Err(ConfigError::new(format!("missing required key pool.{gap}.strategy")));
    }
    let pools = indices
        .iter()
        .map(|&i| pool(doc, i))
        .collect::<Result<Vec<_>, _>>()?;
    let sum: f64 = pools.iter().map(|p| p.power).sum();
    if (sum - 1.0).abs() > piggyback_core::sim::POWER_TOLERANCE {
        let last = format!("pool.{}.power", pools.len() - 1);
        return Err(ConfigError::at(doc.line(&last), format!("powers sum to {sum}, expected 1")));
    }
    let stop = match doc.get("stop").map(str::to_ascii_lowercase).as_deref() {
        None | Some("horizon") => StopCondition::Horizon,
        Some("reveal") | Some("piggyback_revealed") => StopCondition::PiggybackRevealed,
        Some(other) => {
            return Err(ConfigError::at(
                doc.line("stop"),
                format!("unknown stop condition {other:?}; expected horizon or reveal"),
            ))
        }
    };
    let config = ScenarioConfig::new(pools)
        .with_gamma(gamma)
        .with_horizon(horizon.unwrap_or(DEFAULT_HORIZON))
        .with_seed(seed)
        .with_stop(stop);
    config.validate().map_err(|e| ConfigError::new(e.to_string()))?;
    Ok(config)
}

fn pool(doc: &Document, i: usize) -> Result<PoolSpec, ConfigError> {
    let key = |field: &str| format!("pool.{i}.{field}");
    let strategy_key = key("strategy");
    let raw = doc.required(&strategy_key)?;
    let kind: StrategyKind = raw
        .parse()
        .map_err(|e: piggyback_core::strategy::StrategyError| ConfigError::at(doc.line(&strategy_key), e.to_string()))?;
    let power_key = key("power");
    let power = doc
        .real(&power_key)?
        .ok_or_else(|| ConfigError::new(format!("missing required key {power_key}")))?;
    if !(power > 0.0 && power <= 1.0) {
        return Err(ConfigError::at(
            doc.line(&power_key),
            format!("{power_key} must lie in (0, 1], got {power}"),
        ));
    }

    let allowed: &[&str] = match kind {
        StrategyKind::Honest => &[],
        StrategyKind::Selfish => &["activation"],
        StrategyKind::LeadStubborn => &["max_deficit"],
        StrategyKind::Undercut => &["fork_probability"],
        StrategyKind::Piggyback => &["reveal", "wait_blocks", "safety_margin", "threshold"],
        StrategyKind::OpportunisticPiggyback => &[
            "reveal",
            "wait_blocks",
            "safety_margin",
            "threshold",
            "window",
            "baseline",
            "factor",
        ],
    };
    for field in POOL_FIELDS.iter().skip(2) {
        let k = key(field);
        if doc.contains(&k) && !allowed.contains(field) {
            return Err(ConfigError::at(doc.line(&k), format!("{k} does not apply to {kind}")));
        }
    }

    let mut strategy = kind.default_strategy();
    match &mut strategy {
        Strategy::Honest => {}
        Strategy::Selfish { activation } => {
            if let Some(v) = doc.real(&key("activation"))? {
                *activation = v;
            }
        }
        Strategy::LeadStubborn { max_deficit } => {
            if let Some(v) = doc.count(&key("max_deficit"))? {
                *max_deficit = u32::try_from(v)
                    .map_err(|_| ConfigError::at(doc.line(&key("max_deficit")), "max_deficit is too large"))?;
            }
        }
        Strategy::Undercut { fork_probability } => {
            if let Some(v) = doc.real(&key("fork_probability"))? {
                *fork_probability = v;
            }
        }
        Strategy::Piggyback { reveal } => *reveal = reveal_policy(doc, i)?,
        Strategy::OpportunisticPiggyback { reveal, detector } => {
            *reveal = reveal_policy(doc, i)?;
            *detector = detector_config(doc, i)?;
        }
    }
    strategy
        .validate()
        .map_err(|e| ConfigError::at(doc.line(&strategy_key), format!("pool.{i}: {e}")))?;
    Ok(PoolSpec::new(power, strategy))
}

fn reveal_policy(doc: &Document, i: usize) -> Result<RevealPolicy, ConfigError> {
    let key = |field: &str| format!("pool.{i}.{field}");
    let wait = doc.count(&key("wait_blocks"))?;
    let margin = doc
        .count(&key("safety_margin"))?
        .map(|m| u32::try_from(m).map_err(|_| ConfigError::at(doc.line(&key("safety_margin")), "safety_margin is too large")))
        .transpose()?;
    let threshold = doc.real(&key("threshold"))?;
    let reveal_key = key("reveal");
    let mode = match doc.get(&reveal_key) {
        Some(mode) => mode.to_ascii_lowercase(),
        None => match (wait, margin) {
            (Some(_), Some(_)) => "combined".into(),
            (Some(_), None) => "wait".into(),
            (None, Some(_)) if threshold.is_none() => "margin".into(),
            _ => "min_wait".into(),
        },
    };
    let need_wait = || {
        wait.ok_or_else(|| ConfigError::at(doc.line(&reveal_key), format!("missing required key {}", key("wait_blocks"))))
    };
    let policy = match mode.as_str() {
        "wait" => RevealPolicy::WaitBlocks(need_wait()?),
        "margin" => RevealPolicy::SafetyMargin(margin.unwrap_or(1)),
        "combined" => RevealPolicy::Combined {
            wait_blocks: need_wait()?,
            safety_margin: margin.unwrap_or(1),
        },
        "min_wait" => RevealPolicy::MinWait {
            threshold: threshold.unwrap_or(0.999),
            safety_margin: margin.unwrap_or(1),
        },
        other => {
            return Err(ConfigError::at(
                doc.line(&reveal_key),
                format!("unknown reveal policy {other:?}; expected wait, margin, combined or min_wait"),
            ))
        }
    };
    let stray = match policy {
        RevealPolicy::WaitBlocks(_) => [margin.map(|_| "safety_margin"), threshold.map(|_| "threshold")],
        RevealPolicy::SafetyMargin(_) => [wait.map(|_| "wait_blocks"), threshold.map(|_| "threshold")],
        RevealPolicy::Combined { .. } => [threshold.map(|_| "threshold"), None],
        RevealPolicy::MinWait { .. } => [wait.map(|_| "wait_blocks"), None],
    };
    if let Some(field) = stray.into_iter().flatten().next() {
        let k = key(field);
        return Err(ConfigError::at(doc.line(&k), format!("{k} is not used by reveal policy {mode}")));
    }
    Ok(policy)
}

fn detector_config(doc: &Document, i: usize) -> Result<DetectorConfig, ConfigError> {
    let key = |field: &str| format!("pool.{i}.{field}");
    let mut config = DetectorConfig::default();
    if let Some(window) = doc.count(&key("window"))? {
        config.window =
            usize::try_from(window).map_err(|_| ConfigError::at(doc.line(&key("window")), "window is too large"))?;
    }
    if let Some(baseline) = doc.real(&key("baseline"))? {
        config.baseline = baseline;
    }
    if let Some(factor) = doc.real(&key("factor"))? {
        config.factor = factor;
    }
    Ok(config)
}

fn sweep_spec(doc: &Document, config: &ScenarioConfig) -> Result<SweepSpec, ConfigError> {
    let axis_name = doc.required("sweep.axis")?.to_owned();
    let axis: SweepAxis = axis_name
        .parse()
        .map_err(|e: SimError| ConfigError::at(doc.line("sweep.axis"), e.to_string()))?;
    let values = doc
        .parsed("sweep.values", "a list or start:stop:step range", parse_grid)?
        .ok_or_else(|| ConfigError::new("missing required key sweep.values"))?;
    for &value in &values {
        let mut probe = config.clone();
        axis.apply(&mut probe, value)
            .map_err(|e| ConfigError::at(doc.line("sweep.values"), format!("sweep value {value}: {e}")))?;
    }
    Ok(SweepSpec {
        axis_name,
        axis,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_honest_config() {
        let spec = parse_config("kind = simulate\npool.0.strategy = HONEST\npool.0.power = 1\n").unwrap();
        let Task::Simulate(config) = &spec.task else {
            panic!("{spec:?}")
        };
        assert_eq!(config.pools, vec![PoolSpec::honest(1.0)]);
        assert_eq!(config.gamma, 0.5);
        assert_eq!(config.horizon_blocks, 1_000_000);
        assert_eq!(spec.seeds_per_point, 30);
        assert_eq!(spec.output_path, PathBuf::from("simulate.csv"));
    }

    #[test]
    fn power_sum_error_names_the_sum() {
        let text = "kind = simulate\npool.0.strategy = HONEST\npool.0.power = 0.5\npool.1.strategy = SELFISH\npool.1.power = 0.6\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.message.contains("powers sum to 1.1"), "{err}");
        assert_eq!(err.line, Some(5));
    }

    #[test]
    fn unknown_strategy_lists_valid_names() {
        let text = "kind = simulate\n\npool.0.strategy = STUBBORN_X\npool.0.power = 1\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.line, Some(3));
        for kind in StrategyKind::ALL {
            assert!(err.message.contains(kind.name()), "{err}");
        }
    }

    #[test]
    fn missing_kind() {
        let err = parse_config("name = x\n").unwrap_err();
        assert_eq!(err.message, "missing required key kind");
    }

    #[test]
    fn comments_and_duplicates() {
        let doc = Document::parse("# header\nkind = figure # trailing\nfigure = fig4\n").unwrap();
        assert_eq!(doc.get("kind"), Some("figure"));
        let err = Document::parse("seed = 1\nseed = 2\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("line 1"));
        let err = Document::parse("kind figure\n").unwrap_err();
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn hash_ignores_layout() {
        let a = Document::parse("kind = figure\nfigure = fig4\n").unwrap();
        let b = Document::parse("# x\nfigure=fig4\n\nkind   =   figure\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = Document::parse("kind = figure\nfigure = fig5\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:0.5:0.25"), Some(vec![0.0, 0.25, 0.5]));
        assert_eq!(parse_grid("0.1:0.45:0.05").unwrap().len(), 8);
        assert_eq!(parse_grid("0.1:0.45:0.05").unwrap()[1], 0.15);
        assert_eq!(parse_grid("1, 2,3"), Some(vec![1.0, 2.0, 3.0]));
        assert_eq!(parse_grid("1:0:1"), None);
        assert_eq!(parse_grid("a"), None);
        assert_eq!(parse_count("1e6"), Some(1_000_000));
        assert_eq!(parse_count("1.5"), None);
    }

    #[test]
    fn piggyback_pool_parameters() {
        let text = "kind = simulate\nstop = reveal\n\
            pool.0.strategy = piggyback\npool.0.power = 0.45\npool.0.wait_blocks = 500\npool.0.safety_margin = 2\n\
            pool.1.strategy = SELFISH\npool.1.power = 0.3\npool.1.activation = 0.5\n\
            pool.2.strategy = HONEST\npool.2.power = 0.25\n";
        let spec = parse_config(text).unwrap();
        let Task::Simulate(config) = &spec.task else {
            panic!()
        };
        assert_eq!(
            config.pools[0].strategy,
            Strategy::Piggyback {
                reveal: RevealPolicy::Combined {
                    wait_blocks: 500,
                    safety_margin: 2
                }
            }
        );
        assert_eq!(config.pools[1].strategy, Strategy::Selfish { activation: 0.5 });
        assert_eq!(config.stop_condition, StopCondition::PiggybackRevealed);
    }

    #[test]
    fn misplaced_parameter_rejected() {
        let text = "kind = simulate\npool.0.strategy = HONEST\npool.0.power = 1\npool.0.activation = 0.5\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.line, Some(4));
        let err = parse_config("kind = simulate\npool.0.strategy = HONEST\npool.0.power = 1\npool.0.colour = red\n").unwrap_err();
        assert!(err.message.contains("unknown key"));
    }

    #[test]
    fn pool_gap_reported() {
        let text = "kind = simulate\npool.0.strategy = HONEST\npool.0.power = 0.5\npool.2.strategy = HONEST\npool.2.power = 0.5\n";
        assert_eq!(parse_config(text).unwrap_err().message, "missing required key pool.1.strategy");
    }

    #[test]
    fn sweep_and_figure_and_analytic() {
        let text = "kind = sweep\nseeds_per_point = 4\nhorizon = 1000\nsweep.axis = pool.0.power\nsweep.values = 0.1:0.3:0.1\n\
            pool.0.strategy = SELFISH\npool.0.power = 0.2\npool.1.strategy = HONEST\npool.1.power = 0.8\n";
        let spec = parse_config(text).unwrap();
        let Task::Sweep(_, sweep) = &spec.task else { panic!() };
        assert_eq!(sweep.axis, SweepAxis::PoolPower(0));
        assert_eq!(sweep.values, vec![0.1, 0.2, 0.3]);

        let bad = text.replace("pool.0.power\n", "pool.7.power\n");
        assert!(parse_config(&bad).is_err());

        let spec = parse_config("kind = figure\nfigure = FIG3\nseeds_per_point = 10\n").unwrap();
        assert_eq!(spec.name, "fig3");
        assert_eq!(
            spec.task,
            Task::Figure(
                FigureName::Fig3,
                FigureOptions {
                    seeds: Some(10),
                    ..FigureOptions::default()
                }
            )
        );
        assert!(parse_config("kind = figure\nfigure = fig9\n").unwrap_err().message.contains("fig9"));

        let spec = parse_config("kind = analytic\nanalytic.grid = 0, 0.5\n").unwrap();
        assert_eq!(
            spec.task,
            Task::Analytic(AnalyticSpec {
                function: AnalyticFunction::ProgressRate,
                grid: vec![0.0, 0.5]
            })
        );
    }
}
