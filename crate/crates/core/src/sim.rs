//! Deterministic discrete-event simulation over block-creation events.
//!
//! Each event draws the finder pool in proportion to its power, lets it mine
//! and publish, propagates reactions of the withholding pools, and finally
//! runs the piggyback reveal and detector hooks.

use alloc::string::String;
use alloc::vec::Vec;
use core::hash::Hasher;
use core::str::FromStr;

use fnv::FnvHasher;
use libm::sqrt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chain::{BlockTree, ChainError, ChainStats, PoolId, TiePolicy};
use crate::strategy::{
    Agent, ChainEvent, Observation, PoolSpec, PowerContext, RevealPolicy, Strategy, StrategyError,
};

/// Generator behind every simulation run.
pub type SimRng = ChaCha8Rng;

pub const POWER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("pool powers sum to {0}, expected 1")]
    PowerSum(f64),
    #[error("pool {0} has power {1}, expected a value in (0, 1]")]
    InvalidPower(usize, f64),
    #[error("scenario has no pools")]
    NoPools,
    #[error("too many pools")]
    TooManyPools,
    #[error("horizon must be at least one block event")]
    EmptyHorizon,
    #[error("gamma must lie in [0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("pool {pool}: {source}")]
    Strategy { pool: usize, source: StrategyError },
    #[error("unknown sweep axis {0:?}")]
    UnknownAxis(String),
    #[error("sweep value {value} is invalid for axis {axis}")]
    InvalidAxisValue { axis: String, value: f64 },
    #[error("no reports to aggregate")]
    NoReports,
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopCondition {
    Horizon,
    /// Stop right after the first piggyback reveal.
    PiggybackRevealed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub pools: Vec<PoolSpec>,
    pub gamma: f64,
    pub horizon_blocks: u64,
    pub seed: u64,
    pub stop_condition: StopCondition,
}

impl ScenarioConfig {
    pub fn new(pools: Vec<PoolSpec>) -> Self {
        Self {
            pools,
            gamma: 0.5,
            horizon_blocks: 1_000_000,
            seed: 0,
            stop_condition: StopCondition::Horizon,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon_blocks = horizon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stop(mut self, stop: StopCondition) -> Self {
        self.stop_condition = stop;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.pools.is_empty() {
            return Err(SimError::NoPools);
        }
        if self.pools.len() >= usize::from(u16::MAX) {
            return Err(SimError::TooManyPools);
        }
        for (i, pool) in self.pools.iter().enumerate() {
            if !(pool.power > 0.0 && pool.power <= 1.0) {
                return Err(SimError::InvalidPower(i, pool.power));
            }
            pool.strategy
                .validate()
                .map_err(|source| SimError::Strategy { pool: i, source })?;
        }
        let sum: f64 = self.pools.iter().map(|p| p.power).sum();
        if (sum - 1.0).abs() > POWER_TOLERANCE {
            return Err(SimError::PowerSum(sum));
        }
        if self.horizon_blocks == 0 {
            return Err(SimError::EmptyHorizon);
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(SimError::InvalidGamma(self.gamma));
        }
        Ok(())
    }

    /// Power of the pools that stay in the public race while deviating, and
    /// of the honest ones (opportunistic pools count as honest).
    pub fn power_context(&self) -> PowerContext {
        let mut ctx = PowerContext {
            deviant: 0.0,
            honest: 0.0,
        };
        for pool in &self.pools {
            match pool.strategy {
                s if s.is_public_deviant() => ctx.deviant += pool.power,
                Strategy::Honest | Strategy::OpportunisticPiggyback { .. } => ctx.honest += pool.power,
                _ => {}
            }
        }
        ctx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub stats: ChainStats,
    pub progress_rate: f64,
    pub per_pool_revenue_share: Vec<f64>,
    /// Blocks found by each pool, including discarded and withheld ones.
    pub per_pool_mined: Vec<u64>,
    /// Outcome of the reveal that ended a `PiggybackRevealed` run; `false`
    /// when the horizon passed without a reveal. `None` for horizon runs and
    /// runs without a piggybacker.
    pub piggyback_overtook: Option<bool>,
    pub reveals: u32,
    pub successful_reveals: u32,
    pub events: u64,
    /// Height of the highest block in the tree, withheld or not.
    pub max_height: u32,
    pub trace_digest: u64,
}

/// Runs one scenario to its stop condition.
pub fn run_simulation(config: &ScenarioConfig) -> Result<SimReport, SimError> {
    config.validate()?;
    Simulation::new(config)?.run()
}

struct Simulation<'a> {
    config: &'a ScenarioConfig,
    tree: BlockTree,
    agents: Vec<Agent>,
    cumulative: Vec<f64>,
    reactive: Vec<usize>,
    watchers: Vec<usize>,
    pool_max_height: Vec<u32>,
    per_pool_mined: Vec<u64>,
    tie: TiePolicy,
    rng: SimRng,
    digest: FnvHasher,
    scratch: Vec<crate::chain::BlockId>,
}

impl<'a> Simulation<'a> {
    fn new(config: &'a ScenarioConfig) -> Result<Self, SimError> {
        let ctx = config.power_context();
        let agents: Vec<Agent> = config
            .pools
            .iter()
            .enumerate()
            .map(|(i, spec)| Agent::new(PoolId(i as u16), spec, ctx))
            .collect();
        let mut acc = 0.0;
        let cumulative = config
            .pools
            .iter()
            .map(|p| {
                acc += p.power;
                acc
            })
            .collect();
        let reactive = (0..agents.len())
            .filter(|&i| agents[i].reacts_to_public_blocks())
            .collect();
        let watchers = (0..agents.len())
            .filter(|&i| agents[i].watches_events())
            .collect();
        let capacity = usize::try_from(config.horizon_blocks.min(1 << 24)).unwrap_or(0);
        Ok(Self {
            config,
            tree: BlockTree::with_capacity(capacity),
            pool_max_height: alloc::vec![0; agents.len()],
            per_pool_mined: alloc::vec![0; agents.len()],
            agents,
            cumulative,
            reactive,
            watchers,
            tie: TiePolicy::new(config.gamma)?,
            rng: SimRng::seed_from_u64(config.seed),
            digest: FnvHasher::default(),
            scratch: Vec::new(),
        })
    }

    fn draw_finder(&mut self) -> usize {
        let total = *self.cumulative.last().expect("validated non-empty");
        let u = self.rng.random::<f64>() * total;
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }

    fn apply(&mut self, pool: usize, count: usize, event: u64) -> Result<(), SimError> {
        if count > 0 {
            self.scratch.clear();
            self.scratch.extend(
                self.agents[pool]
                    .take_withheld(count)
                    .map_err(|source| SimError::Strategy { pool, source })?,
            );
            for &id in &self.scratch {
                self.tree.publish(id)?;
                self.digest.write_u32(id.index() as u32);
            }
        }
        self.agents[pool].synced(&self.tree, event);
        Ok(())
    }

    /// Lets withholding pools react until nobody publishes anything new.
    fn propagate(&mut self, event: u64) -> Result<(), SimError> {
        for _ in 0..=self.reactive.len() {
            let mut changed = false;
            for k in 0..self.reactive.len() {
                let i = self.reactive[k];
                if self.agents[i].last_seen_height() == self.tree.public_height() {
                    continue;
                }
                let action =
                    self.agents[i].on_event(Observation::OtherPublicBlock, &self.tree, &mut self.rng);
                changed |= action.publish > 0;
                self.apply(i, action.publish, event)?;
            }
            if !changed {
                break;
            }
        }
        Ok(())
    }

    fn others_max_height(&self, pool: usize) -> u32 {
        self.pool_max_height
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != pool)
            .map(|(_, &h)| h)
            .max()
            .unwrap_or(0)
    }

    fn run(mut self) -> Result<SimReport, SimError> {
        let mut settled = 0u64;
        let mut events = 0u64;
        let mut ended_on_reveal = false;
        for event in 0..self.config.horizon_blocks {
            events = event + 1;
            self.tree.set_clock(event.min(u64::from(u32::MAX - 1)) as u32);

            let finder = self.draw_finder();
            let target = self.agents[finder].mine_target(&self.tree, self.tie, &mut self.rng);
            let block = self.tree.extend(target, PoolId(finder as u16), false)?;
            self.digest.write_u16(finder as u16);
            self.digest.write_u32(target.index() as u32);
            let height = self.tree.height(block);
            self.pool_max_height[finder] = self.pool_max_height[finder].max(height);
            self.per_pool_mined[finder] += 1;

            let action = self.agents[finder].on_event(
                Observation::MyBlock { block, target },
                &self.tree,
                &mut self.rng,
            );
            self.apply(finder, action.publish, event)?;
            self.propagate(event)?;

            let now_settled = self.tree.settled_orphans();
            let record = ChainEvent {
                mined: 1,
                orphaned: now_settled.saturating_sub(settled) as u32,
            };
            settled = now_settled;

            let mut revealed = false;
            for k in 0..self.watchers.len() {
                let i = self.watchers[k];
                let others = self.others_max_height(i);
                let action = self.agents[i].end_of_event(event, &self.tree, record, others);
                if action.publish > 0 {
                    revealed = true;
                    self.digest.write_u8(0xff);
                    self.apply(i, action.publish, event)?;
                    self.propagate(event)?;
                }
            }
            if revealed {
                settled = self.tree.settled_orphans();
                if self.config.stop_condition == StopCondition::PiggybackRevealed {
                    ended_on_reveal = true;
                    break;
                }
            }
        }
        Ok(self.report(events, ended_on_reveal))
    }

    fn report(self, events: u64, ended_on_reveal: bool) -> SimReport {
        let stats = self.tree.chain_stats(self.agents.len());
        let share = |n: u64| {
            if stats.main_length == 0 {
                0.0
            } else {
                n as f64 / stats.main_length as f64
            }
        };
        let per_pool_revenue_share = stats.per_pool_main.iter().map(|&n| share(n)).collect();
        let all_reveals = self.watchers.iter().flat_map(|&i| self.agents[i].reveals());
        let (reveals, successful_reveals) =
            all_reveals.fold((0u32, 0u32), |(n, ok), r| (n + 1, ok + u32::from(r.overtook)));
        let piggyback_overtook = match self.config.stop_condition {
            StopCondition::PiggybackRevealed if !self.watchers.is_empty() => Some(
                ended_on_reveal
                    && self
                        .watchers
                        .iter()
                        .filter_map(|&i| self.agents[i].reveals().last())
                        .any(|r| r.overtook),
            ),
            _ => None,
        };
        SimReport {
            progress_rate: stats.progress_rate(),
            per_pool_revenue_share,
            per_pool_mined: self.per_pool_mined,
            piggyback_overtook,
            reveals,
            successful_reveals,
            events,
            max_height: self.pool_max_height.iter().copied().max().unwrap_or(0),
            trace_digest: self.digest.finish(),
            stats,
        }
    }
}

/// Mean and standard error of the progress rate across runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressSummary {
    pub mean: f64,
    pub stderr: f64,
}

pub fn measure_progress_rate(reports: &[SimReport]) -> Result<ProgressSummary, SimError> {
    let rates: Vec<f64> = reports.iter().map(|r| r.progress_rate).collect();
    mean_and_stderr(&rates).ok_or(SimError::NoReports)
}

/// Sample mean and standard error (sample deviation over sqrt n).
pub fn mean_and_stderr(values: &[f64]) -> Option<ProgressSummary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        sqrt(var / n)
    };
    Some(ProgressSummary { mean, stderr })
}

/// Numeric scenario field addressed by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Gamma,
    Horizon,
    /// Power of one pool; the other pools are rescaled to keep the sum at 1.
    PoolPower(usize),
    PoolParam(usize, PoolParam),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolParam {
    Activation,
    MaxDeficit,
    ForkProbability,
    WaitBlocks,
    SafetyMargin,
    Threshold,
}

impl PoolParam {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "activation" => PoolParam::Activation,
            "max_deficit" => PoolParam::MaxDeficit,
            "fork_probability" => PoolParam::ForkProbability,
            "wait_blocks" => PoolParam::WaitBlocks,
            "safety_margin" => PoolParam::SafetyMargin,
            "threshold" => PoolParam::Threshold,
            _ => return None,
        })
    }
}

impl FromStr for SweepAxis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || SimError::UnknownAxis(s.into());
        match s {
            "gamma" => return Ok(SweepAxis::Gamma),
            "horizon" => return Ok(SweepAxis::Horizon),
            _ => {}
        }
        let mut parts = s.split('.');
        let (Some("pool"), Some(index), Some(field), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(unknown());
        };
        let index: usize = index.parse().map_err(|_| unknown())?;
        if field == "power" {
            Ok(SweepAxis::PoolPower(index))
        } else {
            PoolParam::parse(field)
                .map(|p| SweepAxis::PoolParam(index, p))
                .ok_or_else(unknown)
        }
    }
}

fn as_count(value: f64) -> Option<u64> {
    (value >= 0.0 && libm::trunc(value) == value && value < 1.8e19).then_some(value as u64)
}

impl SweepAxis {
    /// Writes `value` into `config`.
    pub fn apply(&self, config: &mut ScenarioConfig, value: f64) -> Result<(), SimError> {
        let invalid = || SimError::InvalidAxisValue {
            axis: alloc::format!("{self:?}"),
            value,
        };
        let pool_of = |config: &mut ScenarioConfig, i: usize| -> Result<(), SimError> {
            if i < config.pools.len() {
                Ok(())
            } else {
                Err(SimError::UnknownAxis(alloc::format!("pool.{i}")))
            }
        };
        match *self {
            SweepAxis::Gamma => config.gamma = value,
            SweepAxis::Horizon => config.horizon_blocks = as_count(value).ok_or_else(invalid)?,
            SweepAxis::PoolPower(i) => {
                pool_of(config, i)?;
                if !(value > 0.0 && value <= 1.0) {
                    return Err(invalid());
                }
                let rest: f64 = config
                    .pools
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, p)| p.power)
                    .sum();
                if rest > 0.0 {
                    let scale = (1.0 - value) / rest;
                    for (j, pool) in config.pools.iter_mut().enumerate() {
                        if j != i {
                            pool.power *= scale;
                        }
                    }
                }
                config.pools[i].power = value;
            }
            SweepAxis::PoolParam(i, param) => {
                pool_of(config, i)?;
                let strategy = &mut config.pools[i].strategy;
                match (param, strategy) {
                    (PoolParam::Activation, Strategy::Selfish { activation }) => *activation = value,
                    (PoolParam::MaxDeficit, Strategy::LeadStubborn { max_deficit }) => {
                        *max_deficit = as_count(value)
                            .and_then(|v| u32::try_from(v).ok())
                            .ok_or_else(invalid)?
                    }
                    (PoolParam::ForkProbability, Strategy::Undercut { fork_probability }) => {
                        *fork_probability = value
                    }
                    (
                        param,
                        Strategy::Piggyback { reveal } | Strategy::OpportunisticPiggyback { reveal, .. },
                    ) => *reveal = sweep_reveal(*reveal, param, value).ok_or_else(invalid)?,
                    _ => return Err(invalid()),
                }
            }
        }
        config.validate()
    }
}

fn sweep_reveal(reveal: RevealPolicy, param: PoolParam, value: f64) -> Option<RevealPolicy> {
    let margin = |r: RevealPolicy| match r {
        RevealPolicy::SafetyMargin(k)
        | RevealPolicy::Combined { safety_margin: k, .. }
        | RevealPolicy::MinWait { safety_margin: k, .. } => Some(k),
        RevealPolicy::WaitBlocks(_) => None,
    };
    Some(match param {
        PoolParam::WaitBlocks => {
            let wait_blocks = as_count(value)?;
            match margin(reveal) {
                Some(safety_margin) => RevealPolicy::Combined {
                    wait_blocks,
                    safety_margin,
                },
                None => RevealPolicy::WaitBlocks(wait_blocks),
            }
        }
        PoolParam::SafetyMargin => {
            let k = u32::try_from(as_count(value)?).ok()?;
            match reveal {
                RevealPolicy::WaitBlocks(wait_blocks) | RevealPolicy::Combined { wait_blocks, .. } => {
                    RevealPolicy::Combined {
                        wait_blocks,
                        safety_margin: k,
                    }
                }
                RevealPolicy::MinWait { threshold, .. } => RevealPolicy::MinWait {
                    threshold,
                    safety_margin: k,
                },
                RevealPolicy::SafetyMargin(_) => RevealPolicy::SafetyMargin(k),
            }
        }
        PoolParam::Threshold => RevealPolicy::MinWait {
            threshold: value,
            safety_margin: margin(reveal).unwrap_or(1),
        },
        _ => return None,
    })
}

/// Aggregated metrics of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub progress: ProgressSummary,
    pub mean_revenue_share: Vec<f64>,
    /// Fraction of runs whose piggybacker overtook, for reveal-stopped runs.
    pub overtake_frequency: Option<f64>,
    pub digests: Vec<u64>,
}

/// Seed of the `k`-th run at every sweep point.
pub fn run_seed(base: u64, k: u64) -> u64 {
    base.wrapping_add(k)
}

/// Builds the config of one sweep cell.
pub fn sweep_cell(
    base: &ScenarioConfig,
    axis: SweepAxis,
    value: f64,
    seed_index: u64,
) -> Result<ScenarioConfig, SimError> {
    let mut config = base.clone();
    axis.apply(&mut config, value)?;
    config.seed = run_seed(base.seed, seed_index);
    Ok(config)
}

pub fn aggregate(value: f64, reports: &[SimReport]) -> Result<SweepRow, SimError> {
    let progress = measure_progress_rate(reports)?;
    let pools = reports[0].per_pool_revenue_share.len();
    let n = reports.len() as f64;
    let mean_revenue_share = (0..pools)
        .map(|i| reports.iter().map(|r| r.per_pool_revenue_share[i]).sum::<f64>() / n)
        .collect();
    let outcomes: Vec<bool> = reports.iter().filter_map(|r| r.piggyback_overtook).collect();
    let overtake_frequency = (!outcomes.is_empty())
        .then(|| outcomes.iter().filter(|&&o| o).count() as f64 / outcomes.len() as f64);
    Ok(SweepRow {
        value,
        progress,
        mean_revenue_share,
        overtake_frequency,
        digests: reports.iter().map(|r| r.trace_digest).collect(),
    })
}

/// Runs `values` x `seeds_per_point` cells sequentially; rows come back
/// ordered by value.
pub fn sweep(
    base: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    seeds_per_point: u64,
) -> Result<Vec<SweepRow>, SimError> {
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    values
        .into_iter()
        .map(|value| {
            let reports = (0..seeds_per_point)
                .map(|k| run_simulation(&sweep_cell(base, axis, value, k)?))
                .collect::<Result<Vec<_>, _>>()?;
            aggregate(value, &reports)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::StrategyKind;
    use alloc::vec;

    fn selfish_third(gamma: f64, horizon: u64, seed: u64) -> ScenarioConfig {
        ScenarioConfig::new(vec![
            PoolSpec::new(1.0 / 3.0, StrategyKind::Selfish.default_strategy()),
            PoolSpec::honest(2.0 / 3.0),
        ])
        .with_gamma(gamma)
        .with_horizon(horizon)
        .with_seed(seed)
    }

    #[test]
    fn all_honest_rate_is_exactly_one() {
        let config = ScenarioConfig::new(vec![PoolSpec::honest(0.6), PoolSpec::honest(0.4)])
            .with_horizon(10_000)
            .with_seed(3);
        let report = run_simulation(&config).unwrap();
        assert_eq!(report.progress_rate, 1.0);
        assert_eq!(report.stats.orphans, 0);
        assert_eq!(report.events, 10_000);
    }

    #[test]
    fn invalid_powers_rejected() {
        let config = ScenarioConfig::new(vec![PoolSpec::honest(0.5), PoolSpec::honest(0.6)]);
        assert!(matches!(run_simulation(&config), Err(SimError::PowerSum(_))));
        let config = ScenarioConfig::new(vec![PoolSpec::honest(1.0)]).with_horizon(0);
        assert_eq!(run_simulation(&config), Err(SimError::EmptyHorizon));
        let config = ScenarioConfig::new(vec![PoolSpec::honest(1.0)]).with_gamma(2.0);
        assert_eq!(run_simulation(&config), Err(SimError::InvalidGamma(2.0)));
        let config = ScenarioConfig::new(vec![]);
        assert_eq!(run_simulation(&config), Err(SimError::NoPools));
    }

    #[test]
    fn same_seed_same_digest() {
        let a = run_simulation(&selfish_third(0.5, 5_000, 11)).unwrap();
        let b = run_simulation(&selfish_third(0.5, 5_000, 11)).unwrap();
        let c = run_simulation(&selfish_third(0.5, 5_000, 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.trace_digest, c.trace_digest);
    }

    #[test]
    fn conservation_of_blocks_and_revenue() {
        let report = run_simulation(&selfish_third(0.3, 20_000, 5)).unwrap();
        let s = &report.stats;
        assert_eq!(s.main_length + s.orphans + s.unpublished, s.total_mined);
        assert_eq!(s.per_pool_main.iter().sum::<u64>(), s.main_length);
        let total: f64 = report.per_pool_revenue_share.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(report.per_pool_mined.iter().sum::<u64>(), s.total_mined);
    }

    #[test]
    fn progress_summary_arithmetic() {
        let one = mean_and_stderr(&[0.8]).unwrap();
        assert_eq!((one.mean, one.stderr), (0.8, 0.0));
        let two = mean_and_stderr(&[0.7, 0.9]).unwrap();
        assert!((two.mean - 0.8).abs() < 1e-12);
        assert!((two.stderr - 0.1).abs() < 1e-12);
        assert_eq!(measure_progress_rate(&[]), Err(SimError::NoReports));
    }

    #[test]
    fn axis_parsing_and_application() {
        assert_eq!("gamma".parse::<SweepAxis>().unwrap(), SweepAxis::Gamma);
        assert_eq!("pool.0.power".parse::<SweepAxis>().unwrap(), SweepAxis::PoolPower(0));
        assert_eq!(
            "pool.2.activation".parse::<SweepAxis>().unwrap(),
            SweepAxis::PoolParam(2, PoolParam::Activation)
        );
        assert!(matches!("pool.x.power".parse::<SweepAxis>(), Err(SimError::UnknownAxis(_))));
        assert!(matches!("difficulty".parse::<SweepAxis>(), Err(SimError::UnknownAxis(_))));

        let mut config = ScenarioConfig::new(vec![
            PoolSpec::new(0.2, StrategyKind::Selfish.default_strategy()),
            PoolSpec::honest(0.5),
            PoolSpec::honest(0.3),
        ]);
        SweepAxis::PoolPower(0).apply(&mut config, 0.36).unwrap();
        assert!((config.pools[1].power - 0.4).abs() < 1e-12);
        assert!((config.pools[2].power - 0.24).abs() < 1e-12);
        assert!(SweepAxis::PoolPower(5).apply(&mut config, 0.1).is_err());
        assert!(SweepAxis::PoolParam(1, PoolParam::Activation)
            .apply(&mut config, 0.5)
            .is_err());
    }

    #[test]
    fn empty_sweep_is_empty() {
        let rows = sweep(&selfish_third(0.0, 100, 1), SweepAxis::Gamma, &[], 3).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn sweep_rows_ordered_by_value() {
        let rows = sweep(&selfish_third(0.0, 2_000, 1), SweepAxis::Gamma, &[1.0, 0.0, 0.5], 2).unwrap();
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        assert_eq!(values, [0.0, 0.5, 1.0]);
        assert!(rows.iter().all(|r| r.digests.len() == 2));
    }
}
