//! Pool strategies as event-driven state machines.
//!
//! Every pool keeps its found blocks in a `withheld` queue; publishing is
//! always a prefix of that queue, so blocks reach the public tree in chain
//! order. Honest-style pools publish each block as soon as it is found.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::analytic::{effective_opposing_speed, min_wait_blocks, OvertakeModel};
use crate::chain::{BlockId, BlockTree, PoolId, TiePolicy, GENESIS};

pub mod detector;
pub mod selfish;

pub use detector::{
    estimate_slowdown, ChainEvent, DetectorConfig, SlowdownDetector, SlowdownEstimate,
};
pub use selfish::{selfish_transition, SelfishEvent, SelfishState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("{pool} asked to publish {requested} blocks but withholds only {withheld}")]
    NotWithheld {
        pool: PoolId,
        requested: usize,
        withheld: usize,
    },
    #[error("window of {window} events needs more history than the {available} available")]
    InsufficientData { window: usize, available: usize },
    #[error("invalid strategy parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("unknown strategy {0:?}; expected one of HONEST, SELFISH, LEAD_STUBBORN, UNDERCUT, PIGGYBACK, OPPORTUNISTIC_PIGGYBACK")]
    UnknownStrategy(alloc::string::String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Honest,
    Selfish,
    LeadStubborn,
    Undercut,
    Piggyback,
    OpportunisticPiggyback,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Honest,
        StrategyKind::Selfish,
        StrategyKind::LeadStubborn,
        StrategyKind::Undercut,
        StrategyKind::Piggyback,
        StrategyKind::OpportunisticPiggyback,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Honest => "HONEST",
            StrategyKind::Selfish => "SELFISH",
            StrategyKind::LeadStubborn => "LEAD_STUBBORN",
            StrategyKind::Undercut => "UNDERCUT",
            StrategyKind::Piggyback => "PIGGYBACK",
            StrategyKind::OpportunisticPiggyback => "OPPORTUNISTIC_PIGGYBACK",
        }
    }

    /// Strategy with every parameter at its default.
    pub fn default_strategy(self) -> Strategy {
        match self {
            StrategyKind::Honest => Strategy::Honest,
            StrategyKind::Selfish => Strategy::Selfish { activation: 1.0 },
            StrategyKind::LeadStubborn => Strategy::LeadStubborn { max_deficit: 2 },
            StrategyKind::Undercut => Strategy::Undercut {
                fork_probability: 1.0,
            },
            StrategyKind::Piggyback => Strategy::Piggyback {
                reveal: RevealPolicy::default(),
            },
            StrategyKind::OpportunisticPiggyback => Strategy::OpportunisticPiggyback {
                reveal: RevealPolicy::default(),
                detector: DetectorConfig::default(),
            },
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| StrategyError::UnknownStrategy(s.into()))
    }
}

/// When a piggybacker reveals its private branch, as configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RevealPolicy {
    /// Reveal once this many block events have passed in the current cycle.
    WaitBlocks(u64),
    /// Reveal as soon as the private branch leads the public chain by `k`.
    SafetyMargin(u32),
    /// Both conditions must hold.
    Combined { wait_blocks: u64, safety_margin: u32 },
    /// Wait the number of events after which the binomial overtake
    /// probability reaches `threshold`, then require the safety margin.
    MinWait { threshold: f64, safety_margin: u32 },
}

impl Default for RevealPolicy {
    fn default() -> Self {
        RevealPolicy::MinWait {
            threshold: 0.999,
            safety_margin: 1,
        }
    }
}

impl RevealPolicy {
    /// Resolves the policy for a piggybacker of power `p` facing selfish
    /// power `ps` and honest power `ph`. An unreachable threshold never
    /// reveals on its own.
    pub fn resolve(&self, p: f64, ps: f64, ph: f64) -> RevealRule {
        match *self {
            RevealPolicy::WaitBlocks(n) => RevealRule {
                wait_blocks: n,
                safety_margin: None,
            },
            RevealPolicy::SafetyMargin(k) => RevealRule {
                wait_blocks: 0,
                safety_margin: Some(k),
            },
            RevealPolicy::Combined {
                wait_blocks,
                safety_margin,
            } => RevealRule {
                wait_blocks,
                safety_margin: Some(safety_margin),
            },
            RevealPolicy::MinWait {
                threshold,
                safety_margin,
            } => {
                // the race counts blocks of either chain; only a fraction
                // p + opposing speed of all block events produces one
                let wait = effective_opposing_speed(ps, ph)
                    .and_then(|opposing| {
                        let q = OvertakeModel::relative_speed(p, ps, ph)?;
                        let n = min_wait_blocks(q, threshold)?;
                        Ok(libm::ceil(n as f64 / (p + opposing)) as u64)
                    })
                    .unwrap_or(u64::MAX);
                RevealRule {
                    wait_blocks: wait,
                    safety_margin: Some(safety_margin),
                }
            }
        }
    }

    fn validate(&self) -> Result<(), StrategyError> {
        if let RevealPolicy::MinWait { threshold, .. } = self {
            if !(*threshold > 0.0 && *threshold < 1.0) {
                return Err(StrategyError::InvalidParameter(
                    "reveal threshold must lie in (0, 1)",
                ));
            }
        }
        Ok(())
    }
}

/// A resolved reveal policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RevealRule {
    pub wait_blocks: u64,
    pub safety_margin: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Honest,
    /// Selfish mining; each withholding episode starts with probability
    /// `activation`, otherwise the block is published honestly.
    Selfish { activation: f64 },
    /// Matches the public chain instead of overriding it and keeps mining on
    /// its own branch while at most `max_deficit` blocks behind.
    LeadStubborn { max_deficit: u32 },
    /// Forks the parent of a foreign head with probability `fork_probability`
    /// and publishes immediately.
    Undercut { fork_probability: f64 },
    Piggyback { reveal: RevealPolicy },
    OpportunisticPiggyback {
        reveal: RevealPolicy,
        detector: DetectorConfig,
    },
}

impl Strategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Honest => StrategyKind::Honest,
            Strategy::Selfish { .. } => StrategyKind::Selfish,
            Strategy::LeadStubborn { .. } => StrategyKind::LeadStubborn,
            Strategy::Undercut { .. } => StrategyKind::Undercut,
            Strategy::Piggyback { .. } => StrategyKind::Piggyback,
            Strategy::OpportunisticPiggyback { .. } => StrategyKind::OpportunisticPiggyback,
        }
    }

    /// Deviant pools that stay in the public race (everything except honest
    /// mining and piggybacking, which withdraws from it).
    pub fn is_public_deviant(&self) -> bool {
        matches!(
            self,
            Strategy::Selfish { .. } | Strategy::LeadStubborn { .. } | Strategy::Undercut { .. }
        )
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        match *self {
            Strategy::Selfish { activation } if !(0.0..=1.0).contains(&activation) => Err(
                StrategyError::InvalidParameter("activation must lie in [0, 1]"),
            ),
            Strategy::Undercut { fork_probability } if !(0.0..=1.0).contains(&fork_probability) => {
                Err(StrategyError::InvalidParameter(
                    "fork_probability must lie in [0, 1]",
                ))
            }
            Strategy::Piggyback { reveal } => reveal.validate(),
            Strategy::OpportunisticPiggyback { reveal, detector } => {
                if detector.window == 0 {
                    return Err(StrategyError::InvalidParameter("detector window must be >= 1"));
                }
                if !(detector.baseline >= 0.0 && detector.factor >= 0.0) {
                    return Err(StrategyError::InvalidParameter(
                        "detector baseline and factor must be non-negative",
                    ));
                }
                reveal.validate()
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolSpec {
    pub power: f64,
    pub strategy: Strategy,
}

impl PoolSpec {
    pub fn new(power: f64, strategy: Strategy) -> Self {
        Self { power, strategy }
    }

    pub fn honest(power: f64) -> Self {
        Self::new(power, Strategy::Honest)
    }
}

/// Mutable per-pool strategy state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StrategyState {
    /// Tip of the branch the pool mines on instead of the public head.
    pub private_tip: Option<BlockId>,
    /// Private height minus public height; -1 encodes a contest on the pool's
    /// own tied tip.
    pub lead: i64,
    pub private_height: u32,
    /// Found but unpublished blocks, oldest first.
    pub withheld: Vec<BlockId>,
    pub reveal_policy: Option<RevealRule>,
}

/// True once the active reveal rule is satisfied.
pub fn piggyback_reveal_check(state: &StrategyState, public_height: u32, blocks_elapsed: u64) -> bool {
    let Some(rule) = state.reveal_policy else {
        return false;
    };
    if blocks_elapsed < rule.wait_blocks {
        return false;
    }
    match rule.safety_margin {
        Some(k) => u64::from(state.private_height) >= u64::from(public_height) + u64::from(k),
        None => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    /// The pool found `block` on `target`. The block is already withheld.
    MyBlock { block: BlockId, target: BlockId },
    /// Someone else's publication raised the public height.
    OtherPublicBlock,
}

/// Number of withheld blocks, oldest first, to publish now.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Action {
    pub publish: usize,
}

impl Action {
    const NONE: Action = Action { publish: 0 };

    fn publish(n: usize) -> Self {
        Action { publish: n }
    }
}

/// Outcome of one reveal of a piggyback branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reveal {
    pub event: u64,
    pub private_height: u32,
    pub overtook: bool,
}

#[derive(Debug, Clone, Copy)]
struct Cycle {
    fork_point: BlockId,
    start_event: u64,
}

#[derive(Debug, Clone)]
enum Mode {
    Plain,
    Withholding(Cycle),
    Watching(SlowdownDetector),
}

/// Network-wide power split seen by a piggybacker when resolving its reveal
/// policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerContext {
    pub deviant: f64,
    pub honest: f64,
}

/// A pool running its strategy inside a simulation.
#[derive(Debug, Clone)]
pub struct Agent {
    id: PoolId,
    power: f64,
    strategy: Strategy,
    state: StrategyState,
    last_seen_height: u32,
    mode: Mode,
    restart_pending: bool,
    reveals: Vec<Reveal>,
}

fn honest_target<R: Rng>(tree: &BlockTree, tie: TiePolicy, rng: &mut R) -> BlockId {
    match tree.tie() {
        Some(t) => {
            if rng.random::<f64>() < tie.gamma() {
                t.challenger
            } else {
                t.incumbent
            }
        }
        None => tree.public_head(),
    }
}

/// Published blocks of `blocks` (consecutive heights starting at the first)
/// with height at most `height`.
fn prefix_up_to(tree: &BlockTree, blocks: &[BlockId], height: u32) -> usize {
    match blocks.first() {
        Some(&first) => ((height + 1).saturating_sub(tree.height(first)) as usize).min(blocks.len()),
        None => 0,
    }
}

impl Agent {
    pub fn new(id: PoolId, spec: &PoolSpec, powers: PowerContext) -> Self {
        let mut state = StrategyState::default();
        let mode = match spec.strategy {
            Strategy::Piggyback { reveal } => {
                state.reveal_policy = Some(reveal.resolve(spec.power, powers.deviant, powers.honest));
                Mode::Withholding(Cycle {
                    fork_point: GENESIS,
                    start_event: 0,
                })
            }
            Strategy::OpportunisticPiggyback { detector, .. } => {
                Mode::Watching(SlowdownDetector::new(detector))
            }
            _ => Mode::Plain,
        };
        Self {
            id,
            power: spec.power,
            strategy: spec.strategy,
            state,
            last_seen_height: 0,
            mode,
            restart_pending: false,
            reveals: Vec::new(),
        }
    }

    pub fn id(&self) -> PoolId {
        self.id
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn state(&self) -> &StrategyState {
        &self.state
    }

    pub fn reveals(&self) -> &[Reveal] {
        &self.reveals
    }

    pub fn is_withholding(&self) -> bool {
        matches!(self.mode, Mode::Withholding(_))
    }

    /// Whether the pool reacts to other pools' publications.
    pub fn reacts_to_public_blocks(&self) -> bool {
        matches!(
            self.strategy,
            Strategy::Selfish { .. } | Strategy::LeadStubborn { .. }
        )
    }

    /// Whether the pool needs the end-of-event hook (reveal checks, detector).
    pub fn watches_events(&self) -> bool {
        matches!(
            self.strategy,
            Strategy::Piggyback { .. } | Strategy::OpportunisticPiggyback { .. }
        )
    }

    pub fn last_seen_height(&self) -> u32 {
        self.last_seen_height
    }

    fn own_tied_tip(&self, tree: &BlockTree) -> Option<BlockId> {
        let tie = tree.tie()?;
        [tie.incumbent, tie.challenger]
            .into_iter()
            .find(|&b| tree.miner(b) == Some(self.id))
    }

    /// Block the pool mines on when it finds the next block.
    pub fn mine_target<R: Rng>(&mut self, tree: &BlockTree, tie: TiePolicy, rng: &mut R) -> BlockId {
        match self.strategy {
            Strategy::Honest => honest_target(tree, tie, rng),
            Strategy::Selfish { .. } | Strategy::LeadStubborn { .. } => self
                .state
                .private_tip
                .or_else(|| self.own_tied_tip(tree))
                .unwrap_or_else(|| tree.public_head()),
            Strategy::Undercut { fork_probability } => {
                if fork_probability == 0.0 || tree.tie().is_some() {
                    return match (fork_probability > 0.0).then(|| self.own_tied_tip(tree)).flatten() {
                        Some(own) => own,
                        None => honest_target(tree, tie, rng),
                    };
                }
                let head = tree.public_head();
                if head == GENESIS || tree.miner(head) == Some(self.id) {
                    return head;
                }
                if fork_probability >= 1.0 || rng.random::<f64>() < fork_probability {
                    tree.parent(head).unwrap_or(head)
                } else {
                    head
                }
            }
            Strategy::Piggyback { .. } | Strategy::OpportunisticPiggyback { .. } => match &self.mode {
                Mode::Withholding(cycle) => self.state.private_tip.unwrap_or(cycle.fork_point),
                _ => honest_target(tree, tie, rng),
            },
        }
    }

    /// Reacts to a block event.
    pub fn on_event<R: Rng>(&mut self, event: Observation, tree: &BlockTree, rng: &mut R) -> Action {
        match event {
            Observation::MyBlock { block, target } => self.on_my_block(block, target, tree, rng),
            Observation::OtherPublicBlock => self.on_other_block(tree),
        }
    }

    fn on_my_block<R: Rng>(&mut self, block: BlockId, target: BlockId, tree: &BlockTree, rng: &mut R) -> Action {
        let was_empty = self.state.withheld.is_empty();
        self.state.withheld.push(block);
        match self.strategy {
            Strategy::Honest | Strategy::Undercut { .. } => Action::publish(1),
            Strategy::Selfish { activation } => {
                if was_empty && self.state.private_tip.is_none() {
                    if self.own_tied_tip(tree) == Some(target) {
                        return Action::publish(1);
                    }
                    if activation < 1.0 && rng.random::<f64>() >= activation {
                        return Action::publish(1);
                    }
                }
                self.state.private_tip = Some(block);
                Action::NONE
            }
            Strategy::LeadStubborn { .. } => {
                if was_empty && self.own_tied_tip(tree) == Some(target) {
                    self.state.private_tip = None;
                    return Action::publish(1);
                }
                self.state.private_tip = Some(block);
                if tree.height(block) == tree.public_height() {
                    // caught up from behind: force a tie
                    Action::publish(self.state.withheld.len())
                } else {
                    Action::NONE
                }
            }
            Strategy::Piggyback { .. } | Strategy::OpportunisticPiggyback { .. } => {
                if self.is_withholding() {
                    self.state.private_tip = Some(block);
                    Action::NONE
                } else {
                    Action::publish(1)
                }
            }
        }
    }

    fn on_other_block(&mut self, tree: &BlockTree) -> Action {
        let height = tree.public_height();
        match self.strategy {
            Strategy::Selfish { .. } => {
                let Some(tip) = self.state.private_tip else {
                    return Action::NONE;
                };
                if self.state.withheld.is_empty() {
                    self.state.private_tip = None;
                    return Action::NONE;
                }
                let private = tree.height(tip);
                if private < height {
                    self.abandon();
                    Action::NONE
                } else if private <= height + 1 {
                    // lead 1 forces a contest, lead 2 overrides
                    self.state.private_tip = None;
                    Action::publish(self.state.withheld.len())
                } else {
                    Action::publish(prefix_up_to(tree, &self.state.withheld, height))
                }
            }
            Strategy::LeadStubborn { max_deficit } => {
                let Some(tip) = self.state.private_tip else {
                    return Action::NONE;
                };
                let private = tree.height(tip);
                if self.state.withheld.is_empty() {
                    if tree.is_ancestor(tip, tree.public_head()) {
                        self.state.private_tip = None;
                    } else if height - private > max_deficit {
                        self.state.private_tip = None;
                    }
                    return Action::NONE;
                }
                if private >= height {
                    Action::publish(prefix_up_to(tree, &self.state.withheld, height))
                } else if height - private > max_deficit {
                    self.abandon();
                    Action::NONE
                } else {
                    Action::NONE
                }
            }
            _ => Action::NONE,
        }
    }

    fn abandon(&mut self) {
        self.state.withheld.clear();
        self.state.private_tip = None;
    }

    /// End-of-event hook for piggybackers: feeds the detector, checks the
    /// reveal rule, and reveals the whole private branch when it is due.
    /// `others_max_height` is the highest block any other pool has mined.
    pub fn end_of_event(
        &mut self,
        event: u64,
        tree: &BlockTree,
        record: ChainEvent,
        others_max_height: u32,
    ) -> Action {
        match &mut self.mode {
            Mode::Plain => Action::NONE,
            Mode::Watching(detector) => {
                detector.record(record);
                if let Some(estimate) = detector.estimate(self.power) {
                    if estimate.sufficient {
                        let Strategy::OpportunisticPiggyback { reveal, .. } = self.strategy else {
                            unreachable!("only opportunistic pools watch");
                        };
                        let ps = estimate.implied_deviant_power;
                        let ph = (1.0 - self.power - ps).max(0.0);
                        self.state.reveal_policy = Some(reveal.resolve(self.power, ps, ph));
                        self.mode = Mode::Withholding(Cycle {
                            fork_point: tree.public_head(),
                            start_event: event + 1,
                        });
                    }
                }
                Action::NONE
            }
            Mode::Withholding(cycle) => {
                let elapsed = (event + 1).saturating_sub(cycle.start_event);
                let fork_point = cycle.fork_point;
                self.refresh(tree);
                if self.state.withheld.is_empty()
                    || !piggyback_reveal_check(&self.state, tree.public_height(), elapsed)
                {
                    return Action::NONE;
                }
                let private_height = tree.height(self.state.private_tip.unwrap_or(fork_point));
                self.reveals.push(Reveal {
                    event,
                    private_height,
                    overtook: private_height > others_max_height,
                });
                self.restart_pending = true;
                Action::publish(self.state.withheld.len())
            }
        }
    }

    /// Drains the first `count` withheld blocks for publication.
    pub fn take_withheld(&mut self, count: usize) -> Result<alloc::vec::Drain<'_, BlockId>, StrategyError> {
        if count > self.state.withheld.len() {
            return Err(StrategyError::NotWithheld {
                pool: self.id,
                requested: count,
                withheld: self.state.withheld.len(),
            });
        }
        Ok(self.state.withheld.drain(..count))
    }

    /// Called after the pool's publications were applied to the tree.
    pub fn synced(&mut self, tree: &BlockTree, event: u64) {
        self.last_seen_height = tree.public_height();
        if self.restart_pending {
            self.restart_pending = false;
            self.state.private_tip = None;
            self.mode = match (self.strategy, &self.mode) {
                (Strategy::OpportunisticPiggyback { detector, .. }, _) => {
                    self.state.reveal_policy = None;
                    Mode::Watching(SlowdownDetector::new(detector))
                }
                _ => Mode::Withholding(Cycle {
                    fork_point: tree.public_head(),
                    start_event: event + 1,
                }),
            };
        }
        self.refresh(tree);
    }

    fn refresh(&mut self, tree: &BlockTree) {
        let public = tree.public_height();
        let base = match (&self.mode, self.state.private_tip) {
            (_, Some(tip)) => Some(tip),
            (Mode::Withholding(cycle), None) => Some(cycle.fork_point),
            _ => None,
        };
        match base {
            Some(tip) => {
                self.state.private_height = tree.height(tip);
                self.state.lead = i64::from(self.state.private_height) - i64::from(public);
            }
            None => {
                self.state.private_height = public;
                self.state.lead = if self.own_tied_tip(tree).is_some() { -1 } else { 0 };
            }
        }
    }

    /// Abstract selfish state derived from the tree, for conformance checks.
    pub fn selfish_state(&self, tree: &BlockTree) -> SelfishState {
        match self.state.private_tip {
            Some(tip) if !self.state.withheld.is_empty() => {
                let lead = tree.height(tip).saturating_sub(tree.public_height());
                SelfishState::Lead(lead)
            }
            _ if self.own_tied_tip(tree).is_some() => SelfishState::Contest,
            _ => SelfishState::Lead(0),
        }
    }
}
