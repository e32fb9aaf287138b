//! Best revenue a deviant pool can earn without provoking an opportunistic
//! piggybacker, over a finite family of strategies.

use alloc::vec::Vec;

use super::{resilience, resilience_with, AnalyticError, ClosedFormStrategy};
use crate::sim::{run_simulation, ScenarioConfig};
use crate::strategy::{PoolSpec, Strategy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxRevOptions {
    pub gamma: f64,
    /// Horizon of each run measuring a member's slowdown for resilience.
    pub rate_horizon: u64,
    /// Horizon of the run measuring a member's revenue share.
    pub revenue_horizon: u64,
    pub seed: u64,
}

impl Default for MaxRevOptions {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            rate_horizon: 50_000,
            revenue_horizon: 200_000,
            seed: 0,
        }
    }
}

/// Selfish mining with activation 0, 0.1, ..., 1 followed by lead-stubborn
/// mining with deficits 0, 1, 2 and 4.
pub fn default_family() -> Vec<Strategy> {
    let selfish = (0..=10).map(|i| Strategy::Selfish {
        activation: f64::from(i) / 10.0,
    });
    let stubborn = [0u32, 1, 2, 4].map(|d| Strategy::LeadStubborn { max_deficit: d });
    selfish.chain(stubborn).collect()
}

fn is_honest(strategy: &Strategy) -> bool {
    matches!(
        strategy,
        Strategy::Honest | Strategy::Selfish { activation: 0.0 } | Strategy::Undercut { fork_probability: 0.0 }
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberEvaluation {
    pub strategy: Strategy,
    pub resilience: f64,
    /// Share of the canonical chain earned by the deviant pool.
    pub revenue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxRev {
    pub best: Strategy,
    pub rev: f64,
}

/// Longest-chain growth per block event of a two-pool system: `strategy` with
/// share `alpha`, honest miners with the rest. Counts withheld blocks, since
/// a revealing piggybacker has to outrun them too.
pub fn simulated_opposing_rate(
    strategy: Strategy,
    alpha: f64,
    options: &MaxRevOptions,
) -> Result<f64, AnalyticError> {
    if alpha >= 1.0 - 1e-12 {
        return Ok(1.0);
    }
    let config = ScenarioConfig::new(alloc::vec![
        PoolSpec::new(alpha, strategy),
        PoolSpec::honest(1.0 - alpha),
    ])
    .with_gamma(options.gamma)
    .with_horizon(options.rate_horizon)
    .with_seed(options.seed);
    let report = run_simulation(&config)?;
    Ok(f64::from(report.max_height) / report.events as f64)
}

pub fn evaluate_member(
    pd: f64,
    strategy: Strategy,
    options: &MaxRevOptions,
) -> Result<MemberEvaluation, AnalyticError> {
    if !(pd > 0.0 && pd < 1.0) {
        return Err(AnalyticError::InvalidDeviantPower(pd));
    }
    if is_honest(&strategy) {
        return Ok(MemberEvaluation {
            strategy,
            resilience: resilience(pd, ClosedFormStrategy::Honest)?,
            revenue: pd,
        });
    }
    let res = match strategy {
        Strategy::Selfish { activation } if activation == 1.0 => {
            resilience(pd, ClosedFormStrategy::Selfish)
        }
        _ => resilience_with(pd, |alpha| simulated_opposing_rate(strategy, alpha, options)),
    };
    // a pool no piggybacker can beat is maximally resilient
    let res = match res {
        Err(AnalyticError::NoFeasiblePower(_)) => 1.0,
        other => other?,
    };
    let config = ScenarioConfig::new(alloc::vec![
        PoolSpec::new(pd, strategy),
        PoolSpec::honest(1.0 - pd),
    ])
    .with_gamma(options.gamma)
    .with_horizon(options.revenue_horizon)
    .with_seed(options.seed);
    let report = run_simulation(&config)?;
    Ok(MemberEvaluation {
        strategy,
        resilience: res,
        revenue: report.per_pool_revenue_share[0],
    })
}

pub fn evaluate_family(
    pd: f64,
    family: &[Strategy],
    options: &MaxRevOptions,
) -> Result<Vec<MemberEvaluation>, AnalyticError> {
    if family.is_empty() {
        return Err(AnalyticError::EmptyFamily);
    }
    family
        .iter()
        .map(|&s| evaluate_member(pd, s, options))
        .collect()
}

/// Best revenue among members a piggybacker of power `po` would not attack.
/// Honest mining causes no slowdown and is always available at revenue `pd`.
pub fn max_rev_over(pd: f64, po: f64, evaluations: &[MemberEvaluation]) -> MaxRev {
    let honest = MaxRev {
        best: Strategy::Honest,
        rev: pd,
    };
    evaluations
        .iter()
        .filter(|e| e.resilience > po && !is_honest(&e.strategy))
        .fold(honest, |best, e| {
            if e.revenue > best.rev {
                MaxRev {
                    best: e.strategy,
                    rev: e.revenue,
                }
            } else {
                best
            }
        })
}

pub fn max_rev(
    pd: f64,
    po: f64,
    family: &[Strategy],
    options: &MaxRevOptions,
) -> Result<MaxRev, AnalyticError> {
    let evaluations = evaluate_family(pd, family, options)?;
    Ok(max_rev_over(pd, po, &evaluations))
}
