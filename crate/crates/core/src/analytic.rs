//! Closed-form model of a single selfish pool and of the piggyback race.
//!
//! `alpha` is always the selfish pool's share of the *reduced* system that
//! excludes the withholding piggybacker. The stationary-state formulas are
//! only valid for `alpha <= 0.5`; above that the selfish branch takes over the
//! public chain and its growth rate is the selfish power itself.

use libm::{exp, floor, lgamma, log, log1p};
use thiserror::Error;

pub mod maxrev;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("alpha {0} outside the closed-form range [0, 0.5]")]
    AlphaOutOfRange(f64),
    #[error("invalid power vector: {0}")]
    InvalidPowers(&'static str),
    #[error("powers sum to {0}, expected 1")]
    PowersDoNotSumToOne(f64),
    #[error("relative speed q = {0} must lie in [0, 1]")]
    InvalidSpeed(f64),
    #[error("number of block events must be positive")]
    NonPositiveEvents,
    #[error("q = {0} <= 0.5: the overtake probability never reaches the threshold")]
    NoFiniteWait(f64),
    #[error("threshold {0} must lie strictly between 0 and 1")]
    InvalidThreshold(f64),
    #[error("deviant power {0} must lie in [0, 1)")]
    InvalidDeviantPower(f64),
    #[error("no piggybacker can succeed against a deviant pool of power {0}")]
    NoFeasiblePower(f64),
    #[error("strategy family is empty")]
    EmptyFamily,
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
}

/// Selfish pool's relative power in the reduced system, validated to the
/// closed-form range.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AlphaDomain(f64);

impl AlphaDomain {
    pub fn new(alpha: f64) -> Result<Self, AnalyticError> {
        if (0.0..=0.5).contains(&alpha) {
            Ok(Self(alpha))
        } else {
            Err(AnalyticError::AlphaOutOfRange(alpha))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

fn denominator(a: f64) -> f64 {
    2.0 * a * a * a - 4.0 * a * a + 1.0
}

/// Stationary probabilities of the lead-0 state and of the contest state.
pub fn state_probabilities(alpha: AlphaDomain) -> (f64, f64) {
    let a = alpha.0;
    if a == 0.0 {
        return (1.0, 0.0);
    }
    let d = denominator(a);
    let p0 = (a - 2.0 * a * a) / (a * d);
    let p0_contest = (1.0 - a) * (a - 2.0 * a * a) / d;
    (p0, p0_contest)
}

/// Canonical-chain growth per block mined with one selfish pool of relative
/// power `alpha` and everyone else honest.
pub fn progress_rate(alpha: AlphaDomain) -> f64 {
    let a = alpha.0;
    1.0 - a * (1.0 - a) * (1.0 - a) / denominator(a)
}

fn check_power(x: f64) -> Result<(), AnalyticError> {
    if !x.is_finite() || x < 0.0 {
        Err(AnalyticError::InvalidPowers("powers must be finite and non-negative"))
    } else {
        Ok(())
    }
}

/// Growth rate of the longest chain built by a selfish pool `ps` and honest
/// miners `ph` together, in blocks per block event of the full system.
pub fn effective_opposing_speed(ps: f64, ph: f64) -> Result<f64, AnalyticError> {
    check_power(ps)?;
    check_power(ph)?;
    let total = ps + ph;
    if total > 1.0 + 1e-9 {
        return Err(AnalyticError::InvalidPowers("selfish and honest power exceed 1"));
    }
    if total == 0.0 {
        return Ok(0.0);
    }
    let alpha = ps / total;
    if alpha > 0.5 {
        Ok(ps)
    } else {
        Ok(total * progress_rate(AlphaDomain(alpha)))
    }
}

/// Region of the piggyback feasibility map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Selfish pool smaller than the honest miners; the slowdown is exploited.
    Green,
    /// Selfish pool larger than the honest miners and takes the public chain over.
    Red,
    /// Piggybacker holds a plain majority.
    Blue,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Green => "GREEN",
            Region::Red => "RED",
            Region::Blue => "BLUE",
        }
    }

    /// Which of the three cases a split of piggybacker `p`, selfish `ps` and
    /// honest `ph` falls into, feasible or not.
    pub fn classify(p: f64, ps: f64, ph: f64) -> Region {
        if p > 0.5 {
            Region::Blue
        } else if ps + ph > 0.0 && ps / (ps + ph) > 0.5 {
            Region::Red
        } else {
            Region::Green
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    /// Minimum piggybacker power for this selfish/honest split.
    pub threshold: f64,
    /// `None` when the attack is infeasible.
    pub region: Option<Region>,
}

pub fn piggyback_feasible(p: f64, ps: f64, ph: f64) -> Result<FeasibilityVerdict, AnalyticError> {
    check_power(p)?;
    let sum = p + ps + ph;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(AnalyticError::PowersDoNotSumToOne(sum));
    }
    let threshold = effective_opposing_speed(ps, ph)?;
    let feasible = p > threshold;
    let region = feasible.then(|| Region::classify(p, ps, ph));
    Ok(FeasibilityVerdict {
        feasible,
        threshold,
        region,
    })
}

/// Binomial race between the piggybacker and everyone else over `events`
/// effective block events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OvertakeModel {
    q: f64,
    events: u64,
}

impl OvertakeModel {
    pub fn new(q: f64, events: u64) -> Result<Self, AnalyticError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(AnalyticError::InvalidSpeed(q));
        }
        if events == 0 {
            return Err(AnalyticError::NonPositiveEvents);
        }
        Ok(Self { q, events })
    }

    /// Relative speed `p / (p + opposing speed)` for a piggybacker `p`
    /// facing selfish `ps` and honest `ph`.
    pub fn relative_speed(p: f64, ps: f64, ph: f64) -> Result<f64, AnalyticError> {
        check_power(p)?;
        let opposing = effective_opposing_speed(ps, ph)?;
        if p + opposing == 0.0 {
            return Err(AnalyticError::InvalidPowers("all powers are zero"));
        }
        Ok(p / (p + opposing))
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn events(&self) -> u64 {
        self.events
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    lgamma(n as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((n - k) as f64 + 1.0)
}

/// `P[X > n/2]` for `X ~ Binomial(n, q)`: the piggybacker ends with a strictly
/// longer branch. Summed exactly in log space.
pub fn overtake_probability(model: OvertakeModel) -> f64 {
    let OvertakeModel { q, events: n } = model;
    if q == 1.0 {
        return 1.0;
    }
    if q == 0.0 {
        return 0.0;
    }
    let first = n / 2 + 1;
    let ln_q = log(q);
    let ln_r = log1p(-q);
    let term = |k: u64| ln_choose(n, k) + k as f64 * ln_q + (n - k) as f64 * ln_r;
    // terms are unimodal in k; scale by the largest one in range
    let mode = floor((n as f64 + 1.0) * q) as u64;
    let peak = term(mode.clamp(first, n));
    let mut sum = 0.0;
    for k in first..=n {
        sum += exp(term(k) - peak);
    }
    (exp(peak) * sum).min(1.0)
}

/// Smallest number of block events after which the overtake probability
/// reaches `threshold`.
///
/// The tail is not monotone in `n`: an even count never beats the odd count
/// before it, because a tie counts as a loss. The minimum is therefore odd,
/// and the probability is increasing along odd counts when `q > 0.5`, so the
/// search runs over `n = 2k + 1`.
pub fn min_wait_blocks(q: f64, threshold: f64) -> Result<u64, AnalyticError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(AnalyticError::InvalidSpeed(q));
    }
    if q <= 0.5 {
        return Err(AnalyticError::NoFiniteWait(q));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(AnalyticError::InvalidThreshold(threshold));
    }
    let reaches = |k: u64| {
        let model = OvertakeModel { q, events: 2 * k + 1 };
        overtake_probability(model) >= threshold
    };
    if reaches(0) {
        return Ok(1);
    }
    let mut hi = 1u64;
    while !reaches(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2;
    // invariant: !reaches(lo), reaches(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(2 * hi + 1)
}

/// Bisection tolerance shared by the threshold solvers.
pub const SOLVER_TOLERANCE: f64 = 1e-6;

/// Strategy whose resilience has a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormStrategy {
    Honest,
    Selfish,
}

/// Smallest opportunistic piggybacker that defeats a deviant pool of power
/// `ps` playing `strategy`, with every other miner honest.
pub fn resilience(ps: f64, strategy: ClosedFormStrategy) -> Result<f64, AnalyticError> {
    if !(0.0..1.0).contains(&ps) {
        return Err(AnalyticError::InvalidDeviantPower(ps));
    }
    match strategy {
        ClosedFormStrategy::Honest => Ok(0.5),
        ClosedFormStrategy::Selfish => resilience_with(ps, |alpha| {
            if alpha > 0.5 {
                // takeover: opposing growth is the selfish power alone
                Ok(alpha)
            } else {
                Ok(progress_rate(AlphaDomain(alpha)))
            }
        }),
    }
}

/// Resilience for an arbitrary deviant strategy, given its opposing growth
/// rate as a function of its share `alpha` of the reduced system (measured
/// per block event of the reduced system).
///
/// Solves for the smallest `x` with `x >= (1 - x) * rate(ps / (1 - x))` by
/// bisection on `[0, 1 - ps]`.
pub fn resilience_with<F>(ps: f64, mut rate: F) -> Result<f64, AnalyticError>
where
    F: FnMut(f64) -> Result<f64, AnalyticError>,
{
    if !(0.0..1.0).contains(&ps) {
        return Err(AnalyticError::InvalidDeviantPower(ps));
    }
    let mut excess = |x: f64| -> Result<f64, AnalyticError> {
        let reduced = 1.0 - x;
        let alpha = if reduced > 0.0 { (ps / reduced).min(1.0) } else { 1.0 };
        Ok(x - reduced * rate(alpha)?)
    };
    let mut lo = 0.0;
    let mut hi = 1.0 - ps;
    if excess(hi)? < 0.0 {
        return Err(AnalyticError::NoFeasiblePower(ps));
    }
    if excess(lo)? >= 0.0 {
        return Ok(lo);
    }
    while hi - lo > SOLVER_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
