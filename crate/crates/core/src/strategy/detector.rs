//! Orphan-rate slowdown detector used by opportunistic piggybacking.

use alloc::collections::VecDeque;

use super::StrategyError;
use crate::analytic::{piggyback_feasible, progress_rate, AlphaDomain, SOLVER_TOLERANCE};

/// Per block event: blocks created and published blocks settled as orphans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChainEvent {
    pub mined: u32,
    pub orphaned: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub window: usize,
    pub baseline: f64,
    pub factor: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window: 100,
            baseline: 0.01,
            factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowdownEstimate {
    pub window: usize,
    pub observed_orphan_rate: f64,
    pub baseline: f64,
    /// Selfish power (share of the whole network) that would produce the
    /// observed orphan rate.
    pub implied_deviant_power: f64,
    pub sufficient: bool,
}

/// Inverts the single-selfish-pool slowdown: the selfish share whose orphan
/// fraction `1 - rate(alpha)` equals `orphan_rate`. Saturates at 0.5.
pub fn implied_deviant_power(orphan_rate: f64) -> f64 {
    if orphan_rate <= 0.0 {
        return 0.0;
    }
    if orphan_rate >= 0.5 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0, 0.5);
    while hi - lo > SOLVER_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if 1.0 - progress_rate(AlphaDomain::new(mid).expect("in range")) < orphan_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn evaluate(
    orphans: u64,
    window: usize,
    baseline: f64,
    factor: f64,
    observer_power: f64,
) -> SlowdownEstimate {
    let observed = (orphans as f64 / window as f64).min(1.0);
    let mut estimate = SlowdownEstimate {
        window,
        observed_orphan_rate: observed,
        baseline,
        implied_deviant_power: 0.0,
        sufficient: false,
    };
    if observed > factor * baseline && observed > baseline {
        let ps = implied_deviant_power(observed).min(1.0 - observer_power);
        let ph = (1.0 - observer_power - ps).max(0.0);
        estimate.implied_deviant_power = ps;
        estimate.sufficient = piggyback_feasible(observer_power, ps, ph)
            .map(|v| v.feasible)
            .unwrap_or(false);
    }
    estimate
}

/// Orphan rate over the trailing `window` events of `recent`, and whether the
/// slowdown it implies is large enough for an observer of `observer_power` to
/// piggyback successfully.
pub fn estimate_slowdown(
    recent: &[ChainEvent],
    window: usize,
    baseline: f64,
    factor: f64,
    observer_power: f64,
) -> Result<SlowdownEstimate, StrategyError> {
    if window == 0 || recent.len() < window {
        return Err(StrategyError::InsufficientData {
            window,
            available: recent.len(),
        });
    }
    let orphans = recent[recent.len() - window..]
        .iter()
        .map(|e| u64::from(e.orphaned))
        .sum();
    Ok(evaluate(orphans, window, baseline, factor, observer_power))
}

/// Rolling version of [`estimate_slowdown`] kept by a running pool.
#[derive(Debug, Clone)]
pub struct SlowdownDetector {
    config: DetectorConfig,
    history: VecDeque<u32>,
    orphans: u64,
}

impl SlowdownDetector {
    pub fn new(config: DetectorConfig) -> Self {
        Self {
            config,
            history: VecDeque::with_capacity(config.window),
            orphans: 0,
        }
    }

    pub fn record(&mut self, event: ChainEvent) {
        if self.history.len() == self.config.window {
            if let Some(old) = self.history.pop_front() {
                self.orphans -= u64::from(old);
            }
        }
        self.history.push_back(event.orphaned);
        self.orphans += u64::from(event.orphaned);
    }

    pub fn clear(&mut self) {
        self.history.clear();
        self.orphans = 0;
    }

    /// `None` until a full window has been observed.
    pub fn estimate(&self, observer_power: f64) -> Option<SlowdownEstimate> {
        let DetectorConfig {
            window,
            baseline,
            factor,
        } = self.config;
        if window == 0 || self.history.len() < window {
            return None;
        }
        Some(evaluate(self.orphans, window, baseline, factor, observer_power))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn history(orphans: &[u32]) -> Vec<ChainEvent> {
        orphans
            .iter()
            .map(|&orphaned| ChainEvent { mined: 1, orphaned })
            .collect()
    }

    #[test]
    fn quiet_window_is_not_sufficient() {
        let recent = history(&[0; 100]);
        let e = estimate_slowdown(&recent, 100, 0.01, 2.0, 0.45).unwrap();
        assert_eq!(e.observed_orphan_rate, 0.0);
        assert!(!e.sufficient);
    }

    #[test]
    fn selfish_level_slowdown_triggers_large_observer() {
        // 4/17 of blocks orphaned, as with a one-third selfish pool
        let mut orphans = [0u32; 170];
        for slot in orphans.iter_mut().step_by(17).take(10) {
            *slot = 4;
        }
        let recent = history(&orphans);
        let e = estimate_slowdown(&recent, 170, 0.01, 2.0, 0.45).unwrap();
        assert!((e.observed_orphan_rate - 4.0 / 17.0).abs() < 1e-12);
        assert!((e.implied_deviant_power - 1.0 / 3.0).abs() < 1e-5);
        assert!(e.sufficient);
        // too small to exploit it
        let e = estimate_slowdown(&recent, 170, 0.01, 2.0, 0.2).unwrap();
        assert!(!e.sufficient);
    }

    #[test]
    fn window_longer_than_history() {
        let recent = history(&[0; 5]);
        assert_eq!(
            estimate_slowdown(&recent, 10, 0.01, 2.0, 0.4),
            Err(StrategyError::InsufficientData {
                window: 10,
                available: 5
            })
        );
    }

    #[test]
    fn rolling_detector_matches_batch() {
        let orphans: Vec<u32> = (0..250).map(|i| u32::from(i % 7 == 0) * 2).collect();
        let recent = history(&orphans);
        let mut detector = SlowdownDetector::new(DetectorConfig::default());
        for (i, &e) in recent.iter().enumerate() {
            detector.record(e);
            let rolling = detector.estimate(0.45);
            if i + 1 < 100 {
                assert!(rolling.is_none());
            } else {
                let batch = estimate_slowdown(&recent[..=i], 100, 0.01, 2.0, 0.45).unwrap();
                assert_eq!(rolling, Some(batch));
            }
        }
    }
}
