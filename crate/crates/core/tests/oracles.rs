use piggyback_core::analytic::{
    min_wait_blocks, overtake_probability, progress_rate, resilience, state_probabilities, AlphaDomain,
    ClosedFormStrategy, OvertakeModel,
};
use piggyback_core::chain::TiePolicy;
use piggyback_core::sim::{mean_and_stderr, SimRng};
use piggyback_core::strategy::{selfish_transition, Agent, Observation, PowerContext, SelfishEvent, SelfishState};
use piggyback_core::{run_simulation, BlockTree, PoolId, PoolSpec, ScenarioConfig, Strategy, StrategyKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use statrs::distribution::{Binomial, DiscreteCDF};

/// Stationary distribution of the selfish-mining chain truncated at lead
/// `n`, by Gaussian elimination. Index 0 is state 0', index k + 1 is lead k.
fn stationary(alpha: f64, n: usize) -> Vec<f64> {
    let size = n + 2;
    let mut p = vec![vec![0.0; size]; size];
    let lead = |k: usize| k + 1;
    p[0][lead(0)] = 1.0;
    p[lead(0)][lead(1)] = alpha;
    p[lead(0)][lead(0)] = 1.0 - alpha;
    p[lead(1)][lead(2)] = alpha;
    p[lead(1)][0] = 1.0 - alpha;
    p[lead(2)][lead(0)] = 1.0 - alpha;
    for k in 2..=n {
        if k < n {
            p[lead(k)][lead(k + 1)] = alpha;
        } else {
            p[lead(k)][lead(k)] += alpha;
        }
        if k > 2 {
            p[lead(k)][lead(k - 1)] = 1.0 - alpha;
        }
    }
    // pi (P - I) = 0 with the last equation replaced by sum(pi) = 1
    let mut a = vec![vec![0.0; size + 1]; size];
    for (i, row) in a.iter_mut().enumerate() {
        for j in 0..size {
            row[j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[size - 1] = vec![1.0; size + 1];
    for col in 0..size {
        let pivot = (col..size)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in 0..size {
            if row != col {
                let f = a[row][col] / a[col][col];
                for j in col..=size {
                    a[row][j] -= f * a[col][j];
                }
            }
        }
    }
    (0..size).map(|i| a[i][size] / a[i][i]).collect()
}

#[test]
fn state_probabilities_match_markov_chain() {
    for i in 1..=45 {
        let alpha = f64::from(i) / 100.0;
        let pi = stationary(alpha, 400);
        let (p0, p0_prime) = state_probabilities(AlphaDomain::new(alpha).unwrap());
        assert!((pi[1] - p0).abs() < 1e-9, "alpha {alpha}: {} vs {p0}", pi[1]);
        assert!((pi[0] - p0_prime).abs() < 1e-9, "alpha {alpha}: {} vs {p0_prime}", pi[0]);
        // an honest block is orphaned in every state but 0 and 0'
        let orphaned = (1.0 - alpha) * pi[2..].iter().sum::<f64>();
        let rate = progress_rate(AlphaDomain::new(alpha).unwrap());
        assert!((1.0 - orphaned - rate).abs() < 1e-9);
    }
}

#[test]
fn rate_spot_values_by_hand() {
    // 1 - (2/3)(4/9) / (2/27 - 4/9 + 1) = 1 - (8/27)/(17/27)
    assert!((progress_rate(AlphaDomain::new(1.0 / 3.0).unwrap()) - 13.0 / 17.0).abs() < 1e-12);
    assert_eq!(progress_rate(AlphaDomain::new(0.0).unwrap()), 1.0);
    assert!((progress_rate(AlphaDomain::new(0.5).unwrap()) - 0.5).abs() < 1e-12);
}

fn brute_force_tail(q: f64, n: u64) -> f64 {
    let mut total = 0.0;
    let mut coeff = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            coeff = coeff * (n - k + 1) as f64 / k as f64;
        }
        if 2 * k > n {
            total += coeff * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32);
        }
    }
    total
}

proptest! {
    #[test]
    fn overtake_matches_statrs(q in 0.0..=1.0f64, n in 1u64..4000) {
        let oracle = Binomial::new(q, n).unwrap().sf(n / 2);
        let ours = overtake_probability(OvertakeModel::new(q, n).unwrap());
        prop_assert!((ours - oracle).abs() < 1e-9, "q {q} n {n}: {ours} vs {oracle}");
    }

    #[test]
    fn overtake_matches_brute_force(q in 0.0..=1.0f64, n in 1u64..60) {
        let ours = overtake_probability(OvertakeModel::new(q, n).unwrap());
        prop_assert!((ours - brute_force_tail(q, n)).abs() < 1e-12);
    }

    #[test]
    fn min_wait_is_minimal(q in 0.53..0.99f64, threshold in 0.5..0.999f64) {
        let n = min_wait_blocks(q, threshold).unwrap();
        let tail = |m: u64| Binomial::new(q, m).unwrap().sf(m / 2);
        prop_assert!(tail(n) >= threshold - 1e-12);
        for m in 1..n {
            prop_assert!(tail(m) < threshold + 1e-12, "{m} < {n} already reaches {threshold}");
        }
    }

    #[test]
    fn resilience_is_least_solution(ps in 0.01..0.49f64) {
        let r = resilience(ps, ClosedFormStrategy::Selfish).unwrap();
        let holds = |x: f64| {
            let alpha = ps / (1.0 - x);
            let rate = if alpha > 0.5 { alpha } else { progress_rate(AlphaDomain::new(alpha).unwrap()) };
            x >= (1.0 - x) * rate
        };
        prop_assert!(holds(r + 1e-6));
        prop_assert!(!holds(r - 2e-6));
        prop_assert!(r < 0.5);
    }
}

#[test]
fn resilience_values() {
    assert_eq!(resilience(0.2, ClosedFormStrategy::Honest).unwrap(), 0.5);
    assert!((resilience(0.4, ClosedFormStrategy::Selfish).unwrap() - 0.4).abs() < 1e-4);
    assert!((resilience(0.3, ClosedFormStrategy::Selfish).unwrap() - 0.368).abs() < 5e-4);
}

/// Without a selfish pool, piggybacking against honest miners is exactly the
/// binomial race.
#[test]
fn overtake_monte_carlo_against_honest_miners() {
    let (q, n, trials) = (0.55, 121u64, 20_000u64);
    let base = ScenarioConfig::new(vec![
        PoolSpec::new(
            q,
            Strategy::Piggyback {
                reveal: piggyback_core::strategy::RevealPolicy::WaitBlocks(n),
            },
        ),
        PoolSpec::honest(1.0 - q),
    ])
    .with_horizon(n)
    .with_stop(piggyback_core::StopCondition::PiggybackRevealed);
    let wins = (0..trials)
        .filter(|&s| run_simulation(&base.clone().with_seed(s)).unwrap().piggyback_overtook == Some(true))
        .count() as f64;
    let expected = overtake_probability(OvertakeModel::new(q, n).unwrap());
    let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
    assert!((wins / trials as f64 - expected).abs() < 4.0 * sigma);
}

#[test]
fn selfish_mean_within_three_stderr() {
    let rates: Vec<f64> = (0..30)
        .map(|seed| {
            let config = ScenarioConfig::new(vec![
                PoolSpec::new(1.0 / 3.0, StrategyKind::Selfish.default_strategy()),
                PoolSpec::honest(2.0 / 3.0),
            ])
            .with_horizon(100_000)
            .with_seed(seed);
            run_simulation(&config).unwrap().progress_rate
        })
        .collect();
    let summary = mean_and_stderr(&rates).unwrap();
    assert!((summary.mean - 13.0 / 17.0).abs() < 3.0 * summary.stderr, "{summary:?}");
}

#[test]
fn gamma_does_not_change_speed() {
    let rate = |gamma: f64| {
        let rates: Vec<f64> = (0..10)
            .map(|seed| {
                let config = ScenarioConfig::new(vec![
                    PoolSpec::new(0.3, StrategyKind::Selfish.default_strategy()),
                    PoolSpec::honest(0.7),
                ])
                .with_gamma(gamma)
                .with_horizon(100_000)
                .with_seed(100 + seed);
                run_simulation(&config).unwrap().progress_rate
            })
            .collect();
        mean_and_stderr(&rates).unwrap()
    };
    let (a, b, c) = (rate(0.0), rate(0.5), rate(1.0));
    let tol = 3.0 * a.stderr.max(b.stderr).max(c.stderr) + 1e-12;
    assert!((a.mean - b.mean).abs() < tol && (b.mean - c.mean).abs() < tol, "{a:?} {b:?} {c:?}");
}

/// Drives a selfish pool against one honest pool by hand and checks every
/// step against the abstract transition function.
#[test]
fn selfish_agent_follows_transition_function() {
    const HONEST: PoolId = PoolId(0);
    const SELFISH: PoolId = PoolId(1);
    for (seed, gamma) in [(1u64, 0.0), (2, 0.5), (3, 1.0)] {
        let mut rng = SimRng::seed_from_u64(seed);
        let tie = TiePolicy::new(gamma).unwrap();
        let mut tree = BlockTree::new();
        let ctx = PowerContext {
            deviant: 0.4,
            honest: 0.6,
        };
        let mut selfish = Agent::new(SELFISH, &PoolSpec::new(0.4, Strategy::Selfish { activation: 1.0 }), ctx);
        let mut honest = Agent::new(HONEST, &PoolSpec::honest(0.6), ctx);
        let mut state = SelfishState::Lead(0);
        for _ in 0..20_000 {
            let mine = rng.random::<f64>() < 0.4;
            let (event, published) = if mine {
                let target = selfish.mine_target(&tree, tie, &mut rng);
                let block = tree.extend(target, SELFISH, false).unwrap();
                let action = selfish.on_event(Observation::MyBlock { block, target }, &tree, &mut rng);
                let ids: Vec<_> = selfish.take_withheld(action.publish).unwrap().collect();
                for id in ids {
                    tree.publish(id).unwrap();
                }
                selfish.synced(&tree, 0);
                (SelfishEvent::MyBlock, action.publish)
            } else {
                let target = honest.mine_target(&tree, tie, &mut rng);
                let block = tree.extend(target, HONEST, false).unwrap();
                tree.publish(block).unwrap();
                let action = selfish.on_event(Observation::OtherPublicBlock, &tree, &mut rng);
                let ids: Vec<_> = selfish.take_withheld(action.publish).unwrap().collect();
                for id in ids {
                    tree.publish(id).unwrap();
                }
                selfish.synced(&tree, 0);
                (SelfishEvent::OtherPublicBlock, action.publish)
            };
            let (next, expected_publish) = selfish_transition(state, event);
            assert_eq!(published as u32, expected_publish, "{state:?} {event:?}");
            assert_eq!(selfish.selfish_state(&tree), next, "{state:?} {event:?}");
            state = next;
        }
    }
}
