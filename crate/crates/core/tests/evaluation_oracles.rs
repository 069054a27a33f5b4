mod common;

use common::{dense_policy_value, random_game, random_policy, random_profile, rng};
use proptest::prelude::*;
use tzmg_core::evaluation::gap_decomposition;
use tzmg_core::{best_response, duality_gap, evaluate_policy, shapley_solve, Player, PolicyProfile, PolicyTable};

/// Every deterministic stationary policy over `n` states with `k` actions.
fn deterministic_policies(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..k.pow(n as u32)).map(move |mut code| {
        (0..n)
            .map(|_| {
                let a = code % k;
                code /= k;
                a
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn best_response_beats_every_deterministic_policy(seed in any::<u64>(), n in 1..6usize, n1 in 1..4usize, n2 in 1..4usize) {
        let mut r = rng(seed);
        let game = random_game(&mut r, n, n1, n2, 0.85);
        let pi1 = random_policy(&mut r, n, n1);
        let pi2 = random_policy(&mut r, n, n2);

        let (br1, _) = best_response(&game, &pi2, Player::One, 1e-12).unwrap();
        let mut best1 = vec![f64::NEG_INFINITY; n];
        for choice in deterministic_policies(n, n1) {
            let profile = PolicyProfile { pi1: PolicyTable::deterministic(n1, &choice), pi2: pi2.clone() };
            for (b, v) in best1.iter_mut().zip(dense_policy_value(&game, &profile)) {
                *b = b.max(v);
            }
        }
        let (br2, _) = best_response(&game, &pi1, Player::Two, 1e-12).unwrap();
        let mut best2 = vec![f64::INFINITY; n];
        for choice in deterministic_policies(n, n2) {
            let profile = PolicyProfile { pi1: pi1.clone(), pi2: PolicyTable::deterministic(n2, &choice) };
            for (b, v) in best2.iter_mut().zip(dense_policy_value(&game, &profile)) {
                *b = b.min(v);
            }
        }
        for s in 0..n {
            prop_assert!((br1[s] - best1[s]).abs() < 1e-8, "player one, state {}: {} vs {}", s, br1[s], best1[s]);
            prop_assert!((br2[s] - best2[s]).abs() < 1e-8, "player two, state {}: {} vs {}", s, br2[s], best2[s]);
        }
    }

    #[test]
    fn gap_is_nonnegative_and_decomposes(seed in any::<u64>(), n in 1..9usize, n1 in 1..4usize, n2 in 1..4usize) {
        let mut r = rng(seed);
        let game = random_game(&mut r, n, n1, n2, 0.9);
        let profile = random_profile(&mut r, &game);
        let report = duality_gap(&game, &profile, 1e-10).unwrap();
        prop_assert!(report.gap >= 0.0);
        let (v, _) = evaluate_policy(&game, &profile, 1e-12).unwrap();
        for s in 0..n {
            prop_assert!(report.v_br1[s] >= v[s] - 1e-8);
            prop_assert!(report.v_br2[s] <= v[s] + 1e-8);
        }
        let (up, down) = gap_decomposition(&game, &profile, &report, 1e-12).unwrap();
        prop_assert!(up >= -1e-8 && down >= -1e-8);
        prop_assert!(report.raw_gap <= up + down + 1e-8);
    }

    #[test]
    fn equilibria_have_zero_gap(seed in any::<u64>(), n in 1..9usize, n1 in 1..4usize, n2 in 1..4usize) {
        let mut r = rng(seed);
        let game = random_game(&mut r, n, n1, n2, 0.9);
        let eq = shapley_solve(&game, 1e-11, 100_000).unwrap();
        let report = duality_gap(&game, &eq.profile, 1e-11).unwrap();
        prop_assert!(report.raw_gap.abs() < 1e-8);
        for s in 0..n {
            prop_assert!((report.v_br1[s] - eq.v[s]).abs() < 1e-8);
            prop_assert!((report.v_br2[s] - eq.v[s]).abs() < 1e-8);
        }
    }
}
