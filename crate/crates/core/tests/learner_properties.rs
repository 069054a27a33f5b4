mod common;

use common::{random_game, rng};
use proptest::prelude::*;
use tzmg_core::game::bilinear;
use tzmg_core::{
    minimax_q_step, shapley_solve, train, ExplicitGame, LearnerConfig, LearnerState, LearningRate, Transition,
};

fn matching_pennies(terminal: f64) -> ExplicitGame {
    let rows = [1.0, -1.0, -1.0, 1.0]
        .iter()
        .map(|&r| Transition::new(r, terminal, if terminal < 1.0 { vec![(0, 1.0 - terminal)] } else { vec![] }))
        .collect();
    ExplicitGame::new(1, 2, 2, 0.9, (-1.0, 1.0), rows).unwrap()
}

#[test]
fn matching_pennies_is_learned() {
    for terminal in [1.0, 0.0] {
        let game = matching_pennies(terminal);
        let oracle = shapley_solve(&game, 1e-12, 100_000).unwrap();
        let out = train(&game, &[(0, 1.0)], &LearnerConfig::new(10_000, 0.9)).unwrap();
        let state = &out.final_state;
        assert!((state.v[0] - oracle.v[0]).abs() < 0.05, "terminal {terminal}: v {}", state.v[0]);
        for (p, q) in state.profile.pi1.row(0).iter().chain(state.profile.pi2.row(0)).zip([0.5; 4]) {
            assert!((p - q).abs() < 0.05, "terminal {terminal}: policy {p}");
        }
    }
}

#[test]
fn training_is_reproducible() {
    let mut r = rng(3);
    let game = random_game(&mut r, 6, 3, 2, 0.9);
    let init = vec![(0, 0.5), (3, 0.5)];
    let config = LearnerConfig::new(5_000, 0.9).with_seed(11);
    let a = train(&game, &init, &config).unwrap();
    let b = train(&game, &init, &config).unwrap();
    assert_eq!(a, b);
    let c = train(&game, &init, &config.clone().with_seed(12)).unwrap();
    assert_ne!(a.final_state.q, c.final_state.q);
    let iters: Vec<u64> = a.checkpoints.iter().map(|c| c.iter).collect();
    let expected: Vec<u64> = (0..=50).map(|i| i * 100).collect();
    assert_eq!(iters, expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn value_is_the_bilinear_form_after_every_step(seed in any::<u64>(), n in 1..7usize, n1 in 1..4usize, n2 in 1..4usize, beta in 0.0..=1.0f64) {
        let mut r = rng(seed);
        let game = random_game(&mut r, n, n1, n2, 0.9);
        let init = vec![(0, 1.0)];
        let config = LearnerConfig::new(2_000, 0.9).with_beta(beta).with_lr(LearningRate::Constant(0.5));
        let mut state = LearnerState::new(&game, &init, &mut r);
        let bound = 1.0 / (1.0 - 0.9);
        for _ in 0..2_000 {
            let rec = minimax_q_step(&game, &init, &mut state, &config, &mut r);
            let s = rec.state;
            let v = bilinear(state.q.state(s), state.profile.pi1.row(s), state.profile.pi2.row(s));
            prop_assert_eq!(state.v[s].to_bits(), v.to_bits());
            prop_assert!(state.q.as_slice().iter().all(|q| q.abs() <= bound + 1e-12));
        }
        prop_assert_eq!(state.visits.iter().sum::<u64>(), 2_000);
    }
}
