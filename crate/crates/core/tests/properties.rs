mod common;

use common::{binomial_coefficient, fair_coin_p_value, js_point_mass_vs_uniform};
use convlab_core::analysis::{
    collective_bias, exact_binomial_test, individual_bias, js_distance, NEUTRALITY_THRESHOLD,
};
use convlab_core::sim::{run_batch_serial, Population};
use convlab_core::state::Word;
use convlab_core::{
    run_batch, synth_policy, Outcome, PolicyTable, SimConfig, StateIndex, SynthKind,
    TransitionTable,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn produce_word_frequency_matches_probability() {
    let policy = synth_policy(SynthKind::Random { seed: 12 }, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let draws = 100_000;
    for i in [0, 3, 11, 20] {
        let p = policy.prob_a(StateIndex(i));
        let hits = (0..draws)
            .filter(|_| policy.produce_word(StateIndex(i), rng.random()) == Word::A)
            .count();
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        let f = hits as f64 / draws as f64;
        assert!((f - p).abs() <= 4.0 * se + 1e-12, "state {i}: {f} vs {p}");
    }
}

#[test]
fn constant_policy_success_rate() {
    let q = 0.3;
    let policy = synth_policy(SynthKind::Constant(q), 1).unwrap();
    let trans = TransitionTable::build(1).unwrap();
    let mut pop = Population::new(50, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws = 100_000;
    let hits = (0..draws)
        .filter(|_| pop.interact(&policy, &trans, &mut rng).success())
        .count();
    let p = q * q + (1.0 - q) * (1.0 - q);
    let se = (p * (1.0 - p) / draws as f64).sqrt();
    assert!((hits as f64 / draws as f64 - p).abs() <= 4.0 * se);
}

#[test]
fn relabelling_agents_permutes_states() {
    let policy = synth_policy(SynthKind::Random { seed: 9 }, 3).unwrap();
    let trans = TransitionTable::build(3).unwrap();
    let n = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut plain = Population::new(n, 10);
    let mut relabelled = Population::new(n, 10);
    for _ in 0..5_000 {
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        let x = plain.play(a, b, u, v, &policy, &trans);
        let y = relabelled.play(perm[a], perm[b], u, v, &policy, &trans);
        assert_eq!(x, y);
    }
    for i in 0..n {
        assert_eq!(plain.states()[i], relabelled.states()[perm[i]]);
    }
}

#[test]
fn serial_and_parallel_batches_agree() {
    let policy = synth_policy(SynthKind::BiasedEmpty(0.6), 3).unwrap();
    let mut config = SimConfig::new(24, 77);
    config.record_trajectory = true;
    let a = run_batch(&config, &policy, 64).unwrap();
    let b = run_batch_serial(&config, &policy, 64).unwrap();
    assert_eq!(a, b);
}

#[test]
fn swapping_words_mirrors_the_collective_bias() {
    let policy = synth_policy(SynthKind::Majority { tie: 0.65 }, 3).unwrap();
    let config = SimConfig::new(24, 5);
    let runs = 1000;
    let direct = collective_bias(&run_batch(&config, &policy, runs).unwrap()).unwrap();
    let mirror = collective_bias(&run_batch(&config, &policy.swapped(), runs).unwrap()).unwrap();
    let se = (direct.sem.powi(2) + mirror.sem.powi(2)).sqrt();
    assert!(
        (direct.fraction_a - (1.0 - mirror.fraction_a)).abs() <= 4.0 * se,
        "{direct:?} vs {mirror:?}"
    );
}

#[test]
fn symmetric_policy_is_unbiased() {
    let policy = synth_policy(SynthKind::Majority { tie: 0.5 }, 2).unwrap();
    let config = SimConfig::new(24, 31);
    let est = collective_bias(&run_batch(&config, &policy, 1000).unwrap()).unwrap();
    assert_eq!(est.n_no_consensus, 0);
    assert!((est.fraction_a - 0.5).abs() <= 4.0 * est.sem, "{est:?}");
}

#[test]
fn deterministic_policy_reaches_its_word() {
    let policy = synth_policy(SynthKind::Constant(1.0), 5).unwrap();
    let results = run_batch(&SimConfig::new(100, 1), &policy, 20).unwrap();
    assert!(results.iter().all(|r| r.outcome == Outcome::ConsensusA));
    assert!(results.iter().all(|r| r.consensus_time == Some(3)));
}

#[test]
fn policy_file_round_trip() {
    let policy = synth_policy(SynthKind::Random { seed: 101 }, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.json");
    policy.save(&path).unwrap();
    let back = PolicyTable::load(&path).unwrap();
    assert_eq!(back.probs(), policy.probs());
    assert_eq!(back.history_len(), 4);
    assert_eq!(back.word_pair(), policy.word_pair());

    let csv_path = dir.path().join("policy.csv");
    policy.save_csv(&csv_path).unwrap();
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let parsed: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap()[2].parse().unwrap())
        .collect();
    assert_eq!(parsed, policy.probs());
}

#[test]
fn binomial_test_matches_exact_enumeration() {
    for (k, n) in [(0, 10), (3, 10), (5, 10), (17, 30), (60, 100), (1, 1)] {
        let got = exact_binomial_test(k, n, 0.5).unwrap();
        let want = fair_coin_p_value(k, n);
        assert!((got - want).abs() < 1e-12, "k={k} n={n}: {got} vs {want}");
    }
    assert_eq!(binomial_coefficient(10, 5), 252);
}

#[test]
fn js_distance_extremes() {
    assert!(js_distance(&[0.3, 0.7], &[0.3, 0.7]).abs() < 1e-15);
    assert!((js_distance(&[1.0, 0.0], &[0.5, 0.5]) - js_point_mass_vs_uniform()).abs() < 1e-12);
    assert!((js_distance(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-12);
}

#[test]
fn individual_bias_of_uniform_policy_is_neutral() {
    let b = individual_bias(&synth_policy(SynthKind::Uniform, 3).unwrap());
    assert!(b.neutral && b.js_distance < NEUTRALITY_THRESHOLD);
    let b = individual_bias(&synth_policy(SynthKind::BiasedEmpty(0.9), 3).unwrap());
    assert!(!b.neutral);
}
