mod support;

use pbench_core::features::SequenceSample;
use pbench_core::models::lstm::{bilstm_forward, lstm_cell, CellParams};
use pbench_core::models::network::{multi_pool, Network, NetworkSpec, Readout, Targets};
use pbench_core::models::{train, train_step, Checkpoint, TrainConfig};
use pbench_core::seed;
use pbench_core::taxonomy::{LabelSpace, Profile};
use proptest::prelude::*;
use rand::Rng;
use support::reference::{ref_bilstm, RefDirection};

fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

fn random_direction(rng: &mut impl Rng, d: usize, h: usize) -> RefDirection {
    RefDirection {
        d,
        h,
        w_x: random_vec(rng, d * 4 * h, 0.8),
        w_h: random_vec(rng, h * 4 * h, 0.8),
        b: random_vec(rng, 4 * h, 0.5),
    }
}

fn cell(r: &RefDirection) -> CellParams<'_> {
    CellParams { input: r.d, hidden: r.h, w_x: &r.w_x, w_h: &r.w_h, b: &r.b }
}

#[test]
fn cell_matches_reference_on_three_dim_inputs() {
    let mut rng = seed::rng(&[11]);
    for _ in 0..50 {
        let r = random_direction(&mut rng, 3, 2);
        let x = random_vec(&mut rng, 3, 2.0);
        let h = random_vec(&mut rng, 2, 1.0);
        let c = random_vec(&mut rng, 2, 1.0);
        let (h1, c1) = lstm_cell(&x, &h, &c, &cell(&r)).unwrap();
        let (h2, c2) = r.step(&x, &h, &c);
        for k in 0..2 {
            assert!((h1[k] - h2[k]).abs() < 1e-12);
            assert!((c1[k] - c2[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn bilstm_matches_reference() {
    let mut rng = seed::rng(&[12]);
    for _ in 0..100 {
        let d = rng.gen_range(1..=6);
        let h = rng.gen_range(1..=8);
        let t = rng.gen_range(1..=10);
        let (f, b) = (random_direction(&mut rng, d, h), random_direction(&mut rng, d, h));
        let xs: Vec<Vec<f64>> = (0..t).map(|_| random_vec(&mut rng, d, 3.0)).collect();
        let flat: Vec<f64> = xs.concat();
        let got = bilstm_forward(&flat, t, &cell(&f), &cell(&b)).unwrap();
        let want = ref_bilstm(&f, &b, &xs);
        for (i, row) in want.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                assert!((got[i * 2 * h + k] - v).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn reversing_input_swaps_directions() {
    let mut rng = seed::rng(&[13]);
    let (d, h, t) = (4, 3, 6);
    let r = random_direction(&mut rng, d, h);
    let xs: Vec<Vec<f64>> = (0..t).map(|_| random_vec(&mut rng, d, 1.0)).collect();
    let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
    let a = bilstm_forward(&xs.concat(), t, &cell(&r), &cell(&r)).unwrap();
    let b = bilstm_forward(&rev.concat(), t, &cell(&r), &cell(&r)).unwrap();
    for i in 0..t {
        let j = t - 1 - i;
        for k in 0..h {
            assert!((a[i * 2 * h + k] - b[j * 2 * h + h + k]).abs() < 1e-12);
            assert!((a[i * 2 * h + h + k] - b[j * 2 * h + k]).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn multi_pool_is_permutation_invariant(rows in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 4), 1..10), seed_value in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm = rows.clone();
        perm.shuffle(&mut seed::rng(&[seed_value]));
        let a = multi_pool(&rows.concat(), rows.len(), 4);
        let b = multi_pool(&perm.concat(), rows.len(), 4);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn attention_weights_are_a_distribution(states in proptest::collection::vec(-3.0f64..3.0, 6..40), ctx in proptest::collection::vec(-2.0f64..2.0, 3)) {
        let rows = states.len() / 2;
        let proj: Vec<f64> = (0..6).map(|i| (i as f64 * 0.7).sin()).collect();
        let (_, w, _) = pbench_core::models::attention_pool(&states[..rows * 2], rows, 2, &proj, &ctx);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn logits_finite_for_bounded_inputs(x in proptest::collection::vec(-10.0f64..10.0, 6 * 5), s in any::<u64>()) {
        let spec = NetworkSpec { input_dim: 6, hidden: 4, attention: 3, readout: Readout::MultiPool, space: LabelSpace::Profile36 };
        let mut net = Network::init(spec, s).unwrap();
        net.randomize_heads(s);
        let l = net.forward(&x, 5).unwrap();
        prop_assert!(l.profile.iter().chain(&l.alignment).chain(&l.motivation).all(|v| v.is_finite()));
    }
}

fn tiny(readout: Readout, seed_value: u64) -> (Network, Vec<f64>) {
    let spec = NetworkSpec { input_dim: 6, hidden: 4, attention: 3, readout, space: LabelSpace::LawAxis3 };
    let mut net = Network::init(spec, seed_value).unwrap();
    net.randomize_heads(seed_value);
    let mut rng = seed::rng(&[seed_value, 77]);
    (net, random_vec(&mut rng, 5 * 6, 1.5))
}

/// Central differences for every parameter against the analytic gradient.
fn worst_relative_error(readout: Readout) -> f64 {
    let (mut net, x) = tiny(readout, 3);
    let targets = Targets { primary: 2, alignment: 4, motivation: 1 };
    let lambdas = (0.5, 0.5);
    let mask: Vec<f64> = (0..net.spec.pooled_dim()).map(|i| if i % 5 == 2 { 0.0 } else { 1.25 }).collect();
    let mut grad = vec![0.0; net.param_count()];
    net.loss_and_grad(&x, 5, &targets, lambdas, Some(&mask), 1.0, &mut grad).unwrap();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..net.param_count() {
        let orig = net.params[i];
        let mut scratch = vec![0.0; grad.len()];
        net.params[i] = orig + eps;
        let (up, _) = net.loss_and_grad(&x, 5, &targets, lambdas, Some(&mask), 1.0, &mut scratch).unwrap();
        net.params[i] = orig - eps;
        let (down, _) = net.loss_and_grad(&x, 5, &targets, lambdas, Some(&mask), 1.0, &mut scratch).unwrap();
        net.params[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let denom = grad[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((grad[i] - numeric).abs() / denom);
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    for readout in Readout::ALL {
        let err = worst_relative_error(readout);
        assert!(err < 1e-4, "{readout:?}: {err}");
    }
}

fn toy_sample(profile: Profile, rows: usize, dim: usize, rng: &mut impl Rng, centre: &[f64]) -> SequenceSample {
    let data = (0..rows).flat_map(|_| centre.iter().map(|c| c + rng.gen_range(-0.3..0.3)).collect::<Vec<_>>()).collect();
    SequenceSample { game_id: rng.gen(), profile, window_start: Some(0), rows, dim, data }
}

#[test]
fn one_sample_loss_decreases_every_step() {
    let (net, x) = tiny(Readout::MultiPool, 5);
    let sample = SequenceSample {
        game_id: 1,
        profile: Profile::from_index(13).unwrap(),
        window_start: Some(0),
        rows: 5,
        dim: 6,
        data: x,
    };
    let cfg = TrainConfig { learning_rate: 1e-2, dropout: 0.0, ..Default::default() };
    let mut ckpt = Checkpoint::new(net, 1, cfg.digest());
    let mut last = f64::INFINITY;
    for step in 0..50 {
        let l = train_step(&mut ckpt, &[&sample], &cfg).unwrap();
        assert!(l < last, "step {step}: {l} !< {last}");
        last = l;
    }
}

#[test]
fn clip_norm_zero_is_rejected() {
    let cfg = TrainConfig { clip_norm: 0.0, ..Default::default() };
    assert!(cfg.validate().is_err());
    assert!(TrainConfig { dropout: 1.0, ..Default::default() }.validate().is_err());
}

fn planted_clusters(n_per: usize, seed_value: u64) -> Vec<SequenceSample> {
    let mut rng = seed::rng(&[seed_value]);
    let centres = [[1.0, 0.0, 0.0, 0.5], [0.0, 1.0, 0.0, -0.5], [0.0, 0.0, 1.0, 0.0]];
    (0..3 * n_per)
        .map(|i| {
            // Lawful, neutral and chaotic profiles for the three law-axis classes.
            let profile = Profile::from_index([0, 12, 24][i % 3]).unwrap();
            toy_sample(profile, 4, 4, &mut rng, &centres[i % 3])
        })
        .collect()
}

#[test]
fn separable_clusters_reach_full_accuracy() {
    let train_set = planted_clusters(60, 1);
    let val = planted_clusters(20, 2);
    let cfg = TrainConfig { hidden: 8, batch_size: 16, epochs: 20, learning_rate: 1e-2, patience: 20, ..Default::default() };
    let spec = cfg.network_spec(4, Readout::MultiPool, LabelSpace::LawAxis3);
    let out = train(&train_set, &val, spec, 1, &cfg).unwrap();
    let best = out.history.iter().map(|r| r.val_accuracy).fold(0.0, f64::max);
    assert_eq!(best, 1.0, "{:?}", out.history);
}

#[test]
fn training_is_deterministic_and_honours_patience() {
    let train_set = planted_clusters(30, 3);
    let val = planted_clusters(10, 4);
    let cfg = TrainConfig { hidden: 6, batch_size: 8, epochs: 12, learning_rate: 1e-2, patience: 0, ..Default::default() };
    let spec = cfg.network_spec(4, Readout::Attention, LabelSpace::LawAxis3);
    let a = train(&train_set, &val, spec, 1, &cfg).unwrap();
    let b = train(&train_set, &val, spec, 1, &cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.checkpoint, b.checkpoint);
    // Patience 0 stops at the first epoch that does not improve on the best.
    let h = &a.history;
    let mut best = f64::NEG_INFINITY;
    for (i, r) in h.iter().enumerate() {
        if r.val_accuracy <= best {
            assert_eq!(i, h.len() - 1);
        }
        best = best.max(r.val_accuracy);
    }
}

#[test]
fn relaxed_reduction_stays_close() {
    let train_set = planted_clusters(20, 5);
    let val = planted_clusters(5, 6);
    let cfg = TrainConfig { hidden: 6, batch_size: 20, epochs: 2, ..Default::default() };
    let spec = cfg.network_spec(4, Readout::MultiPool, LabelSpace::LawAxis3);
    let a = train(&train_set, &val, spec, 1, &cfg).unwrap();
    let b = train(&train_set, &val, spec, 1, &TrainConfig { deterministic: false, ..cfg }).unwrap();
    for (x, y) in a.checkpoint.network.params.iter().zip(&b.checkpoint.network.params) {
        assert!((x - y).abs() < 1e-6);
    }
}
