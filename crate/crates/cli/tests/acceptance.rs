//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed. Criteria 4 to 8 share one desk-scale
//! `pbench run-all` with the default configuration.

#[path = "../../core/tests/support/reference.rs"]
mod reference;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use pbench_core::dataset::{balance, read_json, split_by_game, BalancedIndexFile, CorpusIndex, SplitPart, SplitSpec};
use pbench_core::eval::Report;
use pbench_core::features::{
    featurize_decision, featurize_legacy_530, tensor_file, SequenceSample, AVAIL_SELECT_DIM, BEHAVIOR_DIM, FEATURE_DIM,
    LEGACY_BEHAVIOR_DIM, LEGACY_DIM, LEGACY_TEXT_DIM, MOVEMENT_DIM, TEMPORAL_DIM, TEXT_DIM, TRANSITION_DIM,
};
use pbench_core::models::lstm::{bilstm_forward, CellParams};
use pbench_core::models::network::{argmax, multi_pool, Network, NetworkSpec, Readout, Targets};
use pbench_core::models::{train_step, Checkpoint, TrainConfig};
use pbench_core::seed;
use pbench_core::simulator::{read_sessions, ActionInstance, Affinity, Category, DecisionPoint, Dungeon, Outcome, Session, SimConfig};
use pbench_core::taxonomy::{LabelSpace, PROFILE_COUNT};
use rand::seq::SliceRandom;
use rand::Rng;
use reference::{ref_bilstm, RefDirection};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn pbench(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pbench"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("PBENCH_OUT")
        .env("RUST_LOG", "error")
        .output()
        .expect("pbench runs")
}

fn cell(r: &RefDirection) -> CellParams<'_> {
    CellParams { input: r.d, hidden: r.h, w_x: &r.w_x, w_h: &r.w_h, b: &r.b }
}

fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

fn gradient_oracle() -> Verdict {
    let t0 = Instant::now();
    let spec = NetworkSpec { input_dim: 6, hidden: 4, attention: 3, readout: Readout::MultiPool, space: LabelSpace::LawAxis3 };
    let mut net = Network::init(spec, 21).unwrap();
    net.randomize_heads(21);
    let x = random_vec(&mut seed::rng(&[21, 1]), 5 * 6, 1.5);
    let targets = Targets { primary: 1, alignment: 6, motivation: 2 };
    let lambdas = (0.5, 0.5);
    let mut grad = vec![0.0; net.param_count()];
    net.loss_and_grad(&x, 5, &targets, lambdas, None, 1.0, &mut grad).unwrap();
    let mut scratch = vec![0.0; grad.len()];
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..net.param_count() {
        let orig = net.params[i];
        net.params[i] = orig + eps;
        let (up, _) = net.loss_and_grad(&x, 5, &targets, lambdas, None, 1.0, &mut scratch).unwrap();
        net.params[i] = orig - eps;
        let (down, _) = net.loss_and_grad(&x, 5, &targets, lambdas, None, 1.0, &mut scratch).unwrap();
        net.params[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        worst = worst.max((grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-6));
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(worst < 1e-4 && secs < 60.0, format!("{} params, worst relative error {worst:.2e}, {secs:.2}s", net.param_count()))
}

fn forward_oracle() -> Verdict {
    let mut rng = seed::rng(&[22]);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (d, h, t) = (rng.gen_range(1..=6), rng.gen_range(1..=8), rng.gen_range(1..=10));
        let mut dir = || RefDirection {
            d,
            h,
            w_x: random_vec(&mut rng, d * 4 * h, 0.8),
            w_h: random_vec(&mut rng, h * 4 * h, 0.8),
            b: random_vec(&mut rng, 4 * h, 0.5),
        };
        let (f, b) = (dir(), dir());
        let xs: Vec<Vec<f64>> = (0..t).map(|_| random_vec(&mut rng, d, 3.0)).collect();
        let got = bilstm_forward(&xs.concat(), t, &cell(&f), &cell(&b)).unwrap();
        for (i, row) in ref_bilstm(&f, &b, &xs).iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                worst = worst.max((got[i * 2 * h + k] - v).abs());
            }
        }
    }
    let mut exact = true;
    for _ in 0..500 {
        let (rows, width) = (rng.gen_range(1..=12), rng.gen_range(1..=8));
        let mut states: Vec<Vec<f64>> = (0..rows).map(|_| random_vec(&mut rng, width, 5.0)).collect();
        let a = multi_pool(&states.concat(), rows, width);
        states.shuffle(&mut rng);
        exact &= a == multi_pool(&states.concat(), rows, width);
    }
    verdict(worst < 1e-9 && exact, format!("max |Δ| {worst:.2e} over 100 instances; pooling permutation-exact: {exact}"))
}

/// FNV-1a 64, written from its published definition.
fn fnv(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

fn hashed(words: &[&str], buckets: usize) -> Vec<f64> {
    let mut features: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    features.extend(words.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    let mut v = vec![0.0; buckets];
    for f in features {
        let bucket = (fnv(format!("b:{f}").as_bytes()) % buckets as u64) as usize;
        v[bucket] += if fnv(format!("s:{f}").as_bytes()) >> 63 == 0 { 1.0 } else { -1.0 };
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn crafted_session() -> Session {
    let act = |category: Category, move_delta: Option<[i32; 2]>| ActionInstance {
        category,
        valence: 0.0,
        order: 0.0,
        affinity: Affinity::default(),
        text: String::new(),
        move_delta,
    };
    use Category::*;
    let step = |i: u32, available: Vec<ActionInstance>, chosen: usize, action_text: &str| DecisionPoint {
        step: i,
        room: [0, 0],
        available,
        chosen,
        room_text: "A narrow Hall,".into(),
        action_text: action_text.into(),
    };
    let decisions = vec![
        step(0, vec![act(Combat, None), act(Cautious, None), act(Exploratory, Some([1, 0]))], 2, "you go east"),
        step(1, vec![act(Social, None), act(Acquisitive, None), act(Exploratory, Some([-1, 0])), act(Exploratory, Some([0, -1]))], 0, "you greet"),
        step(2, vec![act(Social, None), act(Exploratory, Some([1, 0])), act(Cautious, None)], 1, "you go east"),
        step(3, vec![act(Combat, None), act(Acquisitive, None), act(Exploratory, Some([0, 1]))], 2, "you step SOUTH."),
    ];
    Session { game_id: 0, profile: "LG-Safety".parse().unwrap(), seed: 1, outcome: Outcome::StepLimit, decisions }
}

fn feature_audit() -> Verdict {
    let dims = TRANSITION_DIM + AVAIL_SELECT_DIM + TEMPORAL_DIM + MOVEMENT_DIM == 48
        && BEHAVIOR_DIM == 48
        && BEHAVIOR_DIM + TEXT_DIM == 176
        && FEATURE_DIM == 176
        && LEGACY_TEXT_DIM + LEGACY_BEHAVIOR_DIM == 530
        && LEGACY_DIM == 530;
    let fractions = format!("{:.1}", 100.0 * TEXT_DIM as f64 / FEATURE_DIM as f64) == "72.7"
        && format!("{:.1}", 100.0 * LEGACY_TEXT_DIM as f64 / LEGACY_DIM as f64) == "96.6";

    // Hand-derived features of the crafted session at its last step. Chosen
    // categories: exploratory, social, exploratory, exploratory. Moves from
    // (2,2): east, east, south, ending at (4,3).
    let mut oracle = vec![0.0; 48];
    oracle[3] = 1.0 / 3.0; // exploratory → exploratory
    oracle[5 + 5] = 2.0 / 3.0; // social ↔ exploratory, pair (1,3)
    oracle[15..20].copy_from_slice(&[0.5, 0.5, 0.5, 1.0, 0.5]); // offered in 2,2,2,4,2 of 4 steps
    oracle[20..25].copy_from_slice(&[0.0, 0.5, 0.0, 0.75, 0.0]); // chosen 0,1,0,3,0 times
    oracle[25] = 13.0 / 4.0 / 6.0; // choice sets of 3, 4, 3, 3
    oracle[26] = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln()) / 5f64.ln();
    oracle[27 + 3] = 1.0; // phases of 1, 1, 2 steps
    oracle[27 + 5 + 1] = 1.0;
    oracle[27 + 10 + 3] = 1.0;
    oracle[42..48].copy_from_slice(&[
        4.0 / 36.0, // four rooms of 36
        0.0,        // 1 − (4 − 1)/3 moves
        7.0 / 4.0 / 10.0, // distances 1, 1, 2, 3 over span 10
        1.0,        // displacement 3 over 3 moves
        0.5,        // one turn in two move pairs
        0.0,
    ]);
    let words = ["a", "narrow", "hall", "you", "step", "south"];
    let mut full = oracle.clone();
    full.extend(hashed(&words, 128));
    let mut legacy = hashed(&words, 512);
    legacy.extend_from_slice(&oracle[..18]);

    let session = crafted_session();
    let mut dungeon = Dungeon::generate(1, &SimConfig::default()).unwrap();
    dungeon.start = [2, 2];
    let got = featurize_decision(&session, 3, &dungeon).unwrap().values;
    let got_legacy = featurize_legacy_530(&session, 3, &dungeon).unwrap();
    let err = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let worst = err(&got, &full).max(err(&got_legacy, &legacy));
    let ok = dims && fractions && got.len() == 176 && got_legacy.len() == 530 && worst < 1e-12;
    verdict(ok, format!("identities {dims}, fractions 72.7%/96.6% {fractions}, crafted session max |Δ| {worst:.1e}"))
}

fn balancing(desk: &Path) -> Verdict {
    let sessions = read_sessions(&desk.join("gen/sessions.jsonl")).unwrap();
    let full = CorpusIndex::from_sessions(&sessions, 8, 4);
    let file: BalancedIndexFile = read_json(&desk.join("balance/balanced_index.json")).unwrap();
    let balanced = CorpusIndex::from_file(&file, &full).unwrap();
    let (before, after) = (full.imbalance_ratio(), balanced.imbalance_ratio());

    let mut rng = seed::rng(&[24]);
    let (lo, hi) = (full.max_game_windows(), *full.totals().values().max().unwrap());
    let mut leaks = 0;
    for _ in 0..1000 {
        let index = balance(&full, rng.gen_range(lo..=hi), rng.gen()).unwrap();
        let train = rng.gen_range(0.5..0.9);
        let val = rng.gen_range(0.0..(1.0 - train));
        let splits = split_by_game(&index, &SplitSpec { train, val, test: 1.0 - train - val, seed: rng.gen() }).unwrap();
        let parts: Vec<BTreeSet<u64>> = [SplitPart::Train, SplitPart::Val, SplitPart::Test]
            .iter()
            .map(|&p| splits.part(p).game_ids().into_iter().collect())
            .collect();
        let disjoint = parts[0].is_disjoint(&parts[1]) && parts[0].is_disjoint(&parts[2]) && parts[1].is_disjoint(&parts[2]);
        let union: BTreeSet<u64> = parts.iter().flatten().copied().collect();
        let all: BTreeSet<u64> = index.game_ids().into_iter().collect();
        if !disjoint || union != all {
            leaks += 1;
        }
    }
    verdict(after <= 1.2 && leaks == 0, format!("imbalance {before:.2} → {after:.3}; leaking trials {leaks}/1000"))
}

fn test_windows(desk: &Path) -> Vec<SequenceSample> {
    #[derive(serde::Deserialize)]
    struct SplitFile {
        assignment: BTreeMap<u64, SplitPart>,
    }
    let split: SplitFile = read_json(&desk.join("split/split.json")).unwrap();
    let t = tensor_file::load(&desk.join("featurize/features176.pbf")).unwrap();
    t.samples.into_iter().filter(|s| split.assignment.get(&s.game_id) == Some(&SplitPart::Test)).collect()
}

fn untrained_calibration(desk: &Path) -> Verdict {
    let test = test_windows(desk);
    let random = 100.0 / PROFILE_COUNT as f64;
    let mut accs = Vec::new();
    for s in 0..5u64 {
        let cfg = TrainConfig::default();
        let mut net = Network::init(cfg.network_spec(FEATURE_DIM, Readout::MultiPool, LabelSpace::Profile36), s).unwrap();
        net.randomize_heads(s);
        let hits = test.iter().filter(|w| argmax(&net.forward(&w.data, w.rows).unwrap().profile) == w.profile.index()).count();
        accs.push(100.0 * hits as f64 / test.len() as f64);
    }
    let ok = accs.iter().all(|a| (a - random).abs() <= 2.0);
    let shown: Vec<String> = accs.iter().map(|a| format!("{a:.2}%")).collect();
    verdict(ok, format!("{} test windows, seeds 0-4: {} vs {random:.2}%", test.len(), shown.join(", ")))
}

fn report(desk: &Path, rung: &str) -> Report {
    read_json(&desk.join("eval").join(rung).join("metrics.json")).unwrap()
}

fn desk_ladder(desk: &Path, secs: f64) -> Verdict {
    let mp = report(desk, "multipool_176").primary.accuracy;
    let base = report(desk, "lstm_base_530").primary.accuracy;
    let agg = report(desk, "baseline").primary.accuracy;
    let motiv = report(desk, "multipool_176").motivation.accuracy;
    let ok = mp >= 3.0 / 36.0 && mp > base && mp > agg && motiv >= 0.5;
    verdict(
        ok,
        format!(
            "multipool {:.2}% vs base-530 {:.2}% vs aggregate {:.2}%; motivation {:.2}%; run-all {secs:.0}s",
            100.0 * mp,
            100.0 * base,
            100.0 * agg,
            100.0 * motiv
        ),
    )
}

fn semantic_gap(desk: &Path) -> Verdict {
    let non = report(desk, "multipool_nonneutral");
    let neu = report(desk, "multipool_neutral");
    let full = report(desk, "multipool_176");
    let gap = 100.0 * (non.primary.accuracy - neu.primary.accuracy);
    let ok = gap >= 5.0 && neu.true_neutral_mass > neu.true_neutral_prior;
    verdict(
        ok,
        format!(
            "16-class {:.2}% vs 20-class {:.2}% (gap {gap:.2} points); neutral model TN column {:.3} vs prior {:.3} \
             (36-class model, any-neutral columns: {:.3} vs {:.3})",
            100.0 * non.primary.accuracy,
            100.0 * neu.primary.accuracy,
            neu.true_neutral_mass,
            neu.true_neutral_prior,
            full.neutral_column_mass,
            full.neutral_prior
        ),
    )
}

fn neutral_correction(desk: &Path) -> Verdict {
    let c = report(desk, "multipool_corrected").correction.expect("correction report");
    let drop = 100.0 * (c.accuracy_before - c.accuracy_after);
    let ok = c.l1_after < c.l1_before && drop <= 1.0;
    verdict(
        ok,
        format!(
            "η {}; L1 to prior {:.4} → {:.4}; alignment accuracy {:.2}% → {:.2}%",
            c.eta,
            c.l1_before,
            c.l1_after,
            100.0 * c.accuracy_before,
            100.0 * c.accuracy_after
        ),
    )
}

fn overfit_one_batch(desk: &Path) -> Verdict {
    let test = test_windows(desk);
    let cfg = TrainConfig { dropout: 0.0, ..TrainConfig::default() };
    let batch: Vec<&SequenceSample> = test.iter().step_by((test.len() / cfg.batch_size).max(1)).take(cfg.batch_size).collect();
    let net = Network::init(cfg.network_spec(FEATURE_DIM, Readout::MultiPool, LabelSpace::Profile36), 9).unwrap();
    let mut ckpt = Checkpoint::new(net, 1, cfg.digest());
    let mut reached = None;
    let mut last = f64::NAN;
    for step in 1..=200 {
        last = train_step(&mut ckpt, &batch, &cfg).unwrap();
        if last < 0.05 {
            reached = Some(step);
            break;
        }
    }
    match reached {
        Some(step) => verdict(true, format!("{} windows, loss {last:.4} at step {step} (lr {})", batch.len(), cfg.learning_rate)),
        None => verdict(false, format!("{} windows, loss still {last:.4} after 200 steps", batch.len())),
    }
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn determinism(root: &Path) -> Verdict {
    let cfg = root.join("small.json");
    fs::write(&cfg, r#"{"seed": 5, "games_per_profile": 12, "train": {"epochs": 2}, "ladder": ["baseline", "multipool_176", "multipool_corrected"]}"#)
        .unwrap();
    let runs: Vec<PathBuf> = ["a", "b"].iter().map(|r| root.join(r)).collect();
    for out in &runs {
        let o = pbench(&["run-all", "--deterministic", "--config", cfg.to_str().unwrap()], out);
        if !o.status.success() {
            return verdict(false, format!("run-all failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
    }
    let watched = |p: &Path| {
        let name = p.file_name().unwrap().to_string_lossy();
        name == "metrics.json" || name == "checkpoint.pbck" || (name.starts_with("confusion_") && name.ends_with(".csv"))
    };
    let (a, b) = (files(&runs[0]), files(&runs[1]));
    let rel = |v: &[PathBuf], root: &Path| v.iter().map(|p| p.strip_prefix(root).unwrap().to_path_buf()).collect::<Vec<_>>();
    if rel(&a, &runs[0]) != rel(&b, &runs[1]) {
        return verdict(false, "runs wrote different file sets".into());
    }
    let (mut compared, mut differing) = (0, Vec::new());
    for (x, y) in a.iter().zip(&b) {
        if watched(x) {
            compared += 1;
        }
        if fs::read(x).unwrap() != fs::read(y).unwrap() {
            differing.push(x.strip_prefix(&runs[0]).unwrap().display().to_string());
        }
    }
    let ok = differing.is_empty() && compared > 0;
    verdict(ok, format!("{compared} metrics/confusion/checkpoint files, {} files in all; differing: {differing:?}", a.len()))
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let desk = tmp.path().join("desk");
    let mut results: Vec<(u8, &str, Verdict)> = vec![
        (1, "gradient oracle", gradient_oracle()),
        (2, "forward oracle", forward_oracle()),
        (3, "feature audit", feature_audit()),
    ];

    let t0 = Instant::now();
    let run = pbench(&["run-all", "--deterministic"], &desk);
    let secs = t0.elapsed().as_secs_f64();
    if run.status.success() {
        results.push((4, "balancing and splitting", balancing(&desk)));
        results.push((5, "untrained calibration", untrained_calibration(&desk)));
        results.push((6, "desk-scale ladder", desk_ladder(&desk, secs)));
        results.push((7, "semantic gap", semantic_gap(&desk)));
        results.push((8, "neutral correction", neutral_correction(&desk)));
        results.push((9, "overfit one batch", overfit_one_batch(&desk)));
        print!("{}", fs::read_to_string(desk.join("eval/table.md")).unwrap_or_default());
    } else {
        let err = String::from_utf8_lossy(&run.stderr).into_owned();
        for (id, name) in [(4, "balancing and splitting"), (5, "untrained calibration"), (6, "desk-scale ladder"), (7, "semantic gap"), (8, "neutral correction"), (9, "overfit one batch")] {
            results.push((id, name, verdict(false, format!("desk run-all failed: {err}"))));
        }
    }
    results.push((10, "determinism", determinism(tmp.path())));

    let mut failed = 0;
    for (id, name, v) in &results {
        println!("criterion {id:>2} {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
