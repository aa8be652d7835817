//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers (visible with `--nocapture`).
//!
//! Run: cargo test --test acceptance -- --nocapture

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tissue::pipeline::synth;
use tissue::pipeline::{NormState, Pipeline, PipelineConfig};
use tissue::receptor::{ActivationSet, ComboRule, TlrEffect, TlrRuleSet};
use tissue::som::{FeatureVector, GridCoord, Schedule, TissueMap};
use tissue::{novelty_score, GateConfig, NoveltyInputs};

fn example_config() -> PipelineConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.json");
    PipelineConfig::from_path(&path).expect("example config loads")
}

fn fv(values: Vec<f64>) -> FeatureVector {
    FeatureVector::new(values).unwrap()
}

/// Criterion 1: find_bmu agrees with an exhaustive scan on 1,000 random
/// inputs against a seeded 10x10, d=8 grid, exactly and in under a second.
#[test]
fn c1_bmu_oracle_equivalence() {
    let map = TissueMap::new(10, 10, 8, Schedule::default(), 42).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let start = Instant::now();
    for case in 0..1000 {
        let x = fv((0..8).map(|_| rng.random::<f64>()).collect());
        let (coord, dist) = map.find_bmu(&x).unwrap();

        // Independent oracle: scan every cell, strict-less keeps the first
        // (row-major smallest) of any tie.
        let mut best: Option<(GridCoord, f64)> = None;
        for cell in map.cells() {
            let mut acc = 0.0;
            for (w, v) in cell.weights.iter().zip(x.values()) {
                acc += (w - v) * (w - v);
            }
            let d = acc.sqrt();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((cell.coord, d));
            }
        }
        let (oracle_coord, oracle_dist) = best.unwrap();
        assert_eq!(coord, oracle_coord, "case {case}");
        assert_eq!(dist, oracle_dist, "case {case}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("[criterion 1] PASS - 1000/1000 BMU matches, {elapsed:?}");
}

/// Criterion 2: with effective rate 1 and a point neighborhood the BMU
/// collapses onto the input within 1e-12; with multiplier 0 the weights
/// are bit-for-bit unchanged.
#[test]
fn c2_update_collapse() {
    let sched = Schedule { alpha0: 1.0, alpha_min: 1.0, sigma0: 1e-9, sigma_min: 1e-9, tau: 1.0 };
    let mut map = TissueMap::new(5, 5, 3, sched, 8).unwrap();
    let before: Vec<Vec<f64>> = map.cells().iter().map(|c| c.weights.clone()).collect();
    let x = fv(vec![0.12, 0.98, 0.5]);
    let report = map.train_step(&x, 1.0).unwrap();
    assert_eq!(report.alpha_eff, 1.0);
    for (cell, old) in map.cells().iter().zip(&before) {
        if cell.coord == report.bmu {
            for (w, v) in cell.weights.iter().zip(x.values()) {
                assert!((w - v).abs() <= 1e-12, "BMU weight {w} vs input {v}");
            }
        } else {
            assert_eq!(&cell.weights, old, "non-BMU cell {} moved", cell.coord);
        }
    }

    let mut map = TissueMap::new(6, 4, 3, Schedule::default(), 9).unwrap();
    let before: Vec<Vec<f64>> = map.cells().iter().map(|c| c.weights.clone()).collect();
    map.train_step(&x, 0.0).unwrap();
    let after: Vec<Vec<f64>> = map.cells().iter().map(|c| c.weights.clone()).collect();
    assert_eq!(before, after, "multiplier 0 must freeze the grid bit-for-bit");
    assert_eq!(map.cells().iter().map(|c| c.hit_count).sum::<u64>(), 1);
    println!("[criterion 2] PASS - full-rate collapse within 1e-12, zero-rate grid frozen");
}

/// Criterion 3: on the 3-cluster 2D stream (seed 7, 20x20 grid, 5,000
/// events, 5 passes) the mean quantization error of the final pass is at
/// most 0.7x the first pass, in under 10 s. The exact ratio from the first
/// oracle run is frozen as a regression bound.
#[test]
fn c3_som_learning_check() {
    const FROZEN_RATIO: f64 = 0.599528038752332;

    let cfg = example_config();
    let mut synth_cfg = cfg.synth.clone().unwrap();
    synth_cfg.anomaly_fraction = 0.0;
    let events = synth::generate(&synth_cfg, 5000, 7).unwrap();

    let start = Instant::now();
    let mut map = TissueMap::new(20, 20, 2, cfg.schedule, 42).unwrap();
    let mut norm = NormState::new(2);
    let mut pass_means = Vec::new();
    for _ in 0..5 {
        let mut sum = 0.0;
        for ev in &events {
            let x = norm.observe_and_normalize(&ev.features).unwrap();
            sum += map.train_step(&x, 1.0).unwrap().bmu_distance;
        }
        pass_means.push(sum / events.len() as f64);
    }
    let elapsed = start.elapsed();
    let ratio = pass_means[4] / pass_means[0];

    assert!(ratio <= 0.7, "final/first MQE ratio {ratio} exceeds 0.7");
    assert!(
        (ratio - FROZEN_RATIO).abs() <= 1e-6,
        "ratio {ratio} drifted from frozen {FROZEN_RATIO}"
    );
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "[criterion 3] PASS - MQE first {:.6}, final {:.6}, ratio {ratio:.4} <= 0.7, {elapsed:?}",
        pass_means[0], pass_means[4]
    );
}

/// Criterion 4: on the seeded 10,000-event stream (1% anomalies at >= 5
/// sigma, warmup 2,000) the gate emits at least 90% of post-warmup
/// anomalies, at most 5% of post-warmup normals, and reduces the normal
/// subpopulation to at most 10%, in under 30 s. Thresholds were calibrated
/// once on this stream and are frozen in configs/example.json.
#[test]
fn c4_gate_experiment() {
    let cfg = example_config();
    let synth_cfg = cfg.synth.clone().unwrap();
    assert_eq!(synth_cfg.anomaly_fraction, 0.01);
    let events = synth::generate(&synth_cfg, 10_000, 4242).unwrap();
    let warmup = cfg.gate.warmup_steps as usize;
    assert_eq!(warmup, 2000);

    let start = Instant::now();
    let mut pipeline = Pipeline::new(&cfg).unwrap();
    let (mut post_anom, mut post_anom_emit) = (0u64, 0u64);
    let (mut post_norm, mut post_norm_emit) = (0u64, 0u64);
    let (mut norm_total, mut norm_emit) = (0u64, 0u64);
    for (i, ev) in events.iter().enumerate() {
        let emitted = pipeline.process_event(ev).unwrap().is_some();
        let anomalous = ev.label.as_deref() == Some("anomaly");
        if !anomalous {
            norm_total += 1;
            if emitted {
                norm_emit += 1;
            }
        }
        if i >= warmup {
            if anomalous {
                post_anom += 1;
                if emitted {
                    post_anom_emit += 1;
                }
            } else {
                post_norm += 1;
                if emitted {
                    post_norm_emit += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();

    let anomaly_rate = post_anom_emit as f64 / post_anom as f64;
    let normal_rate = post_norm_emit as f64 / post_norm as f64;
    let normal_reduction = norm_emit as f64 / norm_total as f64;
    assert!(
        anomaly_rate >= 0.90,
        "only {post_anom_emit}/{post_anom} anomalies emitted ({anomaly_rate:.3})"
    );
    assert!(
        normal_rate <= 0.05,
        "{post_norm_emit}/{post_norm} normals emitted ({normal_rate:.4})"
    );
    assert!(
        normal_reduction <= 0.10,
        "normal-subpopulation reduction ratio {normal_reduction:.4} exceeds 0.10"
    );
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!(
        "[criterion 4] PASS - anomalies {post_anom_emit}/{post_anom} ({anomaly_rate:.3}), normals {post_norm_emit}/{post_norm} ({normal_rate:.4}), normal reduction {normal_reduction:.4}, {elapsed:?}"
    );
}

/// Reference interpreter for criterion 5, written independently of the
/// main implementation: sort matching combos explicitly, otherwise fold
/// the singles.
fn reference_effect(
    combos: &[ComboRule],
    singles: &BTreeMap<String, TlrEffect>,
    active: &[&str],
) -> TlrEffect {
    let mut matching: Vec<&ComboRule> = combos
        .iter()
        .filter(|combo| combo.members.iter().all(|m| active.contains(&m.as_str())))
        .collect();
    matching.sort_by(|a, b| {
        b.members
            .len()
            .cmp(&a.members.len())
            .then_with(|| {
                let va: Vec<&String> = a.members.iter().collect();
                let vb: Vec<&String> = b.members.iter().collect();
                va.cmp(&vb)
            })
    });
    if let Some(combo) = matching.first() {
        return combo.effect;
    }
    let mut mult = 1.0;
    let mut danger: f64 = 0.0;
    for name in active {
        if let Some(effect) = singles.get(*name) {
            mult *= effect.learn_multiplier;
            danger = danger.max(effect.danger);
        }
    }
    TlrEffect { learn_multiplier: mult, danger }
}

/// Criterion 5: for every ruleset with k <= 4 receptors in the corpus,
/// effect_of agrees with the reference interpreter on all 2^k activations.
#[test]
fn c5_receptor_table_exhaustive() {
    let corpus: Vec<TlrRuleSet> = vec![
        // Shipped example ruleset (3 receptors, 2 combos).
        example_config().receptors,
        // Four receptors, nested and tied combos.
        TlrRuleSet::compile(
            r#"{
                "receptors": [
                    {"name": "a", "feature": "fa", "op": ">=", "value": 1},
                    {"name": "b", "feature": "fb", "op": "<=", "value": 2},
                    {"name": "c", "feature": "fc", "op": "==", "value": 3},
                    {"name": "d", "feature": "fd", "op": "in", "value": [4, 5]}
                ],
                "singles": {
                    "a": {"mult": 2.0, "danger": 0.1},
                    "b": {"mult": 1.5, "danger": 0.4},
                    "c": {"mult": 3.0, "danger": 0.2}
                },
                "combos": [
                    {"members": ["a", "b"], "mult": 4.0, "danger": 0.5},
                    {"members": ["a", "c"], "mult": 5.0, "danger": 0.6},
                    {"members": ["b", "c"], "mult": 6.0, "danger": 0.7},
                    {"members": ["a", "b", "c"], "mult": 9.0, "danger": 0.9},
                    {"members": ["a", "b", "c", "d"], "mult": 12.0, "danger": 1.0},
                    {"members": ["c", "d"], "mult": 7.0, "danger": 0.8}
                ]
            }"#,
        )
        .unwrap(),
        // Singles only.
        TlrRuleSet::compile(
            r#"{
                "receptors": [
                    {"name": "x", "feature": "f", "op": ">=", "value": 0},
                    {"name": "y", "feature": "g", "op": ">=", "value": 0}
                ],
                "singles": {"x": {"mult": 2.5, "danger": 0.25}, "y": {"mult": 4.0, "danger": 0.5}}
            }"#,
        )
        .unwrap(),
        // Empty ruleset.
        TlrRuleSet::compile("{}").unwrap(),
    ];

    let mut checked = 0usize;
    for (ri, rules) in corpus.iter().enumerate() {
        let names: Vec<&str> = rules.receptors().iter().map(|r| r.name.as_str()).collect();
        let k = names.len();
        assert!(k <= 4);
        let singles: BTreeMap<String, TlrEffect> = names
            .iter()
            .map(|n| (n.to_string(), rules.single_effect(n)))
            .collect();
        for mask in 0..(1u32 << k) {
            let active: Vec<&str> =
                names.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| *n).collect();
            let got = rules.effect_of(&ActivationSet::from_names(active.iter().copied()));
            let want = reference_effect(rules.combos(), &singles, &active);
            assert_eq!(got, want, "ruleset {ri}, activation {active:?}");
            checked += 1;
        }
    }
    println!("[criterion 5] PASS - {checked} activation sets agree with the reference interpreter");
}

/// Criterion 6: decay scales total field mass by exactly the decay factor,
/// and 50 identical anomalies from one source pull the field argmax to
/// within Chebyshev distance 1 of their modal BMU.
#[test]
fn c6_inflammation_conservation_and_locality() {
    // Conservation.
    let mut field = tissue::InflammationField::new(8, 8, 0.93, 2.0, 1.0).unwrap();
    field.deposit(GridCoord::new(3, 3), 1.2).unwrap();
    field.deposit(GridCoord::new(6, 1), 0.4).unwrap();
    let before = field.total_mass();
    field.step_decay();
    let delta = (field.total_mass() - 0.93 * before).abs();
    assert!(delta <= 1e-9, "mass drift {delta}");

    // Locality against the seeded trace.
    let cfg = example_config();
    let mut synth_cfg = cfg.synth.clone().unwrap();
    synth_cfg.anomaly_fraction = 0.0;
    let background = synth::generate(&synth_cfg, 2000, 9).unwrap();
    let mut pipeline = Pipeline::new(&cfg).unwrap();
    // Mirror of the online range update, to compute each anomaly's BMU the
    // way the pipeline will see it.
    let mut ranges: Vec<(f64, f64)> = Vec::new();
    let track = |features: &[f64], ranges: &mut Vec<(f64, f64)>| {
        if ranges.is_empty() {
            *ranges = features.iter().map(|&v| (v, v)).collect();
        } else {
            for (r, &v) in ranges.iter_mut().zip(features) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        features
            .iter()
            .zip(ranges.iter())
            .map(|(&v, &(lo, hi))| if hi == lo { 0.5 } else { (v - lo) / (hi - lo) })
            .collect::<Vec<f64>>()
    };
    for ev in &background {
        track(&ev.features, &mut ranges);
        pipeline.process_event(ev).unwrap();
    }

    let mut bmu_counts: BTreeMap<GridCoord, u64> = BTreeMap::new();
    for i in 0..50 {
        let attack = tissue::RawEvent {
            ts: 2000 + i,
            source: "attacker".to_string(),
            features: vec![5.0, 5.0],
            raw: None,
            label: Some("anomaly".to_string()),
        };
        let x = track(&attack.features, &mut ranges);
        let (bmu, _) = pipeline.map().find_bmu(&fv(x)).unwrap();
        *bmu_counts.entry(bmu).or_default() += 1;
        pipeline.process_event(&attack).unwrap();
    }
    let modal = *bmu_counts.iter().max_by_key(|(_, n)| **n).unwrap().0;

    let mut argmax = GridCoord::new(0, 0);
    let mut best = f64::NEG_INFINITY;
    for row in 0..20 {
        for col in 0..20 {
            let level = pipeline.field().level_at(GridCoord::new(row, col));
            if level > best {
                best = level;
                argmax = GridCoord::new(row, col);
            }
        }
    }
    let chebyshev = argmax.row.abs_diff(modal.row).max(argmax.col.abs_diff(modal.col));
    assert!(
        chebyshev <= 1,
        "field argmax {argmax} is Chebyshev {chebyshev} from modal BMU {modal}"
    );
    println!(
        "[criterion 6] PASS - decay mass drift {delta:.2e}, argmax {argmax} vs modal BMU {modal} (Chebyshev {chebyshev})"
    );
}

/// Criterion 7: identical (config, seed, input) runs produce byte-identical
/// antigen files, and a save/load split at the stream midpoint reproduces
/// the unbroken run exactly. Exercised through the real CLI binary.
#[test]
fn c7_determinism_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.json");
    let bin = env!("CARGO_BIN_EXE_tissue");
    let path = |name: &str| dir.path().join(name);
    let run = |args: &[&str]| {
        let status = std::process::Command::new(bin)
            .args(args)
            .status()
            .expect("binary runs");
        assert!(status.success(), "tissue {args:?} failed: {status}");
    };

    let events = path("events.jsonl");
    run(&[
        "synth",
        "--config", config.to_str().unwrap(),
        "--n", "10000",
        "--seed", "4242",
        "--out", events.to_str().unwrap(),
    ]);

    for name in ["a", "b"] {
        run(&[
            "run",
            "--config", config.to_str().unwrap(),
            "--input", events.to_str().unwrap(),
            "--out", path(&format!("out_{name}.jsonl")).to_str().unwrap(),
            "--metrics", path(&format!("metrics_{name}.json")).to_str().unwrap(),
        ]);
    }
    let out_a = std::fs::read(path("out_a.jsonl")).unwrap();
    let out_b = std::fs::read(path("out_b.jsonl")).unwrap();
    assert_eq!(out_a, out_b, "two identical runs must be byte-identical");
    assert_eq!(
        std::fs::read(path("metrics_a.json")).unwrap(),
        std::fs::read(path("metrics_b.json")).unwrap()
    );
    assert!(!out_a.is_empty(), "the seeded stream should emit antigens");

    // Split at the midpoint and replay through a snapshot.
    let text = std::fs::read_to_string(&events).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10_000);
    std::fs::write(path("part1.jsonl"), lines[..5000].join("\n") + "\n").unwrap();
    std::fs::write(path("part2.jsonl"), lines[5000..].join("\n") + "\n").unwrap();

    run(&[
        "run",
        "--config", config.to_str().unwrap(),
        "--input", path("part1.jsonl").to_str().unwrap(),
        "--out", path("out_part1.jsonl").to_str().unwrap(),
        "--snapshot-out", path("mid.snapshot.json").to_str().unwrap(),
    ]);
    run(&[
        "run",
        "--config", config.to_str().unwrap(),
        "--input", path("part2.jsonl").to_str().unwrap(),
        "--out", path("out_part2.jsonl").to_str().unwrap(),
        "--metrics", path("metrics_resumed.json").to_str().unwrap(),
        "--snapshot-in", path("mid.snapshot.json").to_str().unwrap(),
    ]);

    let mut stitched = std::fs::read(path("out_part1.jsonl")).unwrap();
    stitched.extend(std::fs::read(path("out_part2.jsonl")).unwrap());
    assert_eq!(stitched, out_a, "snapshot replay must reproduce the unbroken run");
    assert_eq!(
        std::fs::read(path("metrics_resumed.json")).unwrap(),
        std::fs::read(path("metrics_a.json")).unwrap(),
        "resumed metrics must match the unbroken run"
    );
    println!(
        "[criterion 7] PASS - byte-identical reruns and snapshot replay ({} antigen bytes)",
        out_a.len()
    );
}

/// Criterion 8: 10,000-case property suites for novelty monotonicity,
/// train-step contraction and weight-domain closure.
mod c8_property_suite {
    use super::*;
    use proptest::prelude::*;

    const CASES: u32 = 10_000;

    fn gate_strategy() -> impl Strategy<Value = GateConfig> {
        (1e-3..10.0f64, 0.0..=1.0f64).prop_map(|(distance_scale, rarity_weight)| GateConfig {
            distance_scale,
            rarity_weight,
            emit_threshold: 0.5,
            danger_override: 0.9,
            warmup_steps: 0,
        })
    }

    fn schedule_strategy() -> impl Strategy<Value = Schedule> {
        (0.05..=1.0f64, 0.01..=1.0f64, 0.2..=4.0f64, 0.01..=1.0f64, 1.0..=1e4f64).prop_map(
            |(alpha0, alpha_frac, sigma0, sigma_frac, tau)| Schedule {
                alpha0,
                alpha_min: alpha0 * alpha_frac,
                sigma0,
                sigma_min: sigma0 * sigma_frac,
                tau,
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(CASES))]

        #[test]
        fn novelty_monotone_in_distance(
            cfg in gate_strategy(),
            d1 in 0.0..50.0f64,
            d2 in 0.0..50.0f64,
            hits in 0u64..100_000,
        ) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let near = novelty_score(&NoveltyInputs { bmu_distance: lo, bmu_hit_count: hits, steps_since_bmu_hit: None, map_step: 0 }, &cfg);
            let far = novelty_score(&NoveltyInputs { bmu_distance: hi, bmu_hit_count: hits, steps_since_bmu_hit: None, map_step: 0 }, &cfg);
            prop_assert!(near <= far, "near {near} > far {far}");
            prop_assert!((0.0..=1.0).contains(&near) && (0.0..=1.0).contains(&far));
        }

        #[test]
        fn novelty_monotone_in_hit_count(
            cfg in gate_strategy(),
            dist in 0.0..50.0f64,
            h1 in 0u64..100_000,
            h2 in 0u64..100_000,
        ) {
            let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
            let rare = novelty_score(&NoveltyInputs { bmu_distance: dist, bmu_hit_count: lo, steps_since_bmu_hit: None, map_step: 0 }, &cfg);
            let common = novelty_score(&NoveltyInputs { bmu_distance: dist, bmu_hit_count: hi, steps_since_bmu_hit: None, map_step: 0 }, &cfg);
            prop_assert!(rare >= common, "rare {rare} < common {common}");
        }

        #[test]
        fn train_step_contracts_toward_input(
            schedule in schedule_strategy(),
            (width, height) in (1usize..=4, 1usize..=4),
            seed in any::<u64>(),
            multiplier in 0.0..=3.0f64,
            x0 in 0.0..=1.0f64,
            x1 in 0.0..=1.0f64,
        ) {
            let mut map = TissueMap::new(width, height, 2, schedule, seed).unwrap();
            let before: Vec<Vec<f64>> = map.cells().iter().map(|c| c.weights.clone()).collect();
            let x = FeatureVector::new(vec![x0, x1]).unwrap();
            map.train_step(&x, multiplier).unwrap();
            for (cell, old) in map.cells().iter().zip(&before) {
                for ((w_new, w_old), xi) in cell.weights.iter().zip(old).zip(x.values()) {
                    prop_assert!(
                        (w_new - xi).abs() <= (w_old - xi).abs(),
                        "cell {} moved away from the input: {w_old} -> {w_new} vs {xi}",
                        cell.coord
                    );
                }
            }
        }

        #[test]
        fn train_step_stays_in_unit_domain(
            schedule in schedule_strategy(),
            (width, height) in (1usize..=4, 1usize..=4),
            seed in any::<u64>(),
            multiplier in 0.0..=3.0f64,
            xs in proptest::collection::vec(0.0..=1.0f64, 3),
        ) {
            let mut map = TissueMap::new(width, height, 3, schedule, seed).unwrap();
            let x = FeatureVector::new(xs).unwrap();
            map.train_step(&x, multiplier).unwrap();
            for cell in map.cells() {
                for w in &cell.weights {
                    prop_assert!((0.0..=1.0).contains(w), "weight {w} escaped [0,1]");
                }
            }
        }
    }

}
