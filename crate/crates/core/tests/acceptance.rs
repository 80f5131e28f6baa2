//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Properties are checked exactly or at pinned tolerances; the scaled
//! experiments assert direction (and minimum margins) of the replay
//! strategies on synthetic corpora across seeds.

use itas_core::config::RunConfig;
use itas_core::data::{
    make_synthetic_corpus, split_blurry, ClassId, LabelSpace, SegmentLabeling, SyntheticSpec,
    TaskDataset,
};
use itas_core::metrics::{edit_score_sequences, f1_at, segment_match_raw};
use itas_core::numeric::RandomSource;
use itas_core::pipeline::{execute_gradcheck, execute_run, GradCheckTarget};
use itas_core::replay::{build_pool, build_replay_set, GenMode, SequencePool};
use itas_core::seg::TasLossConfig;
use itas_core::tca::{coherence, kl_standard_normal, train_tca, TcaModel};
use itas_core::trainer::{run, IncrementalRun, SegTrainConfig, Strategy, TcaTrainConfig};
use itas_core::Real;
use std::collections::BTreeMap;

fn pass(n: u32, name: &str) {
    println!("[acceptance] criterion {n} ({name}): PASS");
}

// ---------------------------------------------------------------------------
// 1. Gradient suite
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_gradient_suite() {
    let start = std::time::Instant::now();
    for seed in 0..20u64 {
        let seg = execute_gradcheck(GradCheckTarget::Seg, seed).unwrap();
        assert!(seg.passed(), "seg seed {seed}: {}", seg.summary());
        let tca = execute_gradcheck(GradCheckTarget::Tca, seed).unwrap();
        assert!(tca.passed(), "tca seed {seed}: {}", tca.summary());
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "gradient suite took {elapsed:?}");
    pass(1, "gradient suite, 20 seeds");
}

// ---------------------------------------------------------------------------
// 2. Analytic KL vs Monte Carlo
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_analytic_kl() {
    let mut rng = RandomSource::new(202);
    let samples = 100_000;
    for case in 0..50 {
        let dim = 8;
        let mu: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        let sigma: Vec<f64> = (0..dim).map(|_| rng.uniform_in(0.3, 2.5)).collect();
        let closed = kl_standard_normal(&mu, &sigma);
        let mut acc = 0.0;
        for _ in 0..samples {
            let mut diff = 0.0;
            for j in 0..dim {
                let e: f64 = rng.normal();
                let z = mu[j] + sigma[j] * e;
                // log q(z) − log p(z), constants cancel.
                diff += -0.5 * e * e - sigma[j].ln() + 0.5 * z * z;
            }
            acc += diff;
        }
        let mc = acc / samples as f64;
        let tol = 0.02 * closed.abs().max(0.05);
        assert!(
            (mc - closed).abs() <= tol,
            "case {case}: closed {closed} vs mc {mc} (tol {tol})"
        );
    }
    pass(2, "closed-form KL within 2% of Monte Carlo");
}

// ---------------------------------------------------------------------------
// 3. Metric oracles
// ---------------------------------------------------------------------------

/// Independent Levenshtein oracle: memoized recursion over suffixes.
fn levenshtein_oracle(a: &[ClassId], b: &[ClassId]) -> usize {
    fn go(a: &[ClassId], b: &[ClassId], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a, b, 0, 0, &mut memo)
}

fn random_sequence(rng: &mut RandomSource, max_len: usize, classes: usize) -> Vec<ClassId> {
    let len = rng.range_inclusive(0, max_len);
    (0..len).map(|_| rng.below(classes)).collect()
}

fn random_labeling(rng: &mut RandomSource, frames: usize, classes: usize) -> SegmentLabeling {
    let framewise: Vec<ClassId> = (0..frames).map(|_| rng.below(classes)).collect();
    SegmentLabeling::from_framewise(framewise).unwrap()
}

#[test]
fn criterion_03_metric_oracles() {
    let mut rng = RandomSource::new(303);

    // Edit score equals the independent DP oracle on 1000 random pairs.
    for _ in 0..1000 {
        let a = random_sequence(&mut rng, 12, 5);
        let b = random_sequence(&mut rng, 12, 5);
        let dist = levenshtein_oracle(&a, &b);
        let denom = a.len().max(b.len());
        let expect = if denom == 0 { 100.0 } else { 100.0 * (1.0 - dist as f64 / denom as f64) };
        assert_eq!(edit_score_sequences(&a, &b), expect, "a={a:?} b={b:?}");
    }

    // F1 monotonicity over random labeling pairs.
    for _ in 0..1000 {
        let frames = rng.range_inclusive(4, 50);
        let gt = random_labeling(&mut rng, frames, 4);
        let pred = random_labeling(&mut rng, frames, 4);
        let f10 = f1_at(&pred, &gt, 0.10).unwrap().0;
        let f25 = f1_at(&pred, &gt, 0.25).unwrap().0;
        let f50 = f1_at(&pred, &gt, 0.50).unwrap().0;
        assert!(f50 <= f25 && f25 <= f10, "f1 not monotone: {f10} {f25} {f50}");
    }

    // Hand-computed cases.
    let edit = edit_score_sequences(&[0, 1, 2, 3], &[0, 1, 2, 4]);
    assert!((edit - 75.0).abs() < 0.1, "edit {edit}");

    use itas_core::data::Segment;
    let gt = [Segment { action: 0, start: 0, len: 10 }];
    let pred = [
        Segment { action: 0, start: 0, len: 5 },
        Segment { action: 0, start: 5, len: 5 },
    ];
    let m = segment_match_raw(&pred, &gt, 0.25).unwrap();
    assert!((m.f1() - 66.7).abs() < 0.1, "over-segmentation f1 {}", m.f1());

    pass(3, "edit/F1 oracles and hand cases");
}

// ---------------------------------------------------------------------------
// 4. Replay structure property
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_replay_structure() {
    // Nine previous tasks with tiny untrained decoders; structure properties
    // do not depend on training.
    let spec = SyntheticSpec {
        tasks: 9,
        actions_per_task: 3,
        shared_actions: 0,
        videos_per_task: 4,
        feature_dim: 4,
        segments_per_video: (2, 3),
        segment_len: (2, 5),
        noise_sigma: 0.1,
        drift_scale: 1.0,
        base_scale: 2.0,
    };
    let corpus = make_synthetic_corpus::<Real>(&spec, &mut RandomSource::new(404)).unwrap();
    let num_classes = corpus.space.num_classes();

    for b in 2..=10usize {
        let prev = b - 1;
        let decoders: BTreeMap<usize, TcaModel<Real>> = (1..=prev)
            .map(|p| {
                let mut rng = RandomSource::new(500 + p as u64);
                (p, TcaModel::new(4, num_classes, 2, 4, &mut rng))
            })
            .collect();
        let pools: BTreeMap<usize, SequencePool> = (1..=prev)
            .map(|p| {
                let pool = build_pool(&corpus.datasets[p - 1]).unwrap();
                (p, SequencePool::from_text(p, &pool.to_text()).unwrap())
            })
            .collect();
        for budget in [30usize, 60, 90, 120] {
            let rng = RandomSource::new(600 + (b * 1000 + budget) as u64);
            let set =
                build_replay_set(&decoders, &pools, budget, GenMode::Coherent, &rng).unwrap();
            assert_eq!(set.len(), budget, "b={b} M={budget}");
            for video in &set {
                video.labels.check_invariants().unwrap();
                assert_eq!(video.labels.frames(), video.features.frames());
                let source = &corpus.datasets[video.provenance.source_task - 1];
                for &c in video.labels.framewise() {
                    assert!(source.classes.contains(&c), "class {c} outside source task");
                }
            }
        }
    }
    pass(4, "replay budget exactness and label validity over (M, b) grid");
}

// ---------------------------------------------------------------------------
// 5. Coherence property of a trained TCA
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_coherence_property() {
    for seed in [1u64, 2, 3, 4, 5] {
        let spec = SyntheticSpec {
            tasks: 1,
            actions_per_task: 4,
            shared_actions: 0,
            videos_per_task: 10,
            feature_dim: 8,
            segments_per_video: (4, 6),
            segment_len: (20, 40),
            noise_sigma: 0.0,
            drift_scale: 2.0,
            base_scale: 5.0,
        };
        let corpus =
            make_synthetic_corpus::<Real>(&spec, &mut RandomSource::new(900 + seed)).unwrap();
        let task = &corpus.datasets[0];
        let num_classes = corpus.space.num_classes();

        let mut model = TcaModel::<Real>::new(
            spec.feature_dim,
            num_classes,
            8,
            64,
            &mut RandomSource::new(1000 + seed),
        );
        train_tca(&mut model, task, 1.0, 200, 1e-3, 1.0, &mut RandomSource::new(1100 + seed))
            .unwrap();

        // Endpoint recovery at the prior mean latent.
        let z0 = vec![0.0; model.latent_dim()];
        for ds_class in &task.classes {
            let name = corpus.space.raw_name(*ds_class);
            let basis = &corpus.bases[name];
            let drift_norm =
                basis.drift.iter().map(|v| v * v).sum::<f64>().sqrt();
            let start = model.decode(&z0, *ds_class, coherence(1, 2).unwrap()).unwrap();
            let end = model.decode(&z0, *ds_class, coherence(2, 2).unwrap()).unwrap();
            let d_start: f64 = start
                .iter()
                .zip(&basis.mean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let d_end: f64 = end
                .iter()
                .zip(basis.mean.iter().zip(&basis.drift).map(|(m, d)| m + d))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(
                d_start <= 0.1 * drift_norm,
                "seed {seed} class {ds_class}: start error {d_start:.4} vs |d| {drift_norm:.4}"
            );
            assert!(
                d_end <= 0.1 * drift_norm,
                "seed {seed} class {ds_class}: end error {d_end:.4} vs |d| {drift_norm:.4}"
            );
        }

        // Coherent segments step more gently than random segments.
        let mut gen_rng = RandomSource::new(1200 + seed);
        let mut mean_dist = |mode: GenMode| -> f64 {
            let mut total = 0.0;
            let mut count = 0usize;
            for i in 0..20 {
                let action = task.classes[i % task.classes.len()];
                let len = 20 + (i % 21);
                let block = itas_core::replay::generate_segment(
                    &model, action, len, mode, &mut gen_rng,
                )
                .unwrap();
                for t in 0..len - 1 {
                    let d: f64 = block
                        .row(t)
                        .iter()
                        .zip(block.row(t + 1))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    total += d;
                    count += 1;
                }
            }
            total / count as f64
        };
        let coherent = mean_dist(GenMode::Coherent);
        let random = mean_dist(GenMode::Random);
        assert!(
            coherent < random,
            "seed {seed}: coherent step {coherent:.4} !< random step {random:.4}"
        );
        println!(
            "[acceptance] c5 seed {seed}: coherent {coherent:.4} < random {random:.4}"
        );
    }
    pass(5, "trained TCA coherence and endpoint recovery, 5 seeds");
}

// ---------------------------------------------------------------------------
// Scaled end-to-end experiments (criteria 6–9)
// ---------------------------------------------------------------------------

fn scaled_spec(shared_actions: usize) -> SyntheticSpec {
    SyntheticSpec {
        tasks: 5,
        actions_per_task: 4,
        shared_actions,
        videos_per_task: 25,
        feature_dim: 16,
        segments_per_video: (4, 8),
        segment_len: (10, 30),
        noise_sigma: 0.4,
        drift_scale: 6.0,
        base_scale: 3.0,
    }
}

fn scaled_corpus(seed: u64, shared: usize) -> (Vec<TaskDataset<Real>>, LabelSpace) {
    let corpus =
        make_synthetic_corpus::<Real>(&scaled_spec(shared), &mut RandomSource::new(7000 + seed))
            .unwrap();
    (corpus.datasets, corpus.space)
}

fn scaled_run(
    datasets: &[TaskDataset<Real>],
    space: &LabelSpace,
    strategy: Strategy,
    budget: usize,
    seed: u64,
) -> f64 {
    let mut order_rng = RandomSource::new(seed).substream("task_order");
    let mut task_order: Vec<usize> = (0..datasets.len()).collect();
    order_rng.shuffle(&mut task_order);
    let cfg = IncrementalRun {
        strategy,
        task_order,
        replay_budget: budget,
        seg: SegTrainConfig {
            channels: 32,
            layers: 3,
            epochs: 15,
            lr: 1e-3,
            loss: TasLossConfig::default(),
        },
        tca: TcaTrainConfig {
            latent: 16,
            hidden: 64,
            epochs: 60,
            lr: 1e-3,
            beta: 1.0,
            ratio: 1.0,
        },
        seed,
    };
    let outcome = run(&cfg, datasets, space).unwrap();
    if !matches!(strategy, Strategy::Original) {
        assert!(outcome.audit.violations().is_empty(), "CIL access violation");
    }
    outcome.history.final_aggregate().unwrap().acc
}

const SCALED_SEEDS: [u64; 3] = [11, 22, 33];

#[test]
fn criterion_06_forgetting_mitigation_and_07_ablation() {
    let mut tca_minus_finetune = Vec::new();
    for seed in SCALED_SEEDS {
        let (datasets, space) = scaled_corpus(seed, 0);
        let finetune = scaled_run(&datasets, &space, Strategy::Finetune, 20, seed);
        let exemplar = scaled_run(&datasets, &space, Strategy::Exemplar, 20, seed);
        let coherent = scaled_run(&datasets, &space, Strategy::Tca(GenMode::Coherent), 20, seed);
        let static_ = scaled_run(&datasets, &space, Strategy::Tca(GenMode::Static), 20, seed);
        let random = scaled_run(&datasets, &space, Strategy::Tca(GenMode::Random), 20, seed);
        println!(
            "[acceptance] c6/c7 seed {seed}: finetune {finetune:.1} exemplar {exemplar:.1} \
             coherent {coherent:.1} static {static_:.1} random {random:.1}"
        );
        // Criterion 6: strict ordering and a 15-point margin over finetune.
        assert!(
            coherent > exemplar && exemplar > finetune,
            "seed {seed}: ordering violated (coherent {coherent:.1}, exemplar {exemplar:.1}, \
             finetune {finetune:.1})"
        );
        tca_minus_finetune.push(coherent - finetune);
        // Criterion 7: coherence and diversity both matter.
        assert!(
            coherent > static_,
            "seed {seed}: coherent {coherent:.1} !> static {static_:.1}"
        );
        assert!(
            coherent > random,
            "seed {seed}: coherent {coherent:.1} !> random {random:.1}"
        );
    }
    for (seed, gap) in SCALED_SEEDS.iter().zip(&tca_minus_finetune) {
        assert!(*gap >= 15.0, "seed {seed}: margin {gap:.1} < 15 points");
    }
    pass(6, "coherent > exemplar > finetune with >= 15 point margin, 3 seeds");
    pass(7, "coherent > static and coherent > random, 3 seeds");
}

#[test]
fn criterion_08_replay_size_trend() {
    let budgets = [10usize, 20, 30, 40];
    let mut means = Vec::new();
    for &budget in &budgets {
        let mut acc = 0.0;
        for seed in SCALED_SEEDS {
            let (datasets, space) = scaled_corpus(seed, 0);
            acc += scaled_run(&datasets, &space, Strategy::Tca(GenMode::Coherent), budget, seed);
        }
        means.push(acc / SCALED_SEEDS.len() as f64);
    }
    println!("[acceptance] c8 mean acc per M {budgets:?}: {means:?}");
    assert!(
        means.last().unwrap() >= means.first().unwrap(),
        "acc did not increase from M=10 ({:.1}) to M=40 ({:.1})",
        means[0],
        means[3]
    );
    pass(8, "aggregate Acc rises from M=10 to M=40 (mean of 3 seeds)");
}

#[test]
fn criterion_09_blurry_vs_disjoint() {
    let mut blurry_mean = 0.0;
    let mut disjoint_mean = 0.0;
    for seed in SCALED_SEEDS {
        // 50% shared actions across tasks.
        let corpus =
            make_synthetic_corpus::<Real>(&scaled_spec(2), &mut RandomSource::new(7000 + seed))
                .unwrap();
        let disjoint =
            scaled_run(&corpus.datasets, &corpus.space, Strategy::Tca(GenMode::Coherent), 20, seed);
        let (blurry_sets, blurry_space) = split_blurry(&corpus.datasets, &corpus.space).unwrap();
        let blurry =
            scaled_run(&blurry_sets, &blurry_space, Strategy::Tca(GenMode::Coherent), 20, seed);
        println!("[acceptance] c9 seed {seed}: blurry {blurry:.1} vs disjoint {disjoint:.1}");
        blurry_mean += blurry / SCALED_SEEDS.len() as f64;
        disjoint_mean += disjoint / SCALED_SEEDS.len() as f64;
    }
    assert!(
        blurry_mean >= disjoint_mean,
        "blurry mean {blurry_mean:.1} < disjoint mean {disjoint_mean:.1}"
    );
    pass(9, "blurry aggregate Acc >= disjoint with 50% shared actions");
}

// ---------------------------------------------------------------------------
// 10. Determinism of cmd_run
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_run_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    for (k, v) in [
        ("synth.tasks", "3"),
        ("synth.actions_per_task", "3"),
        ("synth.videos_per_task", "6"),
        ("synth.feature_dim", "8"),
        ("synth.segments_min", "2"),
        ("synth.segments_max", "4"),
        ("synth.len_min", "4"),
        ("synth.len_max", "8"),
        ("run.replay_budget", "4"),
        ("run.seed", "77"),
        ("seg.channels", "12"),
        ("seg.layers", "2"),
        ("seg.epochs", "5"),
        ("tca.latent", "4"),
        ("tca.hidden", "16"),
        ("tca.epochs", "15"),
    ] {
        cfg.set(k, v).unwrap();
    }
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    execute_run(&cfg, &a, false).unwrap();
    execute_run(&cfg, &b, false).unwrap();
    let ha = std::fs::read(a.join("history.tsv")).unwrap();
    let hb = std::fs::read(b.join("history.tsv")).unwrap();
    assert_eq!(ha, hb, "metric histories differ between identical runs");
    assert!(!ha.is_empty());
    pass(10, "identical runs produce byte-identical metric histories");
}
