//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured numbers (run with `--nocapture` to see
//! them). Tolerances are fixed here, not tuned at runtime.

use std::time::Instant;
use trackpost::candidates::DEFAULT_CANDIDATES;
use trackpost::eval::{
    self, attribute_report, norm_precision_curve, precision_curve, success_curve, SequenceSummary,
    SubsetSpec,
};
use trackpost::geometry::{giou, iou, nms, BBox, ScoredBox};
use trackpost::kalman::{self, FilterConfig};
use trackpost::losses;
use trackpost::mbpp::{self, MbppConfig};
use trackpost::pairgen::{
    self, augment, AppliedOp, AugmentationConfig, DetectionRecord, Domain, Raster, SamplerConfig,
};
use trackpost::simulator::{self, SceneConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pass(criterion: u32, detail: String) {
    println!("[criterion {criterion}] PASS: {detail}");
}

/// Quarter-pixel lattice boxes: every intermediate product in the overlap
/// arithmetic stays exactly representable, so two correct formulas must
/// agree bitwise.
fn lattice_box(rng: &mut ChaCha8Rng) -> BBox {
    let q = |r: &mut ChaCha8Rng, lo: i32, hi: i32| r.random_range(lo..=hi) as f64 / 4.0;
    BBox::new(
        q(rng, -400, 400),
        q(rng, -400, 400),
        q(rng, 0, 240),
        q(rng, 0, 240),
    )
}

/// IoU recomputed without the origin shift used by the implementation.
fn iou_oracle(a: &BBox, b: &BBox) -> f64 {
    if a.w * a.h == 0.0 || b.w * b.h == 0.0 {
        return 0.0;
    }
    let ix = ((a.x + a.w).min(b.x + b.w) - a.x.max(b.x)).max(0.0);
    let iy = ((a.y + a.h).min(b.y + b.h) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    let union = a.w * a.h + b.w * b.h - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn giou_oracle(a: &BBox, b: &BBox) -> f64 {
    if a.w * a.h == 0.0 || b.w * b.h == 0.0 {
        return 0.0;
    }
    let ix = ((a.x + a.w).min(b.x + b.w) - a.x.max(b.x)).max(0.0);
    let iy = ((a.y + a.h).min(b.y + b.h) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    let union = a.w * a.h + b.w * b.h - inter;
    let hull =
        ((a.x + a.w).max(b.x + b.w) - a.x.min(b.x)) * ((a.y + a.h).max(b.y + b.h) - a.y.min(b.y));
    if union <= 0.0 || hull <= 0.0 {
        0.0
    } else {
        inter / union - (hull - union) / hull
    }
}

/// Greedy NMS by repeated scan-for-max over the remaining set.
fn nms_oracle(input: &[ScoredBox], threshold: f64) -> Vec<ScoredBox> {
    let mut remaining: Vec<usize> = (0..input.len()).collect();
    let mut kept = Vec::new();
    while !remaining.is_empty() {
        let mut best = remaining[0];
        for &i in &remaining {
            if input[i].score > input[best].score {
                best = i;
            }
        }
        kept.push(input[best]);
        remaining.retain(|&i| i != best && iou(&input[i].bbox, &input[best].bbox) < threshold);
    }
    kept
}

#[test]
fn criterion_1_geometry_oracle_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let instances = 10_000usize;
    let mut pair_checks = 0u64;
    let mut nms_checks = 0u64;

    for instance in 0..instances {
        let n = rng.random_range(0..=200usize);
        let boxes: Vec<ScoredBox> = (0..n)
            .map(|_| {
                let score = rng.random_range(0..=1000u32) as f64 / 1000.0;
                ScoredBox::new(lattice_box(&mut rng), score)
            })
            .collect();

        // pairwise overlap measures, exact equality against the oracles
        for i in 0..n.min(24) {
            for j in 0..n {
                let (a, b) = (&boxes[i].bbox, &boxes[j].bbox);
                assert_eq!(iou(a, b), iou_oracle(a, b), "instance {instance} iou");
                assert_eq!(giou(a, b), giou_oracle(a, b), "instance {instance} giou");
                pair_checks += 1;
            }
        }

        let threshold = rng.random_range(0..=100u32) as f64 / 100.0;
        let got = nms(&boxes, threshold);
        let want = nms_oracle(&boxes, threshold);
        assert_eq!(got, want, "instance {instance} nms threshold {threshold}");
        nms_checks += 1;
    }

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "oracle suite took {elapsed:?}, budget 30 s"
    );
    pass(
        1,
        format!(
            "{instances} instances, {pair_checks} overlap pairs, {nms_checks} NMS runs, exact equality in {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_2_kalman_convergence_and_psd() {
    // noiseless constant-velocity trajectory, Q = 0, R = 1e-4 I
    let cfg = FilterConfig::from_diagonals(
        [0.0; 7],
        [1e-4; 4],
        [10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4],
    )
    .unwrap();
    let truth = |k: u64| BBox::new(10.0 + 2.0 * k as f64, 20.0 - 1.0 * k as f64, 16.0, 24.0);

    let mut state = kalman::init(&truth(0), &cfg).unwrap();
    let mut final_error = f64::NAN;
    for k in 1..=10u64 {
        let pred = kalman::predict(&state, &cfg);
        let (pcx, pcy) = pred.estimation_box.center();
        let (tcx, tcy) = truth(k).center();
        final_error = ((pcx - tcx).powi(2) + (pcy - tcy).powi(2)).sqrt();
        state = kalman::update(&pred.state, &truth(k), &cfg).unwrap();
    }
    assert!(
        final_error < 1e-3,
        "one-step prediction error {final_error} at frame 10"
    );

    // covariance health across 1000 randomized update cycles
    let cfg = FilterConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut state = kalman::init(&BBox::new(50.0, 50.0, 30.0, 30.0), &cfg).unwrap();
    let mut worst_eig = f64::INFINITY;
    let mut worst_asym = 0.0f64;
    for _ in 0..1000 {
        let pred = kalman::predict(&state, &cfg);
        let meas = BBox::new(
            rng.random_range(0.0..400.0),
            rng.random_range(0.0..400.0),
            rng.random_range(5.0..80.0),
            rng.random_range(5.0..80.0),
        );
        state = kalman::update(&pred.state, &meas, &cfg).unwrap();
        for p in [pred.state.covariance(), state.covariance()] {
            let asym = (p - p.transpose()).abs().max();
            worst_asym = worst_asym.max(asym);
            let min_eig = p
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            worst_eig = worst_eig.min(min_eig);
        }
    }
    assert!(worst_eig >= -1e-8, "min covariance eigenvalue {worst_eig}");
    assert!(worst_asym < 1e-8, "covariance asymmetry {worst_asym}");
    pass(
        2,
        format!(
            "frame-10 prediction error {final_error:.2e} px; min eigenvalue {worst_eig:.2e}, max asymmetry {worst_asym:.2e} over 1000 cycles"
        ),
    );
}

#[test]
fn criterion_3_dbpp_equivalence_without_distractors() {
    for seed in 0..20u64 {
        let config = SceneConfig {
            num_distractors: 0,
            swap_events: Vec::new(),
            seed,
            ..SceneConfig::default()
        };
        let seq = simulator::generate(&config).unwrap();
        let dbpp = simulator::dbpp_trajectory(seq.init_box(), &seq.stream);
        let (mbpp_traj, diags) = mbpp::run_sequence(
            &seq.stream,
            seq.init_box(),
            MbppConfig::default(),
            FilterConfig::default(),
        )
        .unwrap();

        assert!(
            diags.iter().all(|d| !d.drift_detected),
            "seed {seed}: drift triggered on a clean scene"
        );
        assert_eq!(mbpp_traj, dbpp, "seed {seed}: trajectories differ");

        // byte-identical trajectory files
        let mut a = Vec::new();
        let mut b = Vec::new();
        trackpost::stream::write_trajectory(&mut a, &mbpp_traj).unwrap();
        trackpost::stream::write_trajectory(&mut b, &dbpp).unwrap();
        assert_eq!(a, b, "seed {seed}: trajectory bytes differ");
    }
    pass(3, "20 clean scenes: MBPP byte-identical to DBPP".into());
}

#[test]
fn criterion_4_drift_correction_gain() {
    let start = Instant::now();
    let seeds = 50u64;
    let mut mbpp_aucs = Vec::new();
    let mut dbpp_aucs = Vec::new();
    let mut held_through_swap = 0usize;

    for seed in 0..seeds {
        let config = SceneConfig {
            seed,
            ..SceneConfig::default()
        };
        let seq = simulator::generate(&config).unwrap();
        let gt = &seq.ground_truth;

        let dbpp = simulator::dbpp_trajectory(seq.init_box(), &seq.stream);
        let (mbpp_traj, _) = mbpp::run_sequence(
            &seq.stream,
            seq.init_box(),
            MbppConfig::default(),
            FilterConfig::default(),
        )
        .unwrap();

        dbpp_aucs.push(success_curve(&dbpp, gt).unwrap().summary);
        mbpp_aucs.push(success_curve(&mbpp_traj, gt).unwrap().summary);

        let held = config.swap_events.iter().all(|event| {
            (event.start..event.start + event.duration)
                .all(|frame| iou(&mbpp_traj[frame], &gt[frame]) > 0.3)
        });
        if held {
            held_through_swap += 1;
        }
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mbpp_mean = mean(&mbpp_aucs);
    let dbpp_mean = mean(&dbpp_aucs);
    let gain_points = (mbpp_mean - dbpp_mean) * 100.0;
    let held_fraction = held_through_swap as f64 / seeds as f64;
    let elapsed = start.elapsed();

    assert!(
        gain_points >= 3.0,
        "mean AUC gain {gain_points:.2} points below 3.0 (mbpp {mbpp_mean:.4}, dbpp {dbpp_mean:.4})"
    );
    assert!(
        held_fraction >= 0.80,
        "overlap held through swap in only {held_fraction:.2} of runs"
    );
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}, budget 2 min");
    pass(
        4,
        format!(
            "AUC {:.2} vs {:.2} points (gain {gain_points:.2}), swap overlap held in {:.0}% of {seeds} runs, {elapsed:?}",
            mbpp_mean * 100.0,
            dbpp_mean * 100.0,
            held_fraction * 100.0
        ),
    );
}

#[test]
fn criterion_5_step_latency_budget() {
    // 10,000 frames of 40-candidate observations
    let config = SceneConfig {
        num_frames: 10_001,
        num_candidates: DEFAULT_CANDIDATES,
        swap_events: vec![],
        seed: 5,
        ..SceneConfig::default()
    };
    let seq = simulator::generate(&config).unwrap();
    assert_eq!(seq.stream.len(), 10_000);
    assert!(seq.stream.iter().all(|o| o.candidates.len() <= 40));

    let mut session = mbpp::start(
        seq.init_box(),
        MbppConfig::default(),
        FilterConfig::default(),
    )
    .unwrap();

    let start = Instant::now();
    for obs in &seq.stream {
        let (bbox, _) = session.step(obs).unwrap();
        std::hint::black_box(bbox);
    }
    let elapsed = start.elapsed();
    let per_step_ms = elapsed.as_secs_f64() * 1000.0 / seq.stream.len() as f64;

    assert!(
        per_step_ms < 1.0,
        "step averaged {per_step_ms:.4} ms over 10,000 frames"
    );
    pass(
        5,
        format!("step averaged {per_step_ms:.4} ms over 10,000 forty-candidate frames"),
    );
}

#[test]
fn criterion_6_metric_fidelity() {
    // 5-frame fixture; gt fixed at (0,0,10,10)
    let gt = vec![BBox::new(0.0, 0.0, 10.0, 10.0); 5];
    let traj = vec![
        BBox::new(0.0, 0.0, 10.0, 10.0),  // overlap 1,    err 0,   norm 0
        BBox::new(5.0, 0.0, 10.0, 10.0),  // overlap 1/3,  err 5,   norm 0.5
        BBox::new(0.0, 2.5, 10.0, 10.0),  // overlap 0.6,  err 2.5, norm 0.25
        BBox::new(30.0, 40.0, 10.0, 10.0), // overlap 0,   err 50,  norm 5
        BBox::new(0.0, 0.0, 5.0, 10.0),   // overlap 0.5,  err 2.5, norm 0.25
    ];

    // success: hand-derived per-threshold pass counts over the grid
    // t = 0.00..0.33 -> 4 of 5, 0.34..0.49 -> 3, 0.50..0.59 -> 2,
    // 0.60..0.99 -> 1, 1.00 -> 0
    let mut expected_values = Vec::new();
    for i in 0..=100u32 {
        let count = match i {
            0..=33 => 4.0,
            34..=49 => 3.0,
            50..=59 => 2.0,
            60..=99 => 1.0,
            _ => 0.0,
        };
        expected_values.push(count / 5.0);
    }
    let expected_auc = expected_values.iter().sum::<f64>() / expected_values.len() as f64;
    let success = success_curve(&traj, &gt).unwrap();
    assert_eq!(success.values, expected_values, "success curve values");
    assert_eq!(success.summary, expected_auc, "success AUC");

    // precision at 20 px: errors {0, 5, 2.5, 50, 2.5} -> 4 of 5
    let precision = precision_curve(&traj, &gt).unwrap();
    assert_eq!(precision.summary, 4.0 / 5.0, "precision at 20 px");

    // norm precision: errors {0, 0.5, 0.25, 5, 0.25};
    // grid index 0 -> 1 of 5, 1..=49 -> 1, 50..=99 -> 3, 100 -> 4
    let mut expected_np = Vec::new();
    for i in 0..=100u32 {
        let count = match i {
            0..=49 => 1.0,
            50..=99 => 3.0,
            _ => 4.0,
        };
        expected_np.push(count / 5.0);
    }
    let expected_pnorm = expected_np.iter().sum::<f64>() / expected_np.len() as f64;
    let (norm, skipped) = norm_precision_curve(&traj, &gt).unwrap();
    assert_eq!(skipped, 0);
    assert_eq!(norm.values, expected_np, "norm precision curve values");
    assert_eq!(norm.summary, expected_pnorm, "P-Norm");

    // subset + complement reconstruct the global mean within 1e-9
    let results: Vec<SequenceSummary> = (0..13)
        .map(|i| SequenceSummary {
            name: format!("seq{i}"),
            frames: 50,
            auc: 0.05 * i as f64 + 0.11,
            precision: 0.03 * i as f64 + 0.2,
            norm_precision: 0.04 * i as f64 + 0.15,
        })
        .collect();
    let subsets = vec![SubsetSpec {
        name: "a".into(),
        sequences: vec!["seq0".into(), "seq3".into(), "seq4".into(), "seq9".into()],
    }];
    let report = attribute_report(&results, &subsets).unwrap();
    let row = &report.subsets[0];
    let n_in = row.sequences as f64;
    let n_out = row.complement_sequences as f64;
    for (inside, outside, global) in [
        (row.mean.auc, row.complement_mean.auc, report.global.auc),
        (
            row.mean.precision,
            row.complement_mean.precision,
            report.global.precision,
        ),
        (
            row.mean.norm_precision,
            row.complement_mean.norm_precision,
            report.global.norm_precision,
        ),
    ] {
        let combined = (inside * n_in + outside * n_out) / (n_in + n_out);
        assert!(
            (combined - global).abs() < 1e-9,
            "weighted reconstruction off by {}",
            (combined - global).abs()
        );
    }

    // the bundled similar-object subset parses to exactly 28 names
    let bundled = eval::uot100_similar_subsets();
    assert_eq!(bundled[0].sequences.len(), 28);

    pass(
        6,
        format!(
            "5-frame fixture exact (AUC {:.6}, P {:.2}, P-Norm {:.6}); subset reconstruction < 1e-9; 28 bundled names",
            success.summary, precision.summary, norm.summary
        ),
    );
}

#[test]
fn criterion_7_pairgen_statistics() {
    // empirical op frequencies over 100,000 seeded draws
    let raster = {
        let mut data = Vec::new();
        for i in 0..16 * 16 {
            data.extend_from_slice(&[(i % 256) as u8, (i * 3 % 256) as u8, (i * 7 % 256) as u8]);
        }
        Raster::new(16, 16, data).unwrap()
    };
    let bbox = BBox::new(4.0, 4.0, 8.0, 8.0);
    let config = AugmentationConfig::default();
    let trials = 100_000u64;
    let mut counts = [0u64; 5];
    let mut angle_range = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..trials {
        let (_, _, ops) = augment(&raster, &bbox, &config, seed).unwrap();
        for op in ops {
            match op {
                AppliedOp::Grayscale => counts[0] += 1,
                AppliedOp::Hflip => counts[1] += 1,
                AppliedOp::Noise => counts[2] += 1,
                AppliedOp::Blur => counts[3] += 1,
                AppliedOp::Rotate(angle) => {
                    counts[4] += 1;
                    angle_range.0 = angle_range.0.min(angle);
                    angle_range.1 = angle_range.1.max(angle);
                }
            }
        }
    }
    let expected = [0.10, 0.15, 0.05, 0.05, 0.05];
    let mut freqs = [0.0f64; 5];
    for (i, (&count, &p)) in counts.iter().zip(&expected).enumerate() {
        freqs[i] = count as f64 / trials as f64;
        assert!(
            (freqs[i] - p).abs() <= 0.02,
            "op {i}: frequency {:.4} outside {p} +/- 0.02",
            freqs[i]
        );
    }
    assert!(
        angle_range.0 >= 0.0 && angle_range.1 <= 10.0,
        "rotation angles [{:.3}, {:.3}] outside [0, 10]",
        angle_range.0,
        angle_range.1
    );

    // default six-dataset scheduler: open-air to underwater within 5% of 2:1
    let record = |dataset: &str, domain: Domain| DetectionRecord {
        image: format!("{dataset}.png").into(),
        boxes: vec![BBox::new(10.0, 10.0, 30.0, 30.0)],
        domain,
        dataset: dataset.into(),
    };
    let records = vec![
        record("lasot", Domain::OpenAir),
        record("got10k", Domain::OpenAir),
        record("trackingnet", Domain::OpenAir),
        record("coco", Domain::OpenAir),
        record("ruod", Domain::Underwater),
        record("fishextend", Domain::Underwater),
    ];
    let manifest = pairgen::sample_epoch(&records, &SamplerConfig::default(), 0xC7).unwrap();
    let under = manifest
        .iter()
        .filter(|s| matches!(s.dataset.as_str(), "ruod" | "fishextend"))
        .count();
    let open = manifest.len() - under;
    let ratio = open as f64 / under as f64;
    assert!(
        (ratio - 2.0).abs() <= 0.1,
        "open-air:underwater ratio {ratio:.3} outside 2.0 +/- 5%"
    );

    // every manifest entry regenerates byte-identically from its seed
    let image = {
        let mut data = Vec::new();
        for row in 0..240u32 {
            for col in 0..320u32 {
                data.extend_from_slice(&[(col % 256) as u8, (row % 256) as u8, 80]);
            }
        }
        Raster::new(320, 240, data).unwrap()
    };
    let sampler = SamplerConfig {
        epoch_size: 40,
        ..SamplerConfig::default()
    };
    let specs = pairgen::sample_epoch(&records, &sampler, 99).unwrap();
    for spec in &specs {
        let target = records
            .iter()
            .find(|r| r.dataset == spec.dataset)
            .map(|r| r.boxes[spec.box_index])
            .unwrap();
        let a = pairgen::generate_pair(&image, &target, &config, spec.seed).unwrap();
        let b = pairgen::generate_pair(&image, &target, &config, spec.seed).unwrap();
        assert_eq!(a.template.data(), b.template.data(), "template bytes");
        assert_eq!(a.search.data(), b.search.data(), "search bytes");
        assert_eq!(a.search_box, b.search_box);
        assert_eq!(a.applied_ops, b.applied_ops);
    }

    pass(
        7,
        format!(
            "frequencies {:.3?} vs {expected:.3?}; angles in [{:.3}, {:.3}]; ratio {ratio:.3}; {} pairs regenerated byte-identically",
            freqs, angle_range.0, angle_range.1, specs.len()
        ),
    );
}

#[test]
fn criterion_8_loss_checks() {
    let total = losses::total_loss(1.0, 0.5, 0.2);
    assert_eq!(total, 3.0, "total loss weights");

    let disjoint = losses::giou_loss(
        &BBox::new(0.0, 0.0, 1.0, 1.0),
        &BBox::new(2.0, 0.0, 1.0, 1.0),
    );
    assert!(
        (disjoint - 4.0 / 3.0).abs() < 1e-9,
        "disjoint giou loss {disjoint}"
    );

    let mut pred = vec![losses::PROB_EPSILON; 25];
    pred[12] = 1.0 - losses::PROB_EPSILON;
    let mut target = vec![0.0; 25];
    target[12] = 1.0;
    let map = losses::ScoreMap::new(5, 5, pred, target).unwrap();
    let focal = losses::focal_loss(&map, losses::DEFAULT_ALPHA, losses::DEFAULT_BETA);
    assert!(focal < 1e-6, "perfect-prediction focal loss {focal}");

    pass(
        8,
        format!("total_loss = {total}; giou_loss(disjoint) = {disjoint:.9}; focal(perfect) = {focal:.2e}"),
    );
}
