//! Acceptance gate for the whole pipeline: ten checks covering the LP
//! layer, the statistic contract, sampling fidelity, normalization
//! accuracy, volume calibration, end-to-end fits against brute force,
//! the feasible-region bound, convexity of the normalizer, and binary
//! determinism. Each check prints a single summary line on success.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use logcave_core::oracle::{
    brute_force_mle, exact_partition_1d, finite_difference_grad_a, BruteForceResult,
    PiecewiseLinearLogDensity1D,
};
use logcave_core::{
    build_decomposition, diameter_bound, estimate_log_partition, estimate_volume,
    polyhedral_statistic, tent_evaluate, ConvexBody, MembershipBody, SampleSet, SampleStats,
    SamplerConfig, TentValue, VolumeBackend,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid_cfg(delta: f64, seed: u64) -> SamplerConfig {
    SamplerConfig {
        delta,
        tau: 0.05,
        seed,
        walk_steps: None,
        volume_backend: VolumeBackend::Grid,
    }
}

/// Random 1-d sample set with pairwise gaps, plus heights in [-amp, amp].
fn random_instance_1d(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> (SampleSet, Vec<f64>) {
    let xs = loop {
        let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..=1.5)).collect();
        xs.sort_unstable_by(f64::total_cmp);
        if xs.windows(2).all(|w| w[1] - w[0] > 0.05) {
            break xs;
        }
    };
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-amp..=amp)).collect();
    let xset = SampleSet::new(xs.into_iter().map(|v| vec![v]).collect()).unwrap();
    (xset, y)
}

fn tent_value(xset: &SampleSet, y: &[f64], x: &[f64]) -> f64 {
    match tent_evaluate(xset, y, x).unwrap() {
        TentValue::Value(v) => v,
        TentValue::OutsideHull => panic!("query unexpectedly outside the hull"),
    }
}

#[test]
fn criterion_01_tent_lp_matches_the_envelope_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=8);
        let (xset, y) = random_instance_1d(&mut rng, n, 2.0);
        let xs: Vec<f64> = xset.points().iter().map(|p| p[0]).collect();
        let env = PiecewiseLinearLogDensity1D::upper_envelope(&xs, &y).unwrap();
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        for _ in 0..50 {
            let q = rng.gen_range(lo..=hi);
            let via_lp = tent_value(&xset, &y, &[q]);
            let via_envelope = env.value(q).expect("query is inside the support");
            worst = worst.max((via_lp - via_envelope).abs());
        }
    }
    let elapsed = start.elapsed();
    assert!(worst <= 1e-8, "max |LP - envelope| = {worst:e}");
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "criterion 01: PASS - 200 instances x 50 queries, max |LP - envelope| = {worst:.2e}, {elapsed:.2?}"
    );
}

#[test]
fn criterion_02_polyhedral_statistic_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for trial in 0..200 {
        let d = rng.gen_range(1..=3usize);
        let n = rng.gen_range(d + 1..=d + 5);
        let xset = loop {
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect())
                .collect();
            if let Ok(s) = SampleSet::new(pts) {
                break s;
            }
        };
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        // A strictly interior query: exponential weights over the points.
        let mut w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let x: Vec<f64> = (0..d)
            .map(|j| (0..n).map(|i| w[i] * xset.point(i)[j]).sum())
            .collect();

        let stat = polyhedral_statistic(&xset, &y, &x).unwrap();
        let t = &stat.weights;
        assert!(
            t.iter().all(|&v| v >= -1e-8),
            "trial {trial}: negative weight in {t:?}"
        );
        let mass: f64 = t.iter().sum();
        assert!((mass - 1.0).abs() <= 1e-8, "trial {trial}: mass {mass}");
        for (j, &xj) in x.iter().enumerate() {
            let recon: f64 = (0..n).map(|i| t[i] * xset.point(i)[j]).sum();
            assert!(
                (recon - xj).abs() <= 1e-8,
                "trial {trial}: X T = {recon} vs x_{j} = {xj}"
            );
        }
        let pairing: f64 = (0..n).map(|i| t[i] * y[i]).sum();
        let h = tent_value(&xset, &y, &x);
        assert!(
            (pairing - h).abs() <= 1e-8,
            "trial {trial}: <T, y> = {pairing} vs h(x) = {h}"
        );
    }
    println!(
        "criterion 02: PASS - 200 random (X, y, x) with d <= 3 meet the weight contract at 1e-8"
    );
}

#[test]
fn criterion_03_sampled_statistic_mean_matches_finite_differences() {
    let xset = SampleSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
    let y = [1.0, -1.0];
    let decomp = build_decomposition(&xset, &y, &grid_cfg(0.01, 303)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    const DRAWS: usize = 100_000;
    let mut sum = [0.0_f64; 2];
    let mut sumsq = [0.0_f64; 2];
    for _ in 0..DRAWS {
        let p = decomp.sample(&mut rng).unwrap();
        let t = polyhedral_statistic(&xset, &y, &p).unwrap().weights;
        for i in 0..2 {
            sum[i] += t[i];
            sumsq[i] += t[i] * t[i];
        }
    }
    let fd = finite_difference_grad_a(&xset, &y, 1e-5).unwrap();
    let mut worst_gap = 0.0_f64;
    for i in 0..2 {
        let mean = sum[i] / DRAWS as f64;
        let var = (sumsq[i] / DRAWS as f64 - mean * mean).max(0.0);
        let se = (var / DRAWS as f64).sqrt();
        // T sums to one, so subtracting 1/n projects onto the mean-zero
        // directions the finite-difference oracle works in.
        let centered = mean - 0.5;
        let tol = 3.0 * se + 0.01;
        let gap = (centered - fd[i]).abs();
        worst_gap = worst_gap.max(gap);
        assert!(
            gap <= tol,
            "coordinate {i}: mean-stat {centered} vs fd {} (tol {tol})",
            fd[i]
        );
    }
    println!(
        "criterion 03: PASS - mean statistic over 1e5 draws matches finite differences (worst gap {worst_gap:.2e})"
    );
}

#[test]
fn criterion_04_draws_pass_ks_against_the_exact_cdf() {
    let start = Instant::now();
    let xset = SampleSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
    let y = [1.0, -1.0];
    let decomp = build_decomposition(&xset, &y, &grid_cfg(0.01, 404)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut stats = SampleStats::default();
    const DRAWS: usize = 10_000;
    let mut draws: Vec<f64> = (0..DRAWS)
        .map(|_| decomp.sample_with_stats(&mut rng, &mut stats).unwrap()[0])
        .collect();
    draws.sort_unstable_by(f64::total_cmp);

    let env = PiecewiseLinearLogDensity1D::upper_envelope(&[0.0, 1.0], &y).unwrap();
    let mut d_stat = 0.0_f64;
    for (i, &x) in draws.iter().enumerate() {
        let f = env.cdf(x);
        d_stat = d_stat
            .max(((i + 1) as f64 / DRAWS as f64 - f).abs())
            .max((f - i as f64 / DRAWS as f64).abs());
    }
    let critical = 1.628 / (DRAWS as f64).sqrt();
    let rate = stats.acceptance_rate();
    let elapsed = start.elapsed();
    assert!(d_stat <= critical, "KS D = {d_stat} vs critical {critical}");
    assert!(rate >= 0.45, "acceptance rate {rate}");
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!(
        "criterion 04: PASS - KS D = {d_stat:.4} < {critical:.4} on 1e4 draws, acceptance {rate:.3}, {elapsed:.2?}"
    );
}

#[test]
fn criterion_05_log_partition_estimates_hit_their_band() {
    let start = Instant::now();
    let delta = 0.02_f64;
    let band = (1.0 + 3.0 * delta).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut hits = 0;
    let mut worst = 0.0_f64;
    for trial in 0..20u64 {
        let n = rng.gen_range(2..=5);
        let (xset, y) = random_instance_1d(&mut rng, n, 2.0);
        let exact = exact_partition_1d(&xset, &y).unwrap();
        let cfg = grid_cfg(delta, 5050 + trial);
        let mut est_rng = ChaCha8Rng::seed_from_u64(5050 + trial);
        let (est, _) = estimate_log_partition(&xset, &y, &cfg, &mut est_rng).unwrap();
        let err = (est - exact).abs();
        worst = worst.max(err);
        if err <= band {
            hits += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(hits >= 18, "{hits}/20 within ln(1 + 3 delta)");
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!(
        "criterion 05: PASS - {hits}/20 instances within ln(1.06) (worst |err| {worst:.4}), {elapsed:.2?}"
    );
}

#[test]
fn criterion_06_volume_estimates_calibrate_on_known_bodies() {
    let start = Instant::now();
    fn unit_box(d: usize) -> MembershipBody<impl Fn(&[f64]) -> bool> {
        MembershipBody::new(
            d,
            |x: &[f64]| x.iter().all(|&v| (0.0..=1.0).contains(&v)),
            vec![0.5; d],
            (vec![0.0; d], vec![1.0; d]),
        )
        .unwrap()
        .with_inscribed_ball(vec![0.5; d], 0.5)
        .unwrap()
    }
    fn simplex(d: usize) -> MembershipBody<impl Fn(&[f64]) -> bool> {
        // Inradius of {x >= 0, sum x <= 1}: distance from (r, ..., r) to
        // every facet, r = 1 / (d + sqrt(d)).
        let r = 1.0 / (d as f64 + (d as f64).sqrt());
        MembershipBody::new(
            d,
            |x: &[f64]| x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() <= 1.0,
            vec![r; d],
            (vec![0.0; d], vec![1.0; d]),
        )
        .unwrap()
        .with_inscribed_ball(vec![r; d], r)
        .unwrap()
    }
    let run = |body: &dyn ConvexBody, exact: f64, walk: usize, seed: u64| -> f64 {
        let cfg = SamplerConfig {
            delta: 0.05,
            tau: 0.05,
            seed,
            walk_steps: Some(walk),
            volume_backend: VolumeBackend::MonteCarlo,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let est = estimate_volume(body, &cfg, &mut rng).unwrap();
        (est.value - exact).abs() / exact
    };

    let mut successes = 0;
    let mut worst = 0.0_f64;
    for seed in 1..=5u64 {
        for (rel, label) in [
            (run(&unit_box(2), 1.0, 32, 600 + seed), "square"),
            (run(&unit_box(3), 1.0, 32, 620 + seed), "cube"),
            (run(&simplex(2), 0.5, 16, 640 + seed), "2-simplex"),
            (run(&simplex(3), 1.0 / 6.0, 16, 660 + seed), "3-simplex"),
        ] {
            worst = worst.max(rel);
            if rel <= 0.05 {
                successes += 1;
            } else {
                eprintln!("volume miss: {label} seed {seed} rel err {rel:.4}");
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(successes >= 19, "{successes}/20 runs within 5%");
    println!(
        "criterion 06: PASS - {successes}/20 membership-oracle volumes within 5% (worst {worst:.4}), {elapsed:.2?}"
    );
}

struct MleCase {
    n: usize,
    brute: BruteForceResult,
    certified_loglik: f64,
}

static MLE_CASES: OnceLock<Vec<MleCase>> = OnceLock::new();

fn run_binary(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logcave"))
        .args(args)
        .current_dir(dir)
        .env_remove("LOGCAVE_SEED")
        .env("LOGCAVE_MANIFEST", dir.join("manifest.jsonl"))
        .output()
        .expect("spawn logcave")
}

/// Ten 1-d instances fitted through the compiled binary, with exhaustive
/// grid search over the same instances as the reference.
fn mle_cases() -> &'static [MleCase] {
    MLE_CASES.get_or_init(|| {
        let instances: [&[f64]; 10] = [
            &[0.0, 1.0],
            &[0.0, 0.5],
            &[-1.0, 1.0],
            &[0.0, 0.5, 1.0],
            &[0.0, 0.2, 1.0],
            &[-1.0, 0.0, 1.0],
            &[0.0, 0.35, 0.8],
            &[0.0, 0.3, 0.6, 1.0],
            &[-0.5, 0.0, 0.5, 1.0],
            &[0.0, 0.25, 0.5, 0.75],
        ];
        let dir = tempfile::tempdir().expect("temp dir");
        instances
            .iter()
            .enumerate()
            .map(|(i, xs)| {
                let xset = SampleSet::new(xs.iter().map(|&v| vec![v]).collect()).unwrap();
                let brute = brute_force_mle(&xset, 5.0, 0.05).unwrap();

                let csv = dir.path().join(format!("pts{i}.csv"));
                let rows: String = xs.iter().map(|v| format!("{v}\n")).collect();
                fs::write(&csv, rows).unwrap();
                let out_name = format!("fit{i}.json");
                let output = run_binary(
                    dir.path(),
                    &[
                        "fit",
                        csv.to_str().unwrap(),
                        "--epsilon",
                        "0.1",
                        "--max-iters",
                        "5000",
                        "--delta",
                        "0.1",
                        "--seed",
                        &(9000 + i).to_string(),
                        "--output",
                        &out_name,
                    ],
                );
                assert!(
                    output.status.success(),
                    "fit {i} failed: {}",
                    String::from_utf8_lossy(&output.stderr)
                );
                let doc: serde_json::Value = serde_json::from_str(
                    &fs::read_to_string(dir.path().join(&out_name)).unwrap(),
                )
                .unwrap();
                let certified_loglik = doc["loglik"].as_f64().expect("certified loglik");
                MleCase {
                    n: xs.len(),
                    brute,
                    certified_loglik,
                }
            })
            .collect()
    })
}

#[test]
fn criterion_07_binary_fits_reach_the_brute_force_bar() {
    let mut worst_slack = f64::INFINITY;
    for (i, case) in mle_cases().iter().enumerate() {
        let bar = case.brute.loglik - 0.1 - 0.05 * case.n as f64;
        let slack = case.certified_loglik - bar;
        worst_slack = worst_slack.min(slack);
        assert!(
            case.certified_loglik >= bar,
            "instance {i} (n = {}): certified {} vs bar {bar}",
            case.n,
            case.certified_loglik
        );
    }
    println!(
        "criterion 07: PASS - 10 binary fits certified above brute force - 0.1 - 0.05 n (min slack {worst_slack:.3})"
    );
}

#[test]
fn criterion_08_brute_force_optima_respect_the_diameter_bound() {
    let mut worst_ratio = 0.0_f64;
    for case in mle_cases() {
        let bound = diameter_bound(case.n, 1);
        let norm = case.brute.y_star.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_ratio = worst_ratio.max(norm / bound);
        assert!(
            norm <= bound,
            "n = {}: |y*| = {norm} exceeds 2 n^2 d ln(2nd) = {bound}",
            case.n
        );
    }
    println!(
        "criterion 08: PASS - every brute-force optimum inside the feasible ball (worst fill {worst_ratio:.3})"
    );
}

#[test]
fn criterion_09_log_partition_is_midpoint_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for trial in 0..100 {
        let n = rng.gen_range(2..=6);
        let (xset, y1) = random_instance_1d(&mut rng, n, 2.0);
        let y2: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let mid: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| 0.5 * (a + b)).collect();
        let a1 = exact_partition_1d(&xset, &y1).unwrap();
        let a2 = exact_partition_1d(&xset, &y2).unwrap();
        let am = exact_partition_1d(&xset, &mid).unwrap();
        assert!(
            am <= 0.5 * (a1 + a2) + 1e-6,
            "trial {trial}: A(mid) = {am} vs {}",
            0.5 * (a1 + a2)
        );
    }
    println!("criterion 09: PASS - 100 midpoint-convexity triples hold with slack 1e-6");
}

#[test]
fn criterion_10_identical_seeds_reproduce_heights_bitwise() {
    let dir = tempfile::tempdir().expect("temp dir");
    fs::write(dir.path().join("pts.csv"), "0\n0.4\n1\n").unwrap();
    let fit = |out: &str| {
        let output = run_binary(
            dir.path(),
            &[
                "fit", "pts.csv", "--seed", "777", "--max-iters", "600", "--delta", "0.1",
                "--output", out,
            ],
        );
        assert!(output.status.success());
        let doc: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(out)).unwrap()).unwrap();
        doc["y"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap().to_bits())
            .collect::<Vec<u64>>()
    };
    let a = fit("a.json");
    let b = fit("b.json");
    assert_eq!(a.len(), 3);
    assert_eq!(a, b, "same seed and config must give bit-identical heights");
    println!("criterion 10: PASS - repeated fit reproduces the height vector bit-for-bit");
}
