use corrbreak::rolling::rolling_correlations;
use corrbreak::sim::{
    drift_c, generate, local_power_study, rejection_study, BreakSpec, DgpSpec, StepComponent,
    StepFunctionG,
};
use corrbreak::{simulate_sup_l1_bridges, BootstrapConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn drift_is_piecewise_affine_between_jumps() {
    let g = StepFunctionG {
        components: vec![
            StepComponent {
                initial: 0.5,
                jumps: vec![(0.2, -1.0), (0.7, 2.0)],
            },
            StepComponent::constant(1.0),
            StepComponent::jump(0.4, 3.0),
        ],
        magnitude: 2.0,
        variances: vec![1.0, 2.0, 0.5],
    };
    let n = 1000;
    let c = drift_c(&g, n).unwrap();
    let kinks = [200, 400, 700];
    for col in 0..3 {
        assert_eq!(c[(0, col)], 0.0);
        assert_eq!(c[(n, col)], 0.0);
        for m in 1..n {
            if kinks.contains(&m) {
                continue;
            }
            let second = c[(m + 1, col)] - 2.0 * c[(m, col)] + c[(m - 1, col)];
            assert!(second.abs() < 1e-12, "col {col}, m {m}: {second}");
        }
    }
    assert!(c.column(1).iter().all(|&v| v.abs() < 1e-15));
}

#[test]
fn local_power_grows_with_magnitude_and_peaks_at_the_jump() {
    let table = simulate_sup_l1_bridges(1, 1000, 50_000, 3).unwrap();
    let dgp = DgpSpec::new(2, 500).with_seed(41);
    let boot = BootstrapConfig::for_sample_size(500, 199, 7);
    let mut rates = Vec::new();
    let mut last = None;
    for m in [0.0, 5.0, 10.0, 20.0] {
        let g = StepFunctionG::single_jump(2, 0, 0.5, 1.0, m);
        let out = local_power_study(&g, &dgp, 200, &boot, &table, 0.05).unwrap();
        rates.push(out.rejection);
        last = Some(out);
    }
    for w in rates.windows(2) {
        let se = w[0].std_error.max(w[1].std_error);
        assert!(w[1].rate >= w[0].rate - 2.0 * se, "{:?}", rates);
    }
    let out = last.unwrap();
    let (i, _) = out
        .mean_process
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    assert!(
        (out.grid[i] - 0.5).abs() <= 0.1,
        "argmax at {}",
        out.grid[i]
    );
}

#[test]
fn rejection_study_is_identical_across_thread_counts() {
    let table = simulate_sup_l1_bridges(3, 200, 1000, 1).unwrap();
    let dgp = DgpSpec::new(3, 200).with_seed(5);
    let brk = BreakSpec::first_pair(3, 0.3);
    let boot = BootstrapConfig::for_sample_size(200, 49, 6);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| rejection_study(&dgp, Some(&brk), 40, &boot, &table, 0.05).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn rolling_correlations_track_the_population_value() {
    let dgp = DgpSpec::new(2, 1000).with_correlation(vec![0.5]);
    let panel = generate(&dgp, None, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
    let rows = rolling_correlations(&panel, 120).unwrap();
    assert_eq!(rows.len(), 1000 - 120 + 1);
    // Asymptotic sd of r is (1 - rho^2) / sqrt(n).
    let band = 4.5 * 0.75 / 120f64.sqrt();
    assert!(rows.iter().all(|r| (r[0] - 0.5).abs() < band));
}

#[test]
fn rolling_correlations_shift_across_a_break() {
    let t = 1200;
    let brk = BreakSpec::first_pair(3, 0.6);
    let panel = generate(
        &DgpSpec::new(3, t),
        Some(&brk),
        &mut ChaCha8Rng::seed_from_u64(8),
    )
    .unwrap();
    let window = 120;
    let rows = rolling_correlations(&panel, window).unwrap();
    let mean = |range: std::ops::Range<usize>, pair: usize| {
        let n = range.len() as f64;
        range.map(|s| rows[s][pair]).sum::<f64>() / n
    };
    let before = 0..t / 2 - window + 1;
    let after = t / 2..t - window + 1;
    let shift = mean(after.clone(), 0) - mean(before.clone(), 0);
    assert!((shift - 0.6).abs() < 0.15, "shift {shift}");
    for pair in [1, 2] {
        let other = mean(after.clone(), pair) - mean(before.clone(), pair);
        assert!(other.abs() < 0.15, "pair {pair}: {other}");
    }
}
