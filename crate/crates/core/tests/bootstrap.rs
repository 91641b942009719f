use corrbreak::linalg::symmetric_eigenvalues;
use corrbreak::sim::{generate, DgpSpec};
use corrbreak::{estimate_e, BootstrapConfig, Panel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn normal_panel(p: usize, t: usize, seed: u64) -> Panel {
    let dgp = DgpSpec::new(p, t).with_correlation(vec![0.3; p * (p - 1) / 2]);
    generate(&dgp, None, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn estimate_is_symmetric_positive_semidefinite() {
    for (p, t, l) in [(2, 50, 1), (3, 120, 3), (4, 300, 4)] {
        let e = estimate_e(
            &normal_panel(p, t, 5),
            &BootstrapConfig {
                block_length: l,
                replications: 99,
                seed: 1,
            },
        )
        .unwrap();
        let m = e.matrix();
        assert_eq!(m, &m.transpose());
        let eig = symmetric_eigenvalues(m);
        assert!(eig[0] >= -1e-12 * eig[eig.len() - 1], "{eig:?}");
    }
}

#[test]
fn positive_column_scaling_leaves_estimate_unchanged() {
    let panel = normal_panel(3, 200, 9);
    let scaled = panel.map_values(|j, x| [0.001, 7.0, 250.0][j] * x).unwrap();
    let cfg = BootstrapConfig::for_sample_size(200, 149, 4);
    let a = estimate_e(&panel, &cfg).unwrap();
    let b = estimate_e(&scaled, &cfg).unwrap();
    let diff = (a.matrix() - b.matrix()).abs().max();
    assert!(diff < 1e-10, "{diff:e}");
}

#[test]
fn estimate_does_not_depend_on_thread_count() {
    let panel = normal_panel(4, 400, 2);
    let cfg = BootstrapConfig::for_sample_size(400, 257, 31);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_e(&panel, &cfg).unwrap())
    };
    let one = run(1);
    for threads in [2, 4, 7] {
        assert_eq!(one, run(threads));
    }
}

#[test]
fn estimate_settles_as_replications_grow() {
    let panel = generate(
        &DgpSpec::new(4, 500),
        None,
        &mut ChaCha8Rng::seed_from_u64(17),
    )
    .unwrap();
    let at = |b: usize| {
        estimate_e(
            &panel,
            &BootstrapConfig {
                block_length: 4,
                replications: b,
                seed: 8,
            },
        )
        .unwrap()
    };
    let change = (at(2000).matrix() - at(4000).matrix()).abs().max();
    assert!(change < 0.1, "max entry change {change}");
}
