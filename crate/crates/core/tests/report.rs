use corrbreak::sim::{generate, BreakSpec, DgpSpec};
use corrbreak::{run_test, simulate_sup_l1_bridges, BootstrapConfig, Error, Panel, Stage};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn panel(p: usize, t: usize, brk: Option<BreakSpec>) -> Panel {
    generate(
        &DgpSpec::new(p, t),
        brk.as_ref(),
        &mut ChaCha8Rng::seed_from_u64(4),
    )
    .unwrap()
}

#[test]
fn report_fields_are_consistent() {
    let data = panel(3, 400, Some(BreakSpec::first_pair(3, 0.5)));
    let table = simulate_sup_l1_bridges(3, 500, 5000, 1).unwrap();
    let boot = BootstrapConfig::for_sample_size(400, 199, 2);
    let r = run_test(&data, &boot, &table, 0.05).unwrap();

    assert_eq!(r.d, 3);
    assert_eq!(r.q_std, r.process.max());
    assert_eq!(r.q_raw, r.raw_process.max());
    assert_eq!(r.reject, r.q_std > r.critical_value);
    assert_eq!(r.process.at(r.changepoint_k), Some(r.q_std));
    assert!(r.reject && r.p_value < 0.05);
    assert!(
        (r.changepoint_k as i64 - 200).abs() < 60,
        "k = {}",
        r.changepoint_k
    );
    assert_eq!(r.ridge_applied, 0.0);
    assert_eq!(r.config.block_length, 4);
    assert_eq!((r.config.grid, r.config.paths), (500, 5000));
}

#[test]
fn duplicated_column_fails_in_the_bootstrap_stage() {
    let base = panel(2, 200, None);
    let cols = [base.column(0), base.column(1), base.column(0)];
    let data = Panel::from_columns(&cols).unwrap();
    let table = simulate_sup_l1_bridges(3, 200, 1000, 1).unwrap();
    let err = run_test(
        &data,
        &BootstrapConfig::for_sample_size(200, 99, 2),
        &table,
        0.05,
    )
    .unwrap_err();
    assert_eq!(err.stage, Stage::Bootstrap);
    assert!(
        matches!(err.source, Error::DegenerateInput(ref m) if m.contains("X1-X3")),
        "{err}"
    );
}

#[test]
fn mismatched_table_fails_in_the_limit_stage() {
    let table = simulate_sup_l1_bridges(1, 200, 1000, 1).unwrap();
    let err = run_test(
        &panel(3, 100, None),
        &BootstrapConfig::for_sample_size(100, 19, 2),
        &table,
        0.05,
    )
    .unwrap_err();
    assert_eq!(err.stage, Stage::Limit);
}
