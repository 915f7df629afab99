use magenta_core::harness::{
    initial_point, parse_csv, read_csv, run_experiment, write_csv, ExperimentConfig, HarnessError, InitSpec,
    TraceRecord, CSV_HEADER,
};
use magenta_core::rng::{derive_seed, SeedPurpose};
use proptest::prelude::*;

const SMALL: &str = r#"
name = "small"
runs = 3
trace_stride = 5
budget = { max_iters = 200, max_stages = 5 }
problem = { kind = "logistic", agents = 4, samples = 80, dim = 3, seed = 11 }
graph = { topology = { kind = "random_geometric", radius = 0.6, seed = 11 } }
init = { seed = 3 }

[[algorithms]]
kind = "gradient_tracking"
step = { rule = "constant", alpha = 0.1 }

[[algorithms]]
kind = "magenta"
epsilon = 0.01
d = 1.0
stepsize = { rule = "inverse_square", scale = 1.0 }
max_total_iters = 300
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL).unwrap()
}

fn opt_f64() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        Just(None),
        any::<f64>().prop_map(Some),
        Just(Some(f64::NAN)),
        Just(Some(f64::INFINITY)),
        Just(Some(f64::NEG_INFINITY)),
    ]
}

prop_compose! {
    fn record()(
        run_id in any::<u64>(),
        algorithm in "[a-z_]{1,12}(_d[0-9]{1,3})?",
        stage in -1i64..1000,
        iteration in any::<u64>(),
        alpha in any::<f64>(),
        radius in opt_f64(),
        y_norm_sq in opt_f64(),
        mean_grad_norm_sq in any::<f64>(),
        x_consensus_sq in any::<f64>(),
        y_consensus_sq in opt_f64(),
        v_over_alpha_sq in opt_f64(),
        potential in opt_f64(),
        boundary_touch_count in any::<u64>(),
        wall_clock_us in any::<u64>(),
    ) -> TraceRecord {
        TraceRecord {
            run_id, algorithm, stage, iteration, alpha, radius, y_norm_sq, mean_grad_norm_sq, x_consensus_sq,
            y_consensus_sq, v_over_alpha_sq, potential, boundary_touch_count, wall_clock_us,
        }
    }
}

/// Equality that treats NaN as equal to itself.
fn same(a: &TraceRecord, b: &TraceRecord) -> bool {
    let f = |x: f64, y: f64| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan());
    let o = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => f(x, y),
        (None, None) => true,
        _ => false,
    };
    a.run_id == b.run_id
        && a.algorithm == b.algorithm
        && a.stage == b.stage
        && a.iteration == b.iteration
        && f(a.alpha, b.alpha)
        && o(a.radius, b.radius)
        && o(a.y_norm_sq, b.y_norm_sq)
        && f(a.mean_grad_norm_sq, b.mean_grad_norm_sq)
        && f(a.x_consensus_sq, b.x_consensus_sq)
        && o(a.y_consensus_sq, b.y_consensus_sq)
        && o(a.v_over_alpha_sq, b.v_over_alpha_sq)
        && o(a.potential, b.potential)
        && a.boundary_touch_count == b.boundary_touch_count
        && a.wall_clock_us == b.wall_clock_us
}

proptest! {
    #[test]
    fn csv_round_trip(records in prop::collection::vec(record(), 0..100)) {
        let bytes = write_csv(&records, Vec::new()).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        prop_assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        prop_assert_eq!(text.lines().count(), records.len() + 1);
        let back = parse_csv(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            prop_assert!(same(a, b), "{a:?} != {b:?}");
        }
    }

    #[test]
    fn init_depends_only_on_init_seed_and_run(seed in any::<u64>(), k in 0u64..50) {
        let spec: InitSpec = toml::from_str(&format!("seed = {seed}")).unwrap();
        let a = initial_point(&spec, 4, 3, k).unwrap();
        prop_assert_eq!(&a, &initial_point(&spec, 4, 3, k).unwrap());
        prop_assert_ne!(&a, &initial_point(&spec, 4, 3, k + 1).unwrap());
    }

    #[test]
    fn derived_seeds_separate_purposes(base in any::<u64>(), k in 0u64..1000) {
        let seeds = [
            derive_seed(base, SeedPurpose::Init, k),
            derive_seed(base, SeedPurpose::Graph, k),
            derive_seed(base, SeedPurpose::Data, k),
        ];
        prop_assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2] && seeds[0] != seeds[2]);
    }
}

fn without_clock(records: &[TraceRecord]) -> Vec<TraceRecord> {
    records
        .iter()
        .cloned()
        .map(|r| TraceRecord { wall_clock_us: 0, ..r })
        .collect()
}

#[test]
fn same_config_same_trace() {
    let a = run_experiment(&small()).unwrap();
    let b = run_experiment(&small()).unwrap();
    assert_eq!(a.summary, b.summary);
    assert_eq!(without_clock(&a.records), without_clock(&b.records));
    assert!(!a.records.is_empty());
}

#[test]
fn extra_variant_leaves_others_untouched() {
    let base = run_experiment(&small()).unwrap();
    let mut more = small();
    more.algorithms
        .push(toml::from_str("kind = \"prox_pda\"\npenalty = { rule = \"constant\", rho = 1.0 }").unwrap());
    let extended = run_experiment(&more).unwrap();
    for label in ["gradient_tracking", "magenta_d1"] {
        let pick = |recs: &[TraceRecord]| {
            without_clock(
                &recs
                    .iter()
                    .filter(|r| r.algorithm == label)
                    .cloned()
                    .collect::<Vec<_>>(),
            )
        };
        assert_eq!(pick(&base.records), pick(&extended.records), "{label}");
        let runs = |s: &magenta_core::harness::ExperimentSummary| {
            s.runs
                .iter()
                .filter(|r| r.algorithm == label)
                .cloned()
                .collect::<Vec<_>>()
        };
        assert_eq!(runs(&base.summary), runs(&extended.summary));
    }
}

#[test]
fn graph_seed_does_not_move_initial_points() {
    let base = run_experiment(&small()).unwrap();
    let moved = run_experiment(&small().with_overrides(&["graph.topology.seed=12"]).unwrap()).unwrap();
    for (a, b) in base.summary.runs.iter().zip(&moved.summary.runs) {
        assert_eq!(a.x0_norm, b.x0_norm);
    }
}

#[test]
fn zero_runs_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.runs = 0;
    cfg.output = Some(dir.path().to_path_buf());
    let report = run_experiment(&cfg).unwrap();
    assert!(report.records.is_empty());
    let text = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
    assert!(read_csv(&dir.path().join("trace.csv")).unwrap().is_empty());
    assert!(dir.path().join("summary.toml").exists());
}

#[test]
fn output_files_match_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.output = Some(dir.path().join("nested"));
    let report = run_experiment(&cfg).unwrap();
    let back = read_csv(&dir.path().join("nested/trace.csv")).unwrap();
    assert_eq!(back.len(), report.records.len());
    assert!(back.iter().zip(&report.records).all(|(a, b)| same(a, b)));
    let summary = std::fs::read_to_string(dir.path().join("nested/summary.toml")).unwrap();
    assert_eq!(summary, report.summary.to_toml_string().unwrap());
}

#[test]
fn invalid_config_fails_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let mut cfg = small();
    cfg.output = Some(out.clone());
    cfg.algorithms[1] = toml::from_str("kind = \"magenta\"\nepsilon = -1.0\nd = 1.0").unwrap();
    assert!(run_experiment(&cfg).is_err());
    assert!(!out.exists());

    assert!(matches!(
        ExperimentConfig::from_toml_str(&format!("{SMALL}\nbogus = 1")),
        Err(HarnessError::Config(_))
    ));
    assert!(matches!(
        ExperimentConfig::from_path(&dir.path().join("missing.toml")),
        Err(HarnessError::Io { .. })
    ));
}
