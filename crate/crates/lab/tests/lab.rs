use std::fs;

use nodal_lab::config::SurfaceSpec;
use nodal_lab::experiment::RawData;
use nodal_lab::output::{read_manifest, CellResult, Check};
use nodal_lab::plot::{growth_curves, zero_scatter};
use nodal_lab::{
    emit_plots, inputs_hash, read_results, run_experiment, write_results, ExperimentConfig, ExperimentKind, LabError,
    ResultRecord, Run,
};
use serde_json::json;

fn config(value: serde_json::Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&value.to_string()).unwrap()
}

fn invalid_paths(value: serde_json::Value) -> Vec<String> {
    match ExperimentConfig::from_json(&value.to_string()) {
        Err(LabError::ConfigInvalid(errors)) => errors.into_iter().map(|e| e.path).collect(),
        other => panic!("expected ConfigInvalid, got {other:?}"),
    }
}

fn sine_config() -> serde_json::Value {
    json!({
        "experiment": "equidistribution",
        "surface": { "kind": "sine_stub" },
        "geodesic": { "kind": "equator" },
        "lambdas": [50],
        "seeds": [0],
        "strip": { "tau_max": 0.5 },
        "tolerances": { "count_ratio": 0.0, "concentration": 1.0, "concentration_tau": 1e-10 }
    })
}

fn small_growth() -> serde_json::Value {
    json!({
        "experiment": "growth",
        "surface": { "kind": "random_wave_torus", "delta": 1.0 },
        "geodesic": { "kind": "periodic", "q": [1, 0] },
        "lambdas": [30, 60],
        "seeds": [1, 2, 3],
        "strip": { "tau_max": 0.3, "tau": 0.3, "ntau": 5 },
        "tolerances": { "l2_gap": 1.0 }
    })
}

#[test]
fn sine_equidistribution_pairs_exactly() {
    let run = run_experiment(&config(sine_config())).unwrap();
    let cell = &run.record.cells[0];
    assert_eq!(cell.metrics["zero_count"], 100.0);
    assert_eq!(cell.metrics["count_over_lambda"], 2.0);
    assert_eq!(cell.metrics["pairing_gap"], 0.0);
    assert!(cell.metrics["max_abs_tau"] <= 1e-10);
    assert!(run.record.pass, "{:?}", run.record.checks);
    assert_eq!(run.raw.zeros.len(), 100);
}

#[test]
fn growth_record_has_aggregates_and_curves() {
    let run = run_experiment(&config(small_growth())).unwrap();
    assert_eq!(run.record.cells.len(), 6);
    let agg = run.record.aggregate(60.0, "l2_exponent").unwrap();
    assert_eq!(agg.count, 3);
    let xs: Vec<f64> = run.record.cells.iter().filter(|c| c.lambda == 60.0).map(|c| c.metrics["l2_exponent"]).collect();
    assert!((agg.mean - xs.iter().sum::<f64>() / 3.0).abs() < 1e-15);
    assert!(agg.stderr > 0.0);
    assert_eq!(run.raw.growth.len(), 2 * 5);
    assert_eq!(run.record.check("global_bound_violations").unwrap().value, 0.0);
}

#[test]
fn pole_inside_strip_is_a_config_error() {
    let paths = invalid_paths(json!({
        "experiment": "nonperiodic-window",
        "surface": { "kind": "random_wave_torus" },
        "geodesic": { "kind": "angle", "theta": 0.7 },
        "lambdas": [20],
        "seeds": [0],
        "strip": { "tau_max": 0.5 },
        "params": { "factor": { "kind": "cauchy_pole", "p": 0.3 } }
    }));
    assert_eq!(paths, ["params.factor.p"]);
    let err = ExperimentConfig::from_json(
        &json!({
            "experiment": "nonperiodic-window",
            "surface": { "kind": "random_wave_torus" },
            "geodesic": { "kind": "angle", "theta": 0.7 },
            "lambdas": [20],
            "seeds": [0],
            "strip": { "tau_max": 0.5 },
            "params": { "factor": { "kind": "cauchy_pole", "p": 0.3 } }
        })
        .to_string(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("PoleTooClose"));
}

#[test]
fn validation_reports_field_paths() {
    let mut v = small_growth();
    v["lambdas"] = json!([60, 30, -1]);
    v["seeds"] = json!([4, 4]);
    v["strip"]["tau"] = json!(0.5);
    v["tolerances"]["bogus"] = json!(1.0);
    v["geodesic"]["q"] = json!([2, 4]);
    let paths = invalid_paths(v);
    for p in ["lambdas[1]", "lambdas[2]", "seeds[1]", "strip.tau", "tolerances.bogus", "geodesic.q"] {
        assert!(paths.iter().any(|x| x == p), "{p} missing from {paths:?}");
    }

    let mut v = small_growth();
    v["surface"] = json!({ "kind": "perturbed_torus", "terms": [{ "k": [1, 0], "amplitude": 1.5 }] });
    assert!(invalid_paths(v).contains(&"surface.kind".to_string()));

    let paths = invalid_paths(json!({
        "experiment": "geometry",
        "surface": { "kind": "perturbed_torus", "terms": [{ "k": [1, 0], "amplitude": 1.5 }] },
        "geodesic": { "kind": "periodic", "q": [1, 0] },
        "lambdas": [3],
        "seeds": [0],
        "strip": { "tau_max": 0.2 }
    }));
    for p in ["surface.terms", "geodesic.kind", "lambdas"] {
        assert!(paths.iter().any(|x| x == p), "{p} missing from {paths:?}");
    }

    let mut v = sine_config();
    v["lambdas"] = json!([50.5]);
    assert_eq!(invalid_paths(v), ["lambdas[0]"]);

    let mut v = sine_config();
    v["unexpected"] = json!(1);
    assert_eq!(invalid_paths(v), ["<document>"]);
}

#[test]
fn wigner_and_qer_supports_are_validated() {
    let paths = invalid_paths(json!({
        "experiment": "wigner",
        "surface": { "kind": "random_wave_torus" },
        "geodesic": { "kind": "periodic", "q": [1, 0] },
        "lambdas": [20],
        "seeds": [0],
        "strip": { "tau_max": 0.1 },
        "params": { "interval": [0.0, 4.0] }
    }));
    assert_eq!(paths, ["params.window_width"]);
    let paths = invalid_paths(json!({
        "experiment": "qer",
        "surface": { "kind": "random_wave_torus" },
        "geodesic": { "kind": "periodic", "q": [1, 0] },
        "lambdas": [20],
        "seeds": [0],
        "strip": { "tau_max": 0.1 },
        "params": { "symbol": { "kind": "multiplication", "alpha": { "kind": "smooth_box", "a": 5.0, "b": 7.0, "ramp": 0.1 } } }
    }));
    assert_eq!(paths, ["params.symbol.alpha"]);
}

#[test]
fn inputs_hash_ignores_field_order_and_output_dir() {
    let a = r#"{"experiment":"equidistribution","surface":{"kind":"sine_stub"},"geodesic":{"kind":"equator"},
        "lambdas":[50],"seeds":[0],"strip":{"tau_max":0.5},"output_dir":"one"}"#;
    let b = r#"{"strip":{"tau_max":0.5},"seeds":[0],"output_dir":"two","lambdas":[50],
        "geodesic":{"kind":"equator"},"surface":{"kind":"sine_stub"},"experiment":"equidistribution"}"#;
    let (a, b) = (ExperimentConfig::from_json(a).unwrap(), ExperimentConfig::from_json(b).unwrap());
    assert_eq!(inputs_hash(&a), inputs_hash(&b));
    assert_eq!(inputs_hash(&a).len(), 64);
    let mut c = a.clone();
    c.seeds = vec![1];
    assert_ne!(inputs_hash(&a), inputs_hash(&c));
}

#[test]
fn empty_record_writes_valid_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::default();
    write_results(&run, dir.path()).unwrap();
    let back = read_results(dir.path()).unwrap();
    assert_eq!(back, ResultRecord::default());
    let manifest = read_manifest(dir.path()).unwrap();
    assert!(manifest.seeds.is_empty());
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.trim(), "lambda,seed,metric,value");
    for svg in emit_plots(dir.path()).unwrap() {
        let text = fs::read_to_string(svg).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
        assert!(text.contains("no data"));
    }
}

#[test]
fn results_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&config(small_growth())).unwrap();
    write_results(&run, dir.path()).unwrap();
    assert_eq!(read_results(dir.path()).unwrap(), run.record);
    let manifest = read_manifest(dir.path()).unwrap();
    assert_eq!(manifest.seeds, vec![1, 2, 3]);
    assert_eq!(manifest.inputs_hash, run.record.inputs_hash);
    assert!(manifest.wall_time_seconds >= 0.0);
    let json = fs::read_to_string(dir.path().join("results.json")).unwrap();
    assert!(!json.contains("wall"));
}

#[test]
fn same_config_same_bytes() {
    let cfg = config(small_growth());
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_results(&run_experiment(&cfg).unwrap(), d1.path()).unwrap();
    let pool = rayon_pool(3);
    let second = pool.install(|| run_experiment(&cfg).unwrap());
    write_results(&second, d2.path()).unwrap();
    assert_eq!(fs::read(d1.path().join("results.json")).unwrap(), fs::read(d2.path().join("results.json")).unwrap());
}

fn rayon_pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

#[test]
fn per_cell_failures_are_collected() {
    // a zonal harmonic of odd degree restricts to zero on the equator
    let run = run_experiment(&config(json!({
        "experiment": "band-mass",
        "surface": { "kind": "sphere_equator", "order": "zonal" },
        "geodesic": { "kind": "equator" },
        "lambdas": [3, 4],
        "seeds": [0],
        "strip": { "tau_max": 0.1 }
    })))
    .unwrap();
    assert!(run.record.cells[0].error.is_some());
    assert!(run.record.cells[1].error.is_none());
    assert!(!run.record.pass);
    assert_eq!(run.record.check("failed_cells").unwrap().value, 1.0);
}

#[test]
fn sine_zero_scatter_sits_on_real_axis() {
    let run = run_experiment(&config(sine_config())).unwrap();
    let rows: Vec<Vec<f64>> = run.raw.zeros.iter().map(|z| vec![z.lambda, z.seed as f64, z.t, z.tau, 1.0]).collect();
    let chart = zero_scatter(&rows);
    assert!(chart.series[0].points.iter().all(|(_, tau)| tau.abs() <= 1e-10));
    let svg = chart.render();
    assert!(svg.contains("real-axis"));
    assert_eq!(svg.matches("<circle").count(), 100);
}

#[test]
fn growth_plot_has_one_legend_entry_per_lambda() {
    let rows: Vec<Vec<f64>> = [100.0, 200.0, 400.0]
        .iter()
        .flat_map(|l| [-0.3, 0.0, 0.3].iter().map(move |t| vec![*l, *t, 2.0 * f64::abs(*t) - 1.0 / l]))
        .collect();
    let svg = growth_curves(&rows).render();
    for l in ["lambda = 100", "lambda = 200", "lambda = 400"] {
        assert!(svg.contains(l), "{l}");
    }
    assert_eq!(svg.matches("<polyline").count(), 4);
}

#[test]
fn plots_need_raw_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit_plots(dir.path()), Err(LabError::MissingData(_))));
}

#[test]
fn checks_record_relations() {
    assert!(Check::at_most("a", 1.0, 1.0).pass);
    assert!(!Check::at_least("b", 0.5, 1.0).pass);
    let nan = Check::at_most("c", f64::NAN, 1.0);
    assert!(!nan.pass);
    assert!(serde_json::to_string(&nan).is_ok());
    let cell = CellResult::default();
    assert!(cell.error.is_none());
    assert_eq!(RawData::default().zeros.len(), 0);
}

#[test]
fn tolerance_overrides_sit_on_defaults() {
    let cfg = config(small_growth());
    assert_eq!(cfg.tolerance("l2_gap"), 1.0);
    assert_eq!(cfg.tolerance("bound_coefficient"), 6.0);
    assert_eq!(cfg.experiment, ExperimentKind::Growth);
    assert!(matches!(cfg.surface, SurfaceSpec::RandomWaveTorus { .. }));
}
