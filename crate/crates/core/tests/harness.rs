use std::sync::Arc;

use building_morl::context::{AssetLibrary, TrainMode, UWallBounds, UWallVector};
use building_morl::harness::{
    collect_fronts, compare_modes, run_experiment, ContextEntry, ExperimentSpec, Metric,
};
use building_morl::morl::TrainerConfig;
use building_morl::Error;

fn tiny_spec(name: &str, mode: TrainMode) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        layout_id: "two_zone".into(),
        mode,
        train_context: ContextEntry {
            climate_id: Some("Warm_Marine".into()),
            ..Default::default()
        },
        train_climates: vec![],
        train_bounds: None,
        eval_contexts: vec![
            ContextEntry {
                label: Some("self".into()),
                ..Default::default()
            },
            ContextEntry {
                label: Some("d1".into()),
                u_wall_seed: Some(101),
                ..Default::default()
            },
            ContextEntry {
                climate_id: Some("Hot_Humid".into()),
                ..Default::default()
            },
        ],
        env: Default::default(),
        trainer: TrainerConfig {
            population: 6,
            iterations: 3,
            extension_iterations: 3,
            extension_select: 2,
            contexts_per_estimate: 1,
            ..TrainerConfig::default()
        },
        metrics: Default::default(),
        runs: 2,
        master_seed: 5,
        run_seeds: None,
    }
}

fn lib() -> Arc<AssetLibrary> {
    Arc::new(AssetLibrary::builtin())
}

#[test]
fn identical_run_seeds_give_zero_std() {
    let mut spec = tiny_spec("same", TrainMode::Static);
    spec.run_seeds = Some(vec![9, 9]);
    let t = run_experiment(&lib(), &spec, None).unwrap().table;
    assert_eq!(t.rows.len(), 3);
    assert_eq!(t.columns, vec!["self", "d1", "Hot_Humid"]);
    for row in &t.rows {
        for c in &row.cells {
            assert_eq!(c.std, 0.0);
        }
    }
}

#[test]
fn self_evaluation_column_matches_training_context() {
    let spec = tiny_spec("self", TrainMode::Static);
    let ctx = spec.eval_specs().unwrap();
    assert_eq!(ctx[0].1, spec.train_spec().unwrap());
}

#[test]
fn degenerate_dynamic_sampler_matches_static() {
    let u = UWallVector::midpoint();
    let st = tiny_spec("static", TrainMode::Static);
    let mut dy = tiny_spec("dynamic", TrainMode::Dynamic);
    dy.train_bounds = Some(UWallBounds::degenerate(u).unwrap());
    let res = compare_modes(&lib(), &st, &dy, None).unwrap();
    let t = &res.table;
    assert_eq!(t.rows.len(), 6);
    for m in Metric::ALL {
        for c in &t.columns {
            assert_eq!(t.cell(m, Some("static"), c), t.cell(m, Some("dynamic"), c));
        }
    }
    assert_eq!(res.fronts[0].runs, res.fronts[1].runs);
}

#[test]
fn compare_rejects_mismatched_contexts() {
    let st = tiny_spec("static", TrainMode::Static);
    let mut dy = tiny_spec("dynamic", TrainMode::Dynamic);
    dy.eval_contexts.pop();
    let err = compare_modes(&lib(), &st, &dy, None).unwrap_err();
    assert!(matches!(err, Error::Validation(_)), "{err}");
}

#[test]
fn spec_validation_errors() {
    let l = lib();
    let mut s = tiny_spec("x", TrainMode::Static);
    s.runs = 0;
    assert!(s.validate(&l).is_err());
    let mut s = tiny_spec("x", TrainMode::Static);
    s.eval_contexts[1].climate_id = Some("Atlantis".into());
    assert!(matches!(s.validate(&l), Err(Error::UnknownAsset { .. })));
    let mut s = tiny_spec("x", TrainMode::Static);
    s.layout_id = "castle".into();
    assert!(s.validate(&l).is_err());
}

#[test]
fn failed_run_reports_partial_path() {
    // Episodes past the end of the shipped weather year fail at reset.
    let mut spec = tiny_spec("late", TrainMode::Static);
    spec.env.start_hour = 8750;
    let dir = tempfile::tempdir().unwrap();
    let err = collect_fronts(&lib(), &spec, Some(dir.path())).unwrap_err();
    match err {
        Error::RunFailed { run: 0, partial, .. } => {
            assert_eq!(partial.unwrap(), dir.path().join("fronts").join("late"));
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn outputs_written_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tiny_spec("io", TrainMode::Static);
    let res = run_experiment(&lib(), &spec, Some(dir.path())).unwrap();
    let json = std::fs::read_to_string(dir.path().join("io.table.json")).unwrap();
    let parsed: building_morl::harness::ReportTable = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed, res.table);
    for r in 0..2 {
        for c in ["self", "d1", "Hot_Humid"] {
            assert!(dir.path().join(format!("fronts/io/run{r}/{c}.csv")).is_file());
        }
    }
    let saved = dir.path().join("spec.json");
    spec.save(&saved).unwrap();
    assert_eq!(ExperimentSpec::load(&saved).unwrap(), spec);
}
