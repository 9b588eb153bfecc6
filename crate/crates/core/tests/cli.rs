use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_building-morl"))
}

fn tiny_trainer(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("trainer.json");
    std::fs::write(
        &p,
        r#"{"population": 6, "iterations": 2, "extension_iterations": 2, "extension_select": 2, "contexts_per_estimate": 1}"#,
    )
    .unwrap();
    p
}

#[test]
fn assets_validate_succeeds() {
    let out = bin().args(["assets", "validate"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
}

#[test]
fn generated_climates_match_shipped_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["assets", "generate", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/climates/Warm_Dry.csv");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("Warm_Dry.csv")).unwrap(),
        std::fs::read_to_string(shipped).unwrap()
    );
}

#[test]
fn errors_are_json_records() {
    let out = bin()
        .args(["experiment", "run", "/nonexistent/spec.json"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "io");
    assert!(v["error"]["message"].as_str().unwrap().contains("spec.json"));
}

#[test]
fn train_evaluate_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let trainer = tiny_trainer(d);
    let out = bin()
        .args(["train", "--mode", "dynamic", "--seed", "3", "--config"])
        .arg(&trainer)
        .arg("--out-dir")
        .arg(d)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("checkpoint.json").is_file());
    assert!(d.join("front.csv").is_file());

    let contexts = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments/dynamics_contexts.json");
    let out = bin()
        .arg("evaluate")
        .arg("--checkpoint")
        .arg(d.join("checkpoint.json"))
        .arg("--contexts")
        .arg(&contexts)
        .arg("--out-dir")
        .arg(d)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("eval/Dynamics_3.csv").is_file());
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("eval/metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics.as_object().unwrap().len(), 5);

    let out = bin()
        .arg("train")
        .arg("--resume")
        .arg(d.join("checkpoint.json"))
        .arg("--out-dir")
        .arg(d.join("resumed"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let spec_path = d.join("spec.json");
    std::fs::write(
        &spec_path,
        r#"{"name": "mini", "layout_id": "two_zone", "mode": "static",
            "train_context": {"climate_id": "Warm_Marine"},
            "eval_contexts": [{"label": "a", "u_wall_seed": 101}, {"climate_id": "Warm_Dry"}],
            "trainer": {"population": 6, "iterations": 2, "extension_iterations": 2, "extension_select": 2, "contexts_per_estimate": 1},
            "runs": 2}"#,
    )
    .unwrap();
    let out = bin()
        .args(["experiment", "run"])
        .arg(&spec_path)
        .arg("--out-dir")
        .arg(d)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("HV"));

    let csv = d.join("plot.csv");
    let out = bin()
        .args(["export", "front-data", "--fronts"])
        .arg(d.join("fronts"))
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("mode,context,policy_id,g_thermal,g_cost\n"));
    assert!(text.lines().skip(1).all(|l| l.starts_with("mini,")));
}
