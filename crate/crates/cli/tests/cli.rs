use std::path::Path;
use std::process::Command;

fn fracpop() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracpop"))
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn masscontrol_bounds_writes_report_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let status = fracpop()
        .args(["masscontrol-bounds", "--n-list", "2,5", "--alpha", "1.5", "--points", "20", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["masscontrol-bounds.csv", "masscontrol-bounds.json", "masscontrol-bounds.manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn simulate_overrides_and_repeats_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let run = |stem: &str| {
        let status = fracpop()
            .arg("simulate")
            .arg("--config")
            .arg(configs().join("simulate.json"))
            .args(["--replicas", "3", "--times", "0.5,1", "--seed", "9", "--stem", stem, "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(dir.path().join(format!("{stem}.csv"))).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert_eq!(a.lines().count(), 1 + 3 * 2 * 4);
}

#[test]
fn pde_then_mild_check_through_a_stored_run() {
    let dir = tempfile::tempdir().unwrap();
    let pde = serde_json::json!({
        "model": serde_json::from_str::<serde_json::Value>(
            &std::fs::read_to_string(configs().join("pde.json")).unwrap()
        ).unwrap()["model"],
        "initial": {"form": "raised_cosine", "params": {"center": 0.0, "half_width": 2.0, "mass": 1.0}},
        "grid": {"x_min": -20.0, "x_max": 20.0, "n_points": 201},
        "horizon": 0.5,
        "dt": 0.004,
        "n_outputs": 5
    });
    let pde_path = dir.path().join("pde.json");
    std::fs::write(&pde_path, pde.to_string()).unwrap();
    let status = fracpop()
        .arg("pde")
        .arg("--config")
        .arg(&pde_path)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("pde.run.json").exists());

    let mild = serde_json::json!({
        "run": "pde.run.json",
        "dictionary": [{"name": "g", "function": {"form": "gaussian", "params": {"amplitude": 1.0, "center": 0.5, "width": 1.0}}}],
        "times": [0.5],
        "n_samples": 400,
        "seed": 2
    });
    let mild_path = dir.path().join("mild.json");
    std::fs::write(&mild_path, mild.to_string()).unwrap();
    let out = fracpop()
        .arg("mild-check")
        .arg("--config")
        .arg(&mild_path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn failing_verdict_sets_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "model": serde_json::from_str::<serde_json::Value>(
            &std::fs::read_to_string(configs().join("verify-kernel.json")).unwrap()
        ).unwrap()["model"],
        "k_list": [10000, 100],
        "dictionary": [{"name": "bump", "function": {"form": "gaussian", "params": {"amplitude": 1.0, "center": 0.0, "width": 3.0}}}],
        "function": "bump",
        "grid": {"x_min": -2.0, "x_max": 2.0, "n_points": 5}
    });
    let path = dir.path().join("k.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let status = fracpop()
        .arg("verify-kernel")
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"nope\": 1}").unwrap();
    let status = fracpop()
        .arg("converge")
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
