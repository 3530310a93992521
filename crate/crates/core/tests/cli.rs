use std::path::Path;
use std::process::{Command, Output};

const SMALL_CONTRACT: &str = "\
# coarse contract run
r0 = e^-20, e^-30
grid = 512
grid_refined = 1024
liyau_grids = 256, 512
";

/// Times 0.03 · 1.02^k up to 0.1, dense enough for the Li-Yau windows.
fn dense_times() -> String {
    let mut t: Vec<String> = (0..61).map(|k| format!("{}", 0.03 * 1.02f64.powi(k))).collect();
    t.push("0.1".into());
    t.join(",")
}

fn cuspflow(args: &[&str], dir: &Path, threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspflow"))
        .args(args)
        .current_dir(dir)
        .env("CUSPFLOW_THREADS", threads)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

#[test]
fn contract_reports_are_byte_identical_across_thread_counts() {
    let config = format!("{SMALL_CONTRACT}t_samples = {}\n", dense_times());
    let runs: Vec<_> = ["1", "3"]
        .iter()
        .map(|threads| {
            let dir = tempfile::tempdir().unwrap();
            write(dir.path(), "small.cfg", &config);
            let out = cuspflow(&["contract", "--config", "small.cfg", "--format", "both"], dir.path(), threads);
            (dir, out)
        })
        .collect();
    assert_eq!(runs[0].1.status.code(), runs[1].1.status.code());
    for file in ["report.json", "series.csv"] {
        let x = std::fs::read(runs[0].0.path().join("out").join(file)).unwrap();
        let y = std::fs::read(runs[1].0.path().join("out").join(file)).unwrap();
        assert!(!x.is_empty() && x == y, "{file} differs");
        assert!(!x.contains(&b'\r'));
    }
    let dir = &runs[0].0;
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["rows"].as_array().unwrap().len(), 62);
    assert_eq!(json["config"]["grid"], 512);
}

#[test]
fn exit_code_follows_the_assertions() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "empty.cfg", "");
    let out = cuspflow(&["lemmas", "--config", "empty.cfg", "--format", "json"], dir.path(), "1");
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/report.json")).unwrap()).unwrap();
    let assertions = json["assertions"].as_array().unwrap();
    let first_failure = assertions.iter().find(|a| a["passed"] == false);
    match first_failure {
        None => assert_eq!(out.status.code(), Some(0)),
        Some(a) => {
            assert_eq!(out.status.code(), Some(1));
            let stderr = String::from_utf8(out.stderr).unwrap();
            assert!(stderr.contains(a["name"].as_str().unwrap()), "{stderr}");
        }
    }
    assert!(!dir.path().join("out/series.csv").exists());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.cfg", "grid = 4096\nnodes = 3\n");
    write(dir.path(), "mu.cfg", "mu = 0.5\n");
    for args in [
        &["contract", "--config", "bad.cfg"][..],
        &["contract", "--config", "mu.cfg"][..],
        &["contract", "--config", "missing.cfg"][..],
        &["lemmas", "--config", "mu.cfg", "--r0", "0.5"][..],
    ] {
        let out = cuspflow(args, dir.path(), "1");
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    write(dir.path(), "empty.cfg", "");
    let out = cuspflow(&["lemmas", "--config", "empty.cfg"], dir.path(), "zero");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn overrides_reach_the_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "empty.cfg", "");
    cuspflow(
        &["lemmas", "--config", "empty.cfg", "--grid", "1024", "--r0", "e^-12,e^(-24)", "--t-samples", "0.05,0.1"],
        dir.path(),
        "1",
    );
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["grid"], 1024);
    let r0: Vec<f64> = json["config"]["r0"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(r0, vec![(-12.0f64).exp(), (-24.0f64).exp()]);
    assert_eq!(json["config"]["t_samples"].as_array().unwrap().len(), 2);
}

#[test]
fn unusable_trajectories_exit_with_three() {
    // Too sparse for any window [t1, 17 t1 / 16] to hold two samples.
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sparse.cfg", &format!("{SMALL_CONTRACT}t_samples = 0.03, 0.05, 0.1\n"));
    let out = cuspflow(&["contract", "--config", "sparse.cfg"], dir.path(), "1");
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("contract experiment"));
}
