use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn ctxnoise(args: &[&str], dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ctxnoise"));
    cmd.args(args).env_remove("CTXNOISE_OUT");
    if let Some(d) = dir {
        cmd.current_dir(d);
    }
    cmd.output().unwrap()
}

fn small_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/small.cfg")
        .to_string_lossy()
        .into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = ctxnoise(&[], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn unknown_and_conflicting_flags_exit_2() {
    let cfg = small_config();
    assert_eq!(
        ctxnoise(&["detect", "--config", &cfg, "--bogus"], None).status.code(),
        Some(2)
    );
    let out = ctxnoise(&["detect", "--config", &cfg, "--seed", "1", "--seeds", "1,2"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot be used with"));
}

#[test]
fn missing_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "dataset = cora\ncora_cites = x.cites\n").unwrap();
    let out = ctxnoise(&["detect", "--config", cfg.to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.starts_with("error:") && err.contains("cora_content"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn small_detect_run_is_quick_and_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("nested/out");
    let start = Instant::now();
    let out = ctxnoise(
        &[
            "detect",
            "--config",
            &small_config(),
            "--out",
            out_dir.to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(start.elapsed() < Duration::from_secs(60));
    let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("run_id,seed,mode,omega,batch,accuracy,er1,er2,nep,removed,kept")
    );
    // 2 seeds x 2 noise rates x 4 methods.
    assert_eq!(lines.count(), 16);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn sweep_has_one_row_per_rate_and_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = ctxnoise(
        &[
            "sweep",
            "--config",
            &small_config(),
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let pairs: Vec<(String, String)> = sweep
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let expected: Vec<(String, String)> = ["0.1", "0.3"]
        .iter()
        .flat_map(|o| ["0.85", "0.9"].iter().map(move |b| (o.to_string(), b.to_string())))
        .collect();
    assert_eq!(pairs, expected);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_ctxnoise"))
        .args(["gen-data", "--config", &small_config(), "--seed", "2"])
        .env("CTXNOISE_OUT", &target)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(target.join("dataset.txt")).unwrap();
    assert!(!text.is_empty());
}

#[test]
fn learning_subcommands_write_per_batch_rows() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, modes) in [("active-learn", 4), ("pseudo", 3)] {
        let out_dir = dir.path().join(cmd);
        let out = ctxnoise(
            &[
                cmd,
                "--config",
                &small_config(),
                "--seeds",
                "0,1",
                "--out",
                out_dir.to_str().unwrap(),
            ],
            None,
        );
        assert!(out.status.success(), "{}", stderr(&out));
        let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
        // small.cfg uses 5 batches.
        assert_eq!(csv.lines().count(), 1 + modes * 2 * 5);
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["modes"].as_array().unwrap().len(), modes);
    }
}
