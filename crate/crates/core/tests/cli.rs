use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cascadelab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascadelab"))
        .current_dir(dir)
        .env_remove("CASCADELAB_JOBS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_world(dir: &Path) {
    fs::write(
        dir.join("w.ini"),
        "[world]\nblocks = 3\nnodes_per_block = 60\nintra_p = 0.12\ninter_p = 0.01\nrng_seed = 4\n",
    )
    .unwrap();
    let o = cascadelab(dir, &["synth", "--config", "w.ini", "--out", "world"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn synth_writes_world_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    small_world(tmp.path());
    for f in [
        "network.tsv",
        "node_map.tsv",
        "schema.csv",
        "identities.csv",
        "regions.csv",
        "region_adjacency.csv",
        "world_manifest.json",
        "run_manifest.json",
    ] {
        assert!(tmp.path().join("world").join(f).is_file(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("world/run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "synth");
    assert_eq!(manifest["master_seed"], 4);
}

#[test]
fn trial_emits_fifteen_rows_per_hashtag_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_world(dir);
    let o = cascadelab(dir, &["simulate", "--world", "world", "--random", "2", "--stickiness", "0.5", "--out", "sim"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let args = |out: &str| {
        vec![
            "trial", "--world", "world", "--hashtags", "sim/cascades.jsonl", "--models", "all", "--runs", "5", "--seed",
            "7", "--out", out,
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    let a = args("t1");
    let o = cascadelab(dir, &a.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(o.status.success(), "{}", stderr(&o));
    let trials = fs::read_to_string(dir.join("t1/trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 2 * 15);

    let mut b = args("t2");
    b.extend(["--jobs".to_string(), "2".to_string()]);
    let o = cascadelab(dir, &b.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["trials.csv", "metrics.csv", "cmi.csv", "calibration.csv", "run_manifest.json"] {
        assert_eq!(fs::read(dir.join("t1").join(f)).unwrap(), fs::read(dir.join("t2").join(f)).unwrap(), "{f}");
    }

    for cmd in [
        vec!["report", "--metrics", "t1/metrics.csv", "--world", "world", "--hashtags", "sim/cascades.jsonl", "--out", "rep"],
        vec!["calibrate", "--world", "world", "--hashtags", "sim/cascades.jsonl", "--models", "network-only", "--out", "cal"],
    ] {
        let o = cascadelab(dir, &cmd);
        assert!(o.status.success(), "{cmd:?}: {}", stderr(&o));
    }
    let by_model = fs::read_to_string(dir.join("rep/cmi_by_model.csv")).unwrap();
    assert_eq!(by_model.lines().count(), 4);
    assert!(dir.join("rep/cmi_by_size_quintile.csv").is_file());
}

#[test]
fn evaluate_with_empty_empirical_input_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("s.jsonl"), "{\"tag\":\"x\",\"seeds\":[\"u0\"],\"events\":[]}\n").unwrap();
    fs::write(dir.join("e.jsonl"), "").unwrap();
    let o = cascadelab(dir, &["evaluate", "--sim", "s.jsonl", "--emp", "e.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.trim().lines().count(), 1, "{err}");
    assert!(err.contains("e.jsonl") && err.contains("empty"), "{err}");
}

#[test]
fn usage_and_config_errors_exit_1_with_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("bad.ini"), "[world]\nhomophily = 3\n").unwrap();
    fs::write(dir.join("unknown.ini"), "[world]\ncolour = red\n").unwrap();
    for args in [
        vec!["trial", "--no-such-flag"],
        vec!["frobnicate"],
        vec!["synth", "--config", "missing.ini", "--out", "w"],
        vec!["synth", "--config", "bad.ini", "--out", "w"],
        vec!["synth", "--config", "unknown.ini", "--out", "w"],
        vec!["trial", "--world", "nowhere", "--hashtags", "h.jsonl"],
    ] {
        let o = cascadelab(dir, &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.trim().lines().count(), 1, "{args:?}: {err}");
    }
    let o = cascadelab(dir, &["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn jobs_env_var_is_honored_and_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cascadelab"))
        .current_dir(tmp.path())
        .env("CASCADELAB_JOBS", "0")
        .args(["synth", "--out", "w"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_cascadelab"))
        .current_dir(tmp.path())
        .env("CASCADELAB_JOBS", "1")
        .args(["synth", "--out", "w"])
        .output()
        .unwrap();
    assert!(o.status.success());
}
