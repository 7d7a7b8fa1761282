use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hypfpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypfpp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

const FREE_LIFTS: &str = r#"
model = "free:2"
radius = 5
replications = 6
master_seed = 11
experiment = "exceptional-fraction"
[params]
n_values = [2, 3, 4, 5]
"#;

const OCTA_TAIL: &str = r#"
model = "tess:8,8"
radius = 5
replications = 12
master_seed = 5
bootstrap_draws = 100
experiment = "r-tail"
[params]
c = 2
candidates = 6
pair_budget = 8
"#;

#[test]
fn build_writes_ball_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let ball = dir.path().join("free.hypb");
    let out = hypfpp(&[
        "build",
        "--model",
        "free:2",
        "--radius",
        "3",
        "--out",
        ball.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("free.json")).unwrap()).unwrap();
    assert_eq!(summary["sphere_sizes"], serde_json::json!([1, 4, 12, 36]));
    assert_eq!(summary["valence"], 4);
    assert_eq!(summary["format"], "HYPB1");
}

#[test]
fn build_rejects_euclidean_and_oversized_balls() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.hypb");
    let p = path.to_str().unwrap();
    let out = hypfpp(&["build", "--model", "tess:3,3", "--radius", "3", "--out", p]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("not hyperbolic"), "{}", stderr(&out));
    let out = hypfpp(&["build", "--model", "what", "--radius", "3", "--out", p]);
    assert_eq!(code(&out), 2);
    let out = hypfpp(&[
        "build",
        "--model",
        "tess:8,8",
        "--radius",
        "6",
        "--out",
        p,
        "--cap-vertices",
        "1000",
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypfpp(&[
        "run",
        "r-tail",
        "--config",
        dir.path().join("absent.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("absent.toml"));
}

#[test]
fn experiment_name_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "lifts.toml", FREE_LIFTS);
    let out = hypfpp(&[
        "run",
        "wandering",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let out = hypfpp(&[
        "run",
        "bogus",
        "--config",
        &config,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn free_group_lift_run_is_all_zero_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "lifts.toml", FREE_LIFTS);
    let out_dir = dir.path().join("out");
    let out = hypfpp(&[
        "run",
        "exceptional-fraction",
        "--config",
        &config,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("exceptional-fraction.per_n.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,window,population,mean,std_err"));
    for line in lines {
        assert_eq!(line.split(',').nth(3), Some("0"), "{line}");
    }
    assert!(out_dir.join("exceptional-fraction.plot.py").exists());
    let verify = hypfpp(&["verify", out_dir.to_str().unwrap()]);
    assert_eq!(code(&verify), 0, "{}", stderr(&verify));
}

#[test]
fn reruns_reproduce_hashes_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "tail.toml", OCTA_TAIL);
    let mut manifests = Vec::new();
    for (i, workers) in ["1", "1", "3"].iter().enumerate() {
        let out_dir = dir.path().join(format!("out{i}"));
        let out = hypfpp(&[
            "run",
            "r-tail",
            "--config",
            &config,
            "--out",
            out_dir.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
        manifests.push(m["runs"]["r-tail"]["artifacts"].clone());
    }
    assert_eq!(manifests[0], manifests[1]);
    assert_eq!(manifests[0], manifests[2]);
}

#[test]
fn seed_override_changes_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let body = FREE_LIFTS.replace("free:2", "tess:8,8");
    let config = write_config(dir.path(), "lifts.toml", &body);
    let run = |sub: &str, extra: &[&str]| {
        let out_dir = dir.path().join(sub);
        let mut args = vec![
            "run",
            "exceptional-fraction",
            "--config",
            &config,
            "--out",
            out_dir.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        assert_eq!(code(&hypfpp(&args)), 0);
        let text = fs::read_to_string(out_dir.join("exceptional-fraction.record.json")).unwrap();
        serde_json::from_str::<serde_json::Value>(&text).unwrap()
    };
    let a = run("a", &[]);
    let b = run("b", &["--seed-override", "99"]);
    assert_eq!(b["config"]["master_seed"], 99);
    assert_eq!(b["provenance"]["master_seed"], 99);
    assert_ne!(a["replications"], b["replications"]);
}

#[test]
fn cached_ball_is_used_and_listed() {
    let dir = tempfile::tempdir().unwrap();
    let ball = dir.path().join("octa.hypb");
    assert_eq!(
        code(&hypfpp(&[
            "build",
            "--model",
            "tess:8,8",
            "--radius",
            "5",
            "--out",
            ball.to_str().unwrap()
        ])),
        0
    );
    let config = write_config(dir.path(), "tail.toml", OCTA_TAIL);
    let out_dir = dir.path().join("out");
    let out = hypfpp(&[
        "run",
        "r-tail",
        "--config",
        &config,
        "--out",
        out_dir.to_str().unwrap(),
        "--ball",
        ball.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["runs"]["r-tail"]["ball"]["path"], ball.to_str().unwrap());
}

#[test]
fn corrupted_survival_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "tail.toml", OCTA_TAIL);
    let out_dir = dir.path().join("out");
    let out = hypfpp(&[
        "run",
        "r-tail",
        "--config",
        &config,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let path = out_dir.join("r-tail.record.json");
    let mut record: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    record["aggregate"]["tail"]["survival"][3] = serde_json::json!(1.0);
    record["aggregate"]["tail"]["survival"][1] = serde_json::json!(0.1);
    fs::write(&path, serde_json::to_string_pretty(&record).unwrap()).unwrap();
    let verify = hypfpp(&["verify", out_dir.to_str().unwrap()]);
    assert_eq!(code(&verify), 5);
    assert!(
        stderr(&verify).contains("survival monotonicity"),
        "{}",
        stderr(&verify)
    );
}

#[test]
fn mixed_versions_pass_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let lifts = write_config(dir.path(), "lifts.toml", FREE_LIFTS);
    let tail = write_config(dir.path(), "tail.toml", OCTA_TAIL);
    for (name, config) in [("exceptional-fraction", &lifts), ("r-tail", &tail)] {
        let out = hypfpp(&[
            "run",
            name,
            "--config",
            config,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let path = out_dir.join("r-tail.record.json");
    let mut record: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    record["provenance"]["tool_version"] = serde_json::json!("0.0.1");
    fs::write(&path, serde_json::to_string_pretty(&record).unwrap()).unwrap();
    let verify = hypfpp(&["verify", out_dir.to_str().unwrap()]);
    assert_eq!(code(&verify), 0, "{}", stderr(&verify));
    assert!(stderr(&verify).contains("version 0.0.1"));
}

#[test]
fn mass_certification_failure_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let body = FREE_LIFTS
        .replace("free:2", "tess:8,8")
        .replace("radius = 5", "radius = 4\nscope = \"infinite\"")
        .replace("[2, 3, 4, 5]", "[3, 4]");
    let config = write_config(dir.path(), "inf.toml", &body);
    let out_dir = dir.path().join("out");
    let out = hypfpp(&[
        "run",
        "exceptional-fraction",
        "--config",
        &config,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(out_dir.join("exceptional-fraction.record.json").exists());
}
