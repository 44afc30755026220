use std::process::Command;

fn dlil() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dlil"))
}

fn stdout(args: &[&str]) -> (i32, String) {
    let o = dlil().args(args).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8(o.stdout).unwrap())
}

#[test]
fn bound_calculator() {
    let (code, out) = stdout(&["bounds", "--hoeffding", "--sum-sq", "1", "--lambda", "1"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("0.60653"), "{out}");
    let (code, out) = stdout(&["bounds", "--exponent", "--gamma", "0.2", "--lambda", "0.05", "--delta", "0.05", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["diverges"], true);
    let (code, out) = stdout(&["bounds", "--zeta", "--s", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("lo = 1.64493"), "{out}");
}

#[test]
fn schedule_lookup() {
    let (code, out) = stdout(&["schedule", "--kind", "lower", "--delta", "0.1", "--k", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("u = 0.36787944117144233"), "{out}");
    assert!(out.contains("sigma = 0.6839397205857212"), "{out}");
}

#[test]
fn clt_writes_summary_and_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = dlil()
            .args(["clt", "--sigma", "0.75", "--paths", "500", "--seed", "42", "--workers", workers])
            .args(["--set", "ks_threshold=0.1", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
        std::fs::read_to_string(out.join("clt-42.summary.json")).unwrap()
    };
    let a = run("1", "a");
    let b = run("4", "b");
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(v["summary"]["ks"].as_f64().unwrap() > 0.0);
    assert_eq!(v["config"]["run"]["seed"], 42);
    assert!(dir.path().join("a/clt-42.paths.csv").exists());
    assert!(dir.path().join("a/clt-42.timing.json").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = dlil()
        .args(["split", "--paths", "100"])
        .env("DLIL_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("split-42.summary.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    // unknown key
    assert_eq!(dlil().args(["clt", "--set", "bogus=1", "--out", d]).output().unwrap().status.code(), Some(2));
    // infeasible truncation is a configuration error
    let o = dlil().args(["clt", "--sigma", "0.51", "--paths", "10", "--out", d]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
    // the large-deviation lower bound fails at a = 1
    let o = dlil()
        .args(["tail-sandwich", "--paths", "2000", "--set", "thresholds=[1.0]", "--set", "plain_compare=[]", "--out", d])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL ld_lower_a_1"));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "sigma = 0.8\nks_threshold = 0.5\n[run]\nname = \"fromfile\"\npaths = 50\n").unwrap();
    let o = dlil()
        .args(["clt", "--config"])
        .arg(&cfg)
        .args(["--set", "run.seed=3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fromfile-3.summary.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["sigma"], 0.8);
    assert_eq!(v["config"]["run"]["paths"], 50);
}
