//! Frozen-seed regressions. Refresh with `DLIL_BLESS=1 cargo test --test regression`.

use std::path::PathBuf;

use dirichlet_lil::experiments::{clt, lil, resolve_config, CltConfig, LilConfig};
use dirichlet_lil::golden::check_or_bless;
use dirichlet_lil::rng::{derive_seed, SignPath};
use dirichlet_lil::series::{eval_truncated, plan_truncation, SigmaPoint};
use dirichlet_lil::TruncationPlan;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check(name: &str, values: Vec<(String, f64)>) {
    if let Err(e) = check_or_bless(&golden(name), &values) {
        panic!("{name}:\n{e}");
    }
}

#[test]
fn truncated_series_at_fixed_seeds() {
    let sigma = SigmaPoint::from_sigma(0.75).unwrap();
    let plan = plan_truncation(sigma, 0.5, 1 << 40).unwrap();
    let plan = TruncationPlan { terms: 1_000_000, ..plan };
    let values = (0..4)
        .map(|i| {
            let r = eval_truncated(&SignPath::new(derive_seed(42, i)), sigma, &plan);
            (format!("seed42_path{i}"), r.value)
        })
        .collect();
    check("eval_truncated.golden", values);
}

#[test]
fn lil_running_max() {
    let cfg: LilConfig = resolve_config(None, &["run.paths=200".into()]).unwrap();
    let out = lil::run_lil_subsequence(&cfg).unwrap();
    let first = out.record.summary["running_max_first_paths"].as_array().unwrap().clone();
    let mut values: Vec<(String, f64)> = first
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("path{i}"), v.as_f64().unwrap()))
        .collect();
    values.push(("mean".into(), out.record.summary["running_max_mean"].as_f64().unwrap()));
    check("lil_running_max.golden", values);
}

#[test]
fn clt_ks_per_seed() {
    let values = [1u64, 2, 3]
        .iter()
        .map(|&seed| {
            let cfg: CltConfig = resolve_config(
                None,
                &[format!("run.seed={seed}"), "run.paths=2000".into(), "sigma=0.75".into()],
            )
            .unwrap();
            let out = clt::run_clt(&cfg).unwrap();
            (format!("seed{seed}"), out.record.summary["ks"].as_f64().unwrap())
        })
        .collect();
    check("clt_ks.golden", values);
}
