//! Runs the experiment at a reduced size and prints its checks and summary.
//! Extra `KEY=VALUE` arguments are applied as config overrides.
//! The large-deviation lower bound exceeds the true tail at these thresholds,
//! so the two `ld_lower` checks report FAIL.
use dirichlet_lil::experiments::{tail::run_tail_sandwich, resolve_config, summary_json, TailConfig};

fn main() -> dirichlet_lil::Result<()> {
    let overrides: Vec<String> = ["run.paths=5000", "plain_paths=50000"].map(String::from).into_iter().chain(std::env::args().skip(1)).collect();
    let cfg: TailConfig = resolve_config(None, &overrides)?;
    let out = run_tail_sandwich(&cfg)?;
    for c in &out.record.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: observed {:.6} limit {:.6}", c.name, c.observed, c.limit);
    }
    print!("{}", summary_json(&out.record)?);
    Ok(())
}
