//! Runs the experiment at a reduced size and prints its checks and summary.
//! Extra `KEY=VALUE` arguments are applied as config overrides.
use dirichlet_lil::experiments::{chain::run_chain_increments, resolve_config, summary_json, ChainConfig};

fn main() -> dirichlet_lil::Result<()> {
    let overrides: Vec<String> = std::iter::once("run.paths=200".to_string()).chain(std::env::args().skip(1)).collect();
    let cfg: ChainConfig = resolve_config(None, &overrides)?;
    let out = run_chain_increments(&cfg)?;
    for c in &out.record.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: observed {:.6} limit {:.6}", c.name, c.observed, c.limit);
    }
    print!("{}", summary_json(&out.record)?);
    Ok(())
}
