//! Seeded Monte Carlo studies and their persisted records.
//!
//! Every experiment is a pure function of its resolved configuration: path
//! `i` uses the seed `derive_seed(run.seed, i)`, per-path results are
//! collected in index order and reduced on one thread, so the summary is
//! bit-identical for any worker count. Wall-clock time lives in a separate
//! timing file.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{plan_truncation, SigmaPoint, TruncationPlan};
use crate::stream::StreamConfig;

pub mod chain;
pub mod clt;
pub mod lil;
pub mod split;
pub mod tail;

pub use chain::ChainConfig;
pub use clt::CltConfig;
pub use lil::LilConfig;
pub use split::SplitConfig;
pub use tail::TailConfig;

/// Stated in every record.
pub const DESK_SCALE_NOTE: &str = "Desk-scale study: the almost-sure limsup statement is asymptotic \
and is not verified here. The checks below are the finite-k inequalities the argument is built \
from, evaluated on truncated series with certified tail variance, plus trend reporting.";

/// Settings shared by every experiment (the `[run]` table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output file stem; defaults to the experiment name.
    pub name: String,
    pub seed: u64,
    pub paths: u64,
    /// Largest truncation `M` a plan may use (terms represented, not evaluated).
    pub term_budget: u64,
    /// Certified tail variance allowed, as a fraction of `𝔼F(σ)²`.
    pub target_fraction: f64,
    pub stream: StreamConfig,
    /// Write the per-path CSV.
    pub write_paths: bool,
}

impl RunConfig {
    pub fn new(name: &str, paths: u64, term_budget: u64, target_fraction: f64) -> Self {
        Self {
            name: name.to_string(),
            seed: 42,
            paths,
            term_budget,
            target_fraction,
            stream: StreamConfig::default(),
            write_paths: true,
        }
    }
}

/// One assertion with its slack made explicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    /// The value `observed` is compared against, slack included.
    pub limit: f64,
    pub slack: f64,
    pub rule: String,
}

impl Check {
    /// Passes when `observed <= bound + slack`.
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64, slack: f64, rule: &str) -> Self {
        let limit = bound + slack;
        Self {
            name: name.into(),
            passed: observed <= limit,
            observed,
            limit,
            slack,
            rule: rule.to_string(),
        }
    }

    /// Passes when `observed >= bound - slack`.
    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64, slack: f64, rule: &str) -> Self {
        let limit = bound - slack;
        Self {
            name: name.into(),
            passed: observed >= limit,
            observed,
            limit,
            slack,
            rule: rule.to_string(),
        }
    }
}

/// The `(σ, term_budget, tail fraction)` triple of one truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub u: f64,
    pub sigma: f64,
    pub term_budget: u64,
    pub terms: u64,
    pub log_required_terms: f64,
    pub target_fraction: f64,
    pub achieved_fraction: f64,
    pub feasible: bool,
}

impl From<&TruncationPlan> for Feasibility {
    fn from(p: &TruncationPlan) -> Self {
        Self {
            u: p.u,
            sigma: p.sigma().sigma(),
            term_budget: 0,
            terms: p.terms,
            log_required_terms: p.log_required_terms,
            target_fraction: p.target_fraction,
            achieved_fraction: p.achieved_fraction,
            feasible: p.feasible,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Accounting {
    pub paths: u64,
    /// Σ over paths of the truncation length `M` represented.
    pub terms_represented: f64,
    /// Σ over paths of exact terms plus blocks actually drawn.
    pub terms_evaluated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub name: String,
    pub seed: u64,
    /// Fully resolved configuration; re-running it reproduces this record.
    pub config: serde_json::Value,
    pub notes: Vec<String>,
    pub feasibility: Vec<Feasibility>,
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
    pub accounting: Accounting,
    pub passed: bool,
}

/// Per-path table written as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PathTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        let mut line = String::new();
        for r in &self.rows {
            line.clear();
            for (i, v) in r.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&v.to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub paths: PathTable,
}

pub(crate) struct RecordBuilder {
    experiment: &'static str,
    run: RunConfig,
    config: serde_json::Value,
    pub notes: Vec<String>,
    pub feasibility: Vec<Feasibility>,
    pub checks: Vec<Check>,
    pub accounting: Accounting,
}

impl RecordBuilder {
    pub fn new<C: Serialize>(experiment: &'static str, run: &RunConfig, cfg: &C) -> Result<Self> {
        Ok(Self {
            experiment,
            run: run.clone(),
            config: serde_json::to_value(cfg)?,
            notes: vec![DESK_SCALE_NOTE.to_string()],
            feasibility: Vec::new(),
            checks: Vec::new(),
            accounting: Accounting::default(),
        })
    }

    pub fn plan(&mut self, sigma: SigmaPoint) -> Result<TruncationPlan> {
        let plan = plan_truncation(sigma, self.run.target_fraction, self.run.term_budget)?;
        self.feasibility.push(Feasibility {
            term_budget: self.run.term_budget,
            ..Feasibility::from(&plan)
        });
        Ok(plan)
    }

    pub fn feasible_plan(&mut self, sigma: SigmaPoint) -> Result<TruncationPlan> {
        let plan = self.plan(sigma)?;
        if !plan.feasible {
            return Err(Error::Infeasible {
                u: plan.u,
                terms: plan.terms,
                target_fraction: plan.target_fraction,
                achieved_fraction: plan.achieved_fraction,
            });
        }
        Ok(plan)
    }

    pub fn account(&mut self, paths: u64, represented: u64, evaluated: u64) {
        self.accounting.paths += paths;
        self.accounting.terms_represented += paths as f64 * represented as f64;
        self.accounting.terms_evaluated += paths as f64 * evaluated as f64;
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn finish<S: Serialize>(self, summary: &S, paths: PathTable) -> Result<RunOutput> {
        let passed = self.checks.iter().all(|c| c.passed);
        Ok(RunOutput {
            record: RunRecord {
                experiment: self.experiment.to_string(),
                name: self.run.name.clone(),
                seed: self.run.seed,
                config: self.config,
                notes: self.notes,
                feasibility: self.feasibility,
                checks: self.checks,
                summary: serde_json::to_value(summary)?,
                accounting: self.accounting,
                passed,
            },
            paths: if self.run.write_paths { paths } else { PathTable::default() },
        })
    }
}

/// Maps `f` over path indices `0..n` in parallel, returning results in index order.
pub(crate) fn map_paths<T: Send>(n: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// The experiments addressable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Clt,
    LilSub,
    Chain,
    TailSandwich,
    Split,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Clt => "clt",
            Self::LilSub => "lil-sub",
            Self::Chain => "chain",
            Self::TailSandwich => "tail-sandwich",
            Self::Split => "split",
        }
    }

    /// Resolves a configuration (defaults, then file, then overrides) and runs it.
    pub fn run(&self, file: Option<&str>, overrides: &[String], workers: usize) -> Result<RunOutput> {
        fn go<C>(file: Option<&str>, overrides: &[String], workers: usize, f: fn(&C) -> Result<RunOutput>) -> Result<RunOutput>
        where
            C: Serialize + DeserializeOwned + Default + Sync,
        {
            let cfg: C = resolve_config(file, overrides)?;
            with_workers(workers, || f(&cfg))?
        }
        match self {
            Self::Clt => go(file, overrides, workers, clt::run_clt),
            Self::LilSub => go(file, overrides, workers, lil::run_lil_subsequence),
            Self::Chain => go(file, overrides, workers, chain::run_chain_increments),
            Self::TailSandwich => go(file, overrides, workers, tail::run_tail_sandwich),
            Self::Split => go(file, overrides, workers, split::run_split_independence),
        }
    }
}

/// Defaults, overlaid by the TOML text `file`, overlaid by `key=value`
/// overrides (dotted keys address nested tables; values are parsed as TOML,
/// falling back to a bare string). Unknown keys are rejected.
pub fn resolve_config<C: Serialize + DeserializeOwned + Default>(
    file: Option<&str>,
    overrides: &[String],
) -> Result<C> {
    let cfg_err = |e: &dyn std::fmt::Display| Error::Config(e.to_string());
    let mut table = toml::Table::try_from(C::default()).map_err(|e| cfg_err(&e))?;
    if let Some(text) = file {
        let user: toml::Table = toml::from_str(text).map_err(|e| cfg_err(&e))?;
        merge(&mut table, user);
    }
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {ov:?} is not key=value")))?;
        let value = parse_value(raw.trim());
        set_dotted(&mut table, key.trim(), value)?;
    }
    toml::Value::Table(table).try_into().map_err(|e| cfg_err(&e))
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty override key {key:?}")))?;
    let mut t = table;
    for p in parts {
        let entry = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = match entry {
            toml::Value::Table(inner) => inner,
            _ => return Err(Error::Config(format!("override {key:?}: {p} is not a table"))),
        };
    }
    t.insert(last.to_string(), value);
    Ok(())
}

/// Paths of the three files written for one run.
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub summary: PathBuf,
    pub paths: Option<PathBuf>,
    pub timing: PathBuf,
}

/// Summary JSON text, pretty-printed with a trailing newline.
pub fn summary_json(record: &RunRecord) -> Result<String> {
    Ok(serde_json::to_string_pretty(record)? + "\n")
}

/// Writes `{name}-{seed}.summary.json`, `.paths.csv` and `.timing.json` into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput, elapsed: Duration, workers: usize) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir)?;
    let stem = format!("{}-{}", out.record.name, out.record.seed);
    let summary = dir.join(format!("{stem}.summary.json"));
    std::fs::write(&summary, summary_json(&out.record)?)?;
    let paths = if out.paths.header.is_empty() {
        None
    } else {
        let p = dir.join(format!("{stem}.paths.csv"));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&p)?);
        out.paths.write_csv(&mut f)?;
        f.flush()?;
        Some(p)
    };
    let timing = dir.join(format!("{stem}.timing.json"));
    let t = serde_json::json!({
        "wall_clock_seconds": elapsed.as_secs_f64(),
        "workers": workers,
    });
    std::fs::write(&timing, serde_json::to_string_pretty(&t)? + "\n")?;
    Ok(OutputFiles {
        summary,
        paths,
        timing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_tables_and_unknown_keys_fail() {
        let c: CltConfig = resolve_config(None, &["run.seed=7".into(), "sigma=0.8".into()]).unwrap();
        assert_eq!(c.run.seed, 7);
        assert_eq!(c.sigma, 0.8);
        let c: CltConfig =
            resolve_config(Some("[run]\npaths = 12\n[run.stream]\nexact_head = 8\n"), &[]).unwrap();
        assert_eq!(c.run.paths, 12);
        assert_eq!(c.run.stream.exact_head, 8);
        assert_eq!(c.run.stream.block_ratio, StreamConfig::default().block_ratio);
        assert!(resolve_config::<CltConfig>(None, &["bogus=1".into()]).is_err());
        assert!(resolve_config::<CltConfig>(None, &["run.bogus=1".into()]).is_err());
        assert!(resolve_config::<CltConfig>(None, &["noequals".into()]).is_err());
    }

    #[test]
    fn csv_has_header_and_round_trip_numbers() {
        let mut t = PathTable::new(&["path", "value"]);
        t.rows.push(vec![0.0, 0.1]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "path,value\n0,0.1\n");
    }
}
