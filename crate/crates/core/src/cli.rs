//! The `dlil` command line: experiment runners, a closed-form bound
//! calculator and a schedule inspector.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::bounds::{
    default_t0_tol, h_of_t, hoeffding_bound, ld_exponent, ld_lower_bound, mgf_sandwich, solve_t0,
};
use crate::error::{Error, Result};
use crate::experiments::{write_outputs, ExperimentKind};
use crate::schedules::{sigma_seq, split_points, Schedule, ScheduleKind};
use crate::series::{plan_truncation, variance, zeta_bracket_budgeted, SigmaPoint, DEFAULT_TERM_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dlil", version, about = "Law of the iterated logarithm lab for random Dirichlet series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gaussian behaviour of the normalized series at one σ.
    Clt(ExperimentArgs),
    /// LIL statistic along the upper schedule.
    LilSub(ExperimentArgs),
    /// Dyadic chaining increments between σ_k and σ_{k-1}.
    Chain(ExperimentArgs),
    /// Importance-sampled tails against the lower and upper bounds.
    TailSandwich(ExperimentArgs),
    /// Split into head, middle and tail blocks at consecutive σ_k.
    Split(ExperimentArgs),
    /// Evaluate a closed-form bound or certified bracket.
    Bounds(BoundsArgs),
    /// Print u_k and σ_k of a schedule.
    Schedule(ScheduleArgs),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set run.paths=1000`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, env = "DLIL_OUT_DIR", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<u64>,
    /// Shorthand for `--set sigma=…` (clt, tail-sandwich).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Print the summary JSON to stdout as well.
    #[arg(long)]
    pub print: bool,
}

impl ExperimentArgs {
    fn overrides(&self) -> Vec<String> {
        let mut ov = Vec::new();
        if let Some(s) = self.seed {
            ov.push(format!("run.seed={s}"));
        }
        if let Some(p) = self.paths {
            ov.push(format!("run.paths={p}"));
        }
        if let Some(s) = self.sigma {
            ov.push(format!("sigma={s:?}"));
        }
        ov.extend(self.overrides.iter().cloned());
        ov
    }
}

#[derive(Debug, Args)]
#[group(id = "mode", required = true, multiple = false)]
pub struct BoundMode {
    /// One-sided Hoeffding bound exp(-λ²/(2 Σa²)); needs --sum-sq, --lambda.
    #[arg(long)]
    pub hoeffding: bool,
    /// MGF sandwich of 𝔼 exp(t F̄); needs --sigma, --t.
    #[arg(long)]
    pub mgf: bool,
    /// Tilt function h(t); needs --sigma, --t.
    #[arg(long)]
    pub h: bool,
    /// Solve h(t₀) = target; needs --sigma, --target.
    #[arg(long)]
    pub t0: bool,
    /// Large-deviation lower bound; needs --delta, --f, --lambda, --eps.
    #[arg(long)]
    pub ld: bool,
    /// Divergence exponent; needs --gamma, --lambda, --delta.
    #[arg(long)]
    pub exponent: bool,
    /// Certified bracket of ζ(s); needs --s.
    #[arg(long)]
    pub zeta: bool,
    /// Certified bracket of 𝔼F(σ)²; needs --sigma.
    #[arg(long)]
    pub variance: bool,
    /// Truncation plan; needs --sigma, optional --fraction, --budget.
    #[arg(long)]
    pub plan: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub mode: BoundMode,
    #[arg(long)]
    pub sum_sq: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub f: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Partial-sum length for --zeta (default: chosen automatically).
    #[arg(long)]
    pub terms: Option<u64>,
    #[arg(long, default_value_t = 0.01)]
    pub fraction: f64,
    #[arg(long, default_value_t = DEFAULT_TERM_BUDGET)]
    pub budget: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub kind: ScheduleKind,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long)]
    pub k: u64,
    /// Also print the split points (lower schedule only).
    #[arg(long)]
    pub split: bool,
    #[arg(long)]
    pub json: bool,
}

/// Parses `args` and runs; diagnostics go to `err`.
pub fn main_with<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "dlil: {e}");
            if e.is_configuration() {
                EXIT_CONFIG
            } else {
                EXIT_CHECK_FAILED
            }
        }
    }
}

pub fn run(cli: &Cli, out: &mut impl Write) -> Result<i32> {
    match &cli.command {
        Command::Clt(a) => run_experiment(ExperimentKind::Clt, a, out),
        Command::LilSub(a) => run_experiment(ExperimentKind::LilSub, a, out),
        Command::Chain(a) => run_experiment(ExperimentKind::Chain, a, out),
        Command::TailSandwich(a) => run_experiment(ExperimentKind::TailSandwich, a, out),
        Command::Split(a) => run_experiment(ExperimentKind::Split, a, out),
        Command::Bounds(a) => {
            print_fields(out, &bounds(a)?, a.json)?;
            Ok(EXIT_OK)
        }
        Command::Schedule(a) => {
            print_fields(out, &schedule(a)?, a.json)?;
            Ok(EXIT_OK)
        }
    }
}

fn run_experiment(kind: ExperimentKind, a: &ExperimentArgs, out: &mut impl Write) -> Result<i32> {
    let text = a
        .config
        .as_ref()
        .map(|p| std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display()))))
        .transpose()?;
    let workers = a
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let start = Instant::now();
    let res = kind.run(text.as_deref(), &a.overrides(), workers)?;
    let files = write_outputs(&a.out, &res, start.elapsed(), workers)?;
    let rec = &res.record;
    if a.print {
        write!(out, "{}", crate::experiments::summary_json(rec)?)?;
    }
    for c in &rec.checks {
        writeln!(
            out,
            "{} {}: observed {} limit {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.observed,
            c.limit
        )?;
    }
    writeln!(out, "summary: {}", files.summary.display())?;
    if let Some(p) = &files.paths {
        writeln!(out, "paths: {}", p.display())?;
    }
    Ok(if rec.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn need(v: Option<f64>, flag: &str, mode: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("--{mode} needs --{flag}")))
}

fn sigma_arg(a: &BoundsArgs, mode: &str) -> Result<SigmaPoint> {
    SigmaPoint::from_sigma(need(a.sigma, "sigma", mode)?)
}

type Fields = Vec<(&'static str, Value)>;

fn bounds(a: &BoundsArgs) -> Result<Fields> {
    let m = &a.mode;
    Ok(if m.hoeffding {
        let v = hoeffding_bound(need(a.sum_sq, "sum-sq", "hoeffding")?, need(a.lambda, "lambda", "hoeffding")?)?;
        vec![("value", json!(v))]
    } else if m.mgf {
        let s = mgf_sandwich(sigma_arg(a, "mgf")?, need(a.t, "t", "mgf")?)?;
        vec![("lower", json!(s.lower)), ("upper", json!(s.upper))]
    } else if m.h {
        let t = need(a.t, "t", "h")?;
        let b = h_of_t(sigma_arg(a, "h")?, t, a.tol.unwrap_or(1e-12))?;
        vec![("lo", json!(b.lo())), ("hi", json!(b.hi()))]
    } else if m.t0 {
        let target = need(a.target, "target", "t0")?;
        let tm = solve_t0(sigma_arg(a, "t0")?, target, a.tol.unwrap_or(default_t0_tol(target)))?;
        vec![
            ("t0", json!(tm.t0)),
            ("residual", json!(tm.residual)),
            ("refined_upper", json!(tm.refined_upper)),
        ]
    } else if m.ld {
        let v = ld_lower_bound(
            need(a.delta, "delta", "ld")?,
            need(a.f, "f", "ld")?,
            need(a.lambda, "lambda", "ld")?,
            need(a.eps, "eps", "ld")?,
        )?;
        vec![("value", json!(v))]
    } else if m.exponent {
        let e = ld_exponent(
            need(a.gamma, "gamma", "exponent")?,
            need(a.lambda, "lambda", "exponent")?,
            need(a.delta, "delta", "exponent")?,
        )?;
        vec![("exponent", json!(e.exponent)), ("diverges", json!(e.diverges))]
    } else if m.zeta {
        let s = need(a.s, "s", "zeta")?;
        let terms = a.terms.unwrap_or(1 << 20);
        let z = zeta_bracket_budgeted(s, terms, a.budget)?;
        vec![("lo", json!(z.total.lo())), ("hi", json!(z.total.hi())), ("terms", json!(z.terms))]
    } else if m.variance {
        let v = variance(sigma_arg(a, "variance")?)?;
        vec![
            ("lo", json!(v.bracket.lo())),
            ("hi", json!(v.bracket.hi())),
            ("terms", json!(v.terms)),
            ("loose", json!(v.loose)),
        ]
    } else {
        let p = plan_truncation(sigma_arg(a, "plan")?, a.fraction, a.budget)?;
        vec![
            ("terms", json!(p.terms)),
            ("log_required_terms", json!(p.log_required_terms)),
            ("achieved_fraction", json!(p.achieved_fraction)),
            ("tail_std_bound", json!(p.tail_std_bound)),
            ("feasible", json!(p.feasible)),
        ]
    })
}

fn schedule(a: &ScheduleArgs) -> Result<Fields> {
    let sched = Schedule::new(a.kind, a.delta)?;
    let p = sigma_seq(&sched, a.k)?;
    let mut f = vec![("u", json!(p.u())), ("sigma", json!(p.sigma()))];
    if a.split {
        f.push(("split", serde_json::to_value(split_points(&sched, a.k)?)?));
    }
    Ok(f)
}

fn print_fields(out: &mut impl Write, fields: &Fields, as_json: bool) -> Result<()> {
    if as_json {
        let obj: serde_json::Map<String, Value> = fields.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&Value::Object(obj))?)?;
    } else if let [(_, v)] = fields.as_slice() {
        writeln!(out, "{v}")?;
    } else {
        for (k, v) in fields {
            writeln!(out, "{k} = {v}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(std::iter::once("dlil").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap() + &String::from_utf8(err).unwrap())
    }

    #[test]
    fn hoeffding_calculator() {
        let (code, out) = call(&["bounds", "--hoeffding", "--sum-sq", "1", "--lambda", "1"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "0.6065306597126334");
    }

    #[test]
    fn schedule_first_lower_point() {
        let (code, out) = call(&["schedule", "--kind", "lower", "--delta", "0.1", "--k", "1"]);
        assert_eq!(code, 0);
        let u = (-1.0f64).exp();
        assert!(out.contains(&format!("u = {u}")));
        assert!(out.contains(&format!("sigma = {}", 0.5 + u / 2.0)));
    }

    #[test]
    fn configuration_errors_exit_two() {
        assert_eq!(call(&["bounds", "--hoeffding", "--lambda", "1"]).0, 2);
        assert_eq!(call(&["bounds", "--hoeffding", "--zeta"]).0, 2);
        assert_eq!(call(&["schedule", "--kind", "sideways", "--k", "1"]).0, 2);
        assert_eq!(call(&["nope"]).0, 2);
    }
}
