//! The LIL statistic `R_k = F(σ_k)/√(2𝔼F² log log 𝔼F²)` along the upper
//! schedule: per-k exceedance against Hoeffding, sign symmetry, running max.

use serde::{Deserialize, Serialize};

use super::{map_paths, Check, PathTable, RecordBuilder, RunConfig, RunOutput};
use crate::bounds::hoeffding_bound;
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, SignPath};
use crate::schedules::{sigma_seq, Schedule, ScheduleKind};
use crate::series::{lil_scale_from_variance, LilScale, TruncationPlan};
use crate::stats::{frequency, moments};
use crate::stream::SharedTermPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LilConfig {
    pub run: RunConfig,
    pub delta: f64,
    pub k_first: u64,
    /// Last index to try; `0` means "until the first infeasible k".
    pub k_last: u64,
    /// Threshold `√(1+ε)` for the exceedance check.
    pub eps: f64,
    pub symmetry_thresholds: Vec<f64>,
}

impl Default for LilConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::new("lil-sub", 10_000, 9_000_000_000_000_000_000, 0.05),
            delta: 0.1,
            k_first: 1,
            k_last: 0,
            eps: 0.1,
            symmetry_thresholds: vec![0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub k: u64,
    pub u: f64,
    pub terms: u64,
    pub ef2_lo: f64,
    pub ef2_hi: f64,
    pub denom_lo: f64,
    pub denom_hi: f64,
    pub exceedance: f64,
    pub exceedance_bound: f64,
    /// `2·k^{-(1+ε)(1-δ)}`, the asymptotic shape of the bound.
    pub shape_prediction: f64,
    pub mean_r: f64,
    pub sd_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryRow {
    pub k: u64,
    pub threshold: f64,
    pub upper: f64,
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilSummary {
    pub ks: Vec<u64>,
    /// First k whose truncation does not fit the budget.
    pub frontier_k: Option<u64>,
    pub terms: u64,
    pub levels: Vec<LevelRow>,
    pub symmetry: Vec<SymmetryRow>,
    pub running_max_mean: f64,
    pub running_max_sd: f64,
    pub running_max_first_paths: Vec<f64>,
}

pub fn run_lil_subsequence(cfg: &LilConfig) -> Result<RunOutput> {
    let run = &cfg.run;
    let sched = Schedule::new(ScheduleKind::Upper, cfg.delta)?;
    let mut rec = RecordBuilder::new("lil-sub", run, cfg)?;
    let threshold = (1.0 + cfg.eps).sqrt();

    let mut ks = Vec::new();
    let mut plans: Vec<TruncationPlan> = Vec::new();
    let mut scales: Vec<LilScale> = Vec::new();
    let mut frontier = None;
    let last = if cfg.k_last == 0 { sched.k_max } else { cfg.k_last.min(sched.k_max) };
    for k in cfg.k_first..=last {
        let sigma = sigma_seq(&sched, k)?;
        let plan = rec.plan(sigma)?;
        if !plan.feasible {
            frontier = Some(k);
            break;
        }
        match lil_scale_from_variance(plan.variance) {
            Ok(scale) => {
                ks.push(k);
                plans.push(plan);
                scales.push(scale);
            }
            Err(Error::LoglogUndefined { variance_lo }) => rec.notes.push(format!(
                "k = {k} skipped: variance lower bound {variance_lo} does not exceed e"
            )),
            Err(e) => return Err(e),
        }
    }
    if ks.is_empty() {
        return Err(invalid("no feasible k in the requested range"));
    }
    let points: Vec<_> = plans.iter().map(|p| p.sigma()).collect();
    let terms = plans.iter().map(|p| p.terms).max().unwrap_or(1);
    let st = SharedTermPlan::new(&points, terms, run.stream)?;
    let values: Vec<Vec<f64>> = map_paths(run.paths, |i| st.eval(&SignPath::new(derive_seed(run.seed, i))));
    rec.account(run.paths, terms, st.head() + st.block_count() as u64);
    let n = values.len() as f64;

    let mut levels = Vec::new();
    let mut symmetry = Vec::new();
    for (j, &k) in ks.iter().enumerate() {
        let sc = scales[j];
        let f: Vec<f64> = values.iter().map(|v| v[j]).collect();
        let r: Vec<f64> = f.iter().map(|&x| x / sc.denom.mid()).collect();
        let lam = threshold * sc.denom.lo();
        let (p, _) = frequency(&f, |x| x.abs() >= lam);
        let bound = (2.0 * hoeffding_bound(sc.ef2.hi(), lam)?).min(1.0);
        let se = (bound * (1.0 - bound) / n).sqrt();
        rec.check(Check::at_most(
            format!("exceedance_k_{k}"),
            p,
            bound,
            3.0 * se,
            "P(|F| >= sqrt(1+eps)*lo(denom)) <= 2*exp(-(1+eps)*lo(denom)^2/(2*hi(EF^2))) + 3*sqrt(bound*(1-bound)/paths)",
        ));
        for &th in &cfg.symmetry_thresholds {
            let (up, _) = frequency(&r, |x| x >= th);
            let (dn, _) = frequency(&r, |x| x <= -th);
            let se = ((up * (1.0 - up) + dn * (1.0 - dn) + 2.0 * up * dn) / n).sqrt();
            rec.check(Check::at_most(
                format!("symmetry_k_{k}_theta_{th}"),
                (up - dn).abs(),
                0.0,
                3.0 * se,
                "|P(R >= theta) - P(R <= -theta)| <= 3*se of the difference",
            ));
            symmetry.push(SymmetryRow {
                k,
                threshold: th,
                upper: up,
                lower: dn,
            });
        }
        let m = moments(&r);
        levels.push(LevelRow {
            k,
            u: plans[j].u,
            terms: plans[j].terms,
            ef2_lo: sc.ef2.lo(),
            ef2_hi: sc.ef2.hi(),
            denom_lo: sc.denom.lo(),
            denom_hi: sc.denom.hi(),
            exceedance: p,
            exceedance_bound: bound,
            shape_prediction: 2.0 * (k as f64).powf(-(1.0 + cfg.eps) * (1.0 - cfg.delta)),
            mean_r: m.mean,
            sd_r: m.variance.sqrt(),
        });
    }

    let mut header = vec!["path".to_string()];
    header.extend(ks.iter().map(|k| format!("r_k{k}")));
    header.push("running_max".into());
    let mut table = PathTable {
        header,
        rows: Vec::with_capacity(values.len()),
    };
    let mut running = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let r: Vec<f64> = v.iter().zip(&scales).map(|(x, s)| x / s.denom.mid()).collect();
        let mx = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        running.push(mx);
        let mut row = vec![i as f64];
        row.extend(r);
        row.push(mx);
        table.rows.push(row);
    }
    let rm = moments(&running);
    let summary = LilSummary {
        ks: ks.clone(),
        frontier_k: frontier,
        terms,
        levels,
        symmetry,
        running_max_mean: rm.mean,
        running_max_sd: rm.variance.sqrt(),
        running_max_first_paths: running.iter().take(8).copied().collect(),
    };
    rec.finish(&summary, table)
}
