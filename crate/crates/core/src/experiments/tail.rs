//! Importance-sampled tails `P(F̄(σ) >= a)` between the large-deviation
//! lower bound and the Hoeffding upper bound.

use serde::{Deserialize, Serialize};

use super::{Check, PathTable, RecordBuilder, RunConfig, RunOutput};
use crate::bounds::{default_t0_tol, hoeffding_bound, ld_lower_bound, solve_t0_with, tilt_target_limit};
use crate::error::Result;
use crate::rng::derive_seed;
use crate::series::SigmaPoint;
use crate::stream::{SharedTermPlan, StreamConfig};
use crate::tilted::{plain_estimate, plain_values, summarize_weighted, tilted_draws, PlainEstimate, TailEvent, TiltedSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    /// `run.paths` is the tilted path count per threshold.
    pub run: RunConfig,
    pub sigma: f64,
    pub thresholds: Vec<f64>,
    /// Tilt target is `a·(1 + margin)`.
    pub margin: f64,
    /// `λ` and `ε` of the large-deviation bound (with `δ = 1`, `f = a`).
    pub lambda: f64,
    pub eps: f64,
    pub plain_paths: u64,
    /// Thresholds also estimated by plain Monte Carlo.
    pub plain_compare: Vec<f64>,
}

impl Default for TailConfig {
    fn default() -> Self {
        let mut run = RunConfig::new("tail-sandwich", 100_000, 10_000_000_000, 0.01);
        run.stream = StreamConfig {
            exact_head: 1024,
            block_ratio: 0.05,
        };
        Self {
            run,
            sigma: 0.6,
            thresholds: vec![1.0, 2.0],
            margin: 0.0,
            lambda: 0.1,
            eps: 0.1,
            plain_paths: 1_000_000,
            plain_compare: vec![2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainComparison {
    pub plain: PlainEstimate,
    /// `|p̂_IS − p̂_plain| / √(se_IS² + se_plain²)`.
    pub z: f64,
    /// Per-path variance of the plain indicator over that of the weighted one.
    pub variance_reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub a: f64,
    pub target: f64,
    pub t0: f64,
    pub t0_residual: f64,
    pub ld_lower: f64,
    pub hoeffding_upper: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub hits: u64,
    pub ess: f64,
    pub low_ess: bool,
    pub mean_lr: f64,
    pub mean_lr_se: f64,
    /// Mean of `F̄` under the tilted measure (near the tilt target).
    pub tilted_mean: f64,
    pub plain: Option<PlainComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub sigma: f64,
    pub u: f64,
    pub terms: u64,
    pub variance_mid: f64,
    /// Model `Σ aₙ²` in units of `mid 𝔼F²`; the Hoeffding bound uses 1.
    pub model_sum_sq: f64,
    pub quantization_sd: f64,
    pub target_limit: f64,
    pub rows: Vec<SandwichRow>,
    pub skipped: Vec<f64>,
}

pub fn run_tail_sandwich(cfg: &TailConfig) -> Result<RunOutput> {
    let run = &cfg.run;
    let sigma = SigmaPoint::from_sigma(cfg.sigma)?;
    let mut rec = RecordBuilder::new("tail-sandwich", run, cfg)?;
    let plan = rec.feasible_plan(sigma)?;
    let var = plan.variance;
    let norm = var.mid().sqrt();
    let st = SharedTermPlan::new(&[sigma], plan.terms, run.stream)?;
    let evaluated = st.head() + st.block_count() as u64;
    let model_sum_sq = st.model_variance(0) / var.mid();
    let limit = tilt_target_limit(var);

    let plain = if cfg.plain_compare.is_empty() || cfg.plain_paths == 0 {
        Vec::new()
    } else {
        rec.account(cfg.plain_paths, plan.terms, evaluated);
        plain_values(&st, norm, cfg.plain_paths, run.seed)
    };

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut table = PathTable::new(&["threshold", "path", "value", "log_lr"]);
    for (j, &a) in cfg.thresholds.iter().enumerate() {
        let target = a * (1.0 + cfg.margin);
        if target >= limit {
            rec.notes.push(format!(
                "a = {a} skipped: tilt target {target} is outside the solvability region (limit {limit})"
            ));
            skipped.push(a);
            continue;
        }
        let model = solve_t0_with(sigma, var, target, default_t0_tol(target))?;
        let sampler = TiltedSampler::new(model, st.clone())?;
        let draws = tilted_draws(&sampler, run.paths, derive_seed(run.seed, 1 + j as u64));
        rec.account(run.paths, plan.terms, evaluated);
        let est = summarize_weighted(&draws, TailEvent::Above { a });

        let ld = ld_lower_bound(1.0, a, cfg.lambda, cfg.eps)?;
        let hb = (2.0 * hoeffding_bound(1.0, a)?).min(1.0);
        rec.check(Check::at_least(
            format!("ld_lower_a_{a}"),
            est.p_hat,
            ld,
            3.0 * est.std_err,
            "p_hat + 3*se >= (1/2 - eps)*exp(-(1+lambda)^2*a^2/2)",
        ));
        rec.check(Check::at_most(
            format!("hoeffding_upper_a_{a}"),
            est.p_hat,
            hb,
            3.0 * est.std_err,
            "p_hat - 3*se <= 2*exp(-a^2/2)",
        ));
        if est.low_ess {
            rec.notes.push(format!("a = {a}: effective sample size {} is below the floor", est.ess));
        }

        let cmp = if !plain.is_empty() && cfg.plain_compare.contains(&a) {
            let pe = plain_estimate(&plain, TailEvent::Above { a });
            let se = (est.std_err.powi(2) + pe.std_err.powi(2)).sqrt();
            rec.check(Check::at_most(
                format!("plain_agreement_a_{a}"),
                (est.p_hat - pe.p_hat).abs(),
                0.0,
                3.0 * se,
                "|p_hat_IS - p_hat_plain| <= 3*sqrt(se_IS^2 + se_plain^2)",
            ));
            let is_var = est.std_err.powi(2) * est.n_paths as f64;
            Some(PlainComparison {
                plain: pe,
                z: if se > 0.0 { (est.p_hat - pe.p_hat).abs() / se } else { 0.0 },
                variance_reduction: if is_var > 0.0 { pe.p_hat * (1.0 - pe.p_hat) / is_var } else { f64::INFINITY },
            })
        } else {
            None
        };

        for (i, d) in draws.iter().enumerate() {
            table.rows.push(vec![a, i as f64, d.value, d.log_lr]);
        }
        rows.push(SandwichRow {
            a,
            target,
            t0: model.t0,
            t0_residual: model.residual,
            ld_lower: ld,
            hoeffding_upper: hb,
            p_hat: est.p_hat,
            std_err: est.std_err,
            hits: est.hits,
            ess: est.ess,
            low_ess: est.low_ess,
            mean_lr: est.mean_lr,
            mean_lr_se: est.mean_lr_se,
            tilted_mean: est.mean_value,
            plain: cmp,
        });
    }

    let summary = TailSummary {
        sigma: sigma.sigma(),
        u: sigma.u(),
        terms: plan.terms,
        variance_mid: var.mid(),
        model_sum_sq,
        quantization_sd: st.quantization_variance_bound(0).sqrt() / norm,
        target_limit: limit,
        rows,
        skipped,
    };
    rec.finish(&summary, table)
}
