//! Gaussian behaviour of `F̄(σ)`: KS distance, moments, Hoeffding tail
//! frequencies and the MGF sandwich on one set of paths.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Check, PathTable, RecordBuilder, RunConfig, RunOutput};
use crate::bounds::hoeffding_bound;
use crate::error::Result;
use crate::series::SigmaPoint;
use crate::stats::{frequency, ks_critical, ks_statistic, moments, normal_cdf};
use crate::stream::SharedTermPlan;
use crate::tilted::plain_values;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltConfig {
    pub run: RunConfig,
    pub sigma: f64,
    pub ks_threshold: f64,
    /// Thresholds `λ` for the Hoeffding tail check `P(F̄ >= λ)`.
    pub hoeffding_lambdas: Vec<f64>,
    /// Arguments `t` for the MGF sandwich check on `𝔼 exp(t·F̄)`.
    pub mgf_ts: Vec<f64>,
}

impl Default for CltConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::new("clt", 10_000, 10_000_000_000, 0.01),
            sigma: 0.6,
            ks_threshold: 0.02,
            hoeffding_lambdas: vec![1.0, 2.0, 3.0],
            mgf_ts: vec![0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub lambda: f64,
    pub frequency: f64,
    pub bound: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfRow {
    pub t: f64,
    pub mean: f64,
    pub std_err: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSummary {
    pub sigma: f64,
    pub u: f64,
    pub terms: u64,
    pub variance_mid: f64,
    pub variance_rel_half_width: f64,
    pub tail_fraction_bound: f64,
    /// Variance of the evaluated model divided by `mid 𝔼F²`.
    pub model_variance_ratio: f64,
    /// Quantization error standard deviation in units of `√𝔼F²`.
    pub quantization_sd: f64,
    pub ks: f64,
    pub ks_critical_1pct: f64,
    /// `sup_x |Φ(x/√ρ) − Φ(x)|` for the model variance ratio `ρ`.
    pub ks_truncation_bias: f64,
    pub mean: f64,
    pub mean_std_err: f64,
    pub variance: f64,
    pub tails: Vec<TailRow>,
    pub mgf: Vec<MgfRow>,
}

pub fn run_clt(cfg: &CltConfig) -> Result<RunOutput> {
    let run = &cfg.run;
    let sigma = SigmaPoint::from_sigma(cfg.sigma)?;
    let mut rec = RecordBuilder::new("clt", run, cfg)?;
    let plan = rec.feasible_plan(sigma)?;
    let st = SharedTermPlan::new(&[sigma], plan.terms, run.stream)?;
    let var = plan.variance;
    let norm = var.mid().sqrt();
    let values = plain_values(&st, norm, run.paths, run.seed);
    rec.account(run.paths, plan.terms, st.head() + st.block_count() as u64);

    let n = values.len() as f64;
    let rho = st.model_variance(0) / var.mid();
    let rho_hi = var.hi() / var.mid();
    let ks = ks_statistic(&values, normal_cdf);
    let bias = (0..=5000)
        .map(|i| {
            let x = i as f64 * 1e-3;
            (normal_cdf(x / rho.sqrt()) - normal_cdf(x)).abs()
        })
        .fold(0.0, f64::max);
    let m = moments(&values);

    rec.check(Check::at_most("ks", ks, cfg.ks_threshold, 0.0, "ks <= ks_threshold"));
    rec.check(Check::at_most(
        "mean",
        m.mean.abs(),
        0.0,
        3.0 / n.sqrt(),
        "|mean| <= 3/sqrt(paths)",
    ));
    let var_slack = 3.0 * rho * (2.0 / (n - 1.0)).sqrt() + (rho_hi - 1.0).abs();
    rec.check(Check::at_most(
        "variance",
        (m.variance - rho).abs(),
        0.0,
        var_slack,
        "|var - rho| <= 3*rho*sqrt(2/(paths-1)) + variance bracket half-width, rho = model variance / mid(EF^2)",
    ));

    let mut tails = Vec::new();
    for &lambda in &cfg.hoeffding_lambdas {
        let (p, _) = frequency(&values, |x| x >= lambda);
        let bound = hoeffding_bound(rho_hi, lambda)?;
        let se = (bound * (1.0 - bound) / n).sqrt();
        rec.check(Check::at_most(
            format!("hoeffding_lambda_{lambda}"),
            p,
            bound,
            3.0 * se,
            "P(Fbar >= lambda) <= exp(-lambda^2/(2*hi/mid)) + 3*sqrt(bound*(1-bound)/paths)",
        ));
        tails.push(TailRow {
            lambda,
            frequency: p,
            bound,
            std_err: se,
        });
    }

    let mut mgf = Vec::new();
    for &t in &cfg.mgf_ts {
        let e: Vec<f64> = values.iter().map(|&x| (t * x).exp()).collect();
        let em = moments(&e);
        // Π cosh(t aₙ) with Σ aₙ² = ρ and Σ aₙ⁴ <= π²/(6·ef2²).
        let t2 = t * t;
        let lower = (t2 * rho / 2.0 - t2 * t2 * PI * PI / (48.0 * var.lo() * var.lo())).exp();
        let upper = (t2 * rho_hi / 2.0).exp();
        let rule_lo = "mean exp(t*Fbar) >= exp(t^2*rho/2 - t^4*pi^2/(48*lo(EF^2)^2)) - 3*se";
        let rule_hi = "mean exp(t*Fbar) <= exp(t^2*hi/mid/2) + 3*se";
        rec.check(Check::at_least(format!("mgf_lower_t_{t}"), em.mean, lower, 3.0 * em.std_err, rule_lo));
        rec.check(Check::at_most(format!("mgf_upper_t_{t}"), em.mean, upper, 3.0 * em.std_err, rule_hi));
        mgf.push(MgfRow {
            t,
            mean: em.mean,
            std_err: em.std_err,
            lower,
            upper,
        });
    }

    let summary = CltSummary {
        sigma: sigma.sigma(),
        u: sigma.u(),
        terms: plan.terms,
        variance_mid: var.mid(),
        variance_rel_half_width: var.half_width() / var.mid(),
        tail_fraction_bound: plan.achieved_fraction,
        model_variance_ratio: rho,
        quantization_sd: st.quantization_variance_bound(0).sqrt() / norm,
        ks,
        ks_critical_1pct: ks_critical(values.len(), 0.01),
        ks_truncation_bias: bias,
        mean: m.mean,
        mean_std_err: m.std_err,
        variance: m.variance,
        tails,
        mgf,
    };
    let mut table = PathTable::new(&["path", "value"]);
    table.rows = values.iter().enumerate().map(|(i, &v)| vec![i as f64, v]).collect();
    rec.finish(&summary, table)
}
