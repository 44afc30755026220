//! The split `F = F₁ + F₂ + F₃` at two consecutive schedule points, with the
//! middle blocks on disjoint index ranges.

use serde::{Deserialize, Serialize};

use super::{map_paths, Check, PathTable, RecordBuilder, RunConfig, RunOutput};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, SignPath};
use crate::schedules::{sigma_seq, surrogate_split, Schedule, ScheduleKind, SurrogateSplit};
use crate::series::{lil_scale_from_variance, power_term};
use crate::stats::{correlation, moments};
use crate::stream::SharedTermPlan;
use crate::summation::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub run: RunConfig,
    pub kind: ScheduleKind,
    pub delta: f64,
    /// The pair is `(σ_k, σ_{k+1})`.
    pub k: u64,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::new("split", 10_000, 1_000_000_000_000_000_000, 0.01),
            kind: ScheduleKind::Lower,
            delta: 0.1,
            k: 1,
            eps1: 0.45,
            eps2: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSide {
    pub k: u64,
    pub u: f64,
    pub n1: u64,
    pub n2: u64,
    pub variance_mid: f64,
    /// Directly summed `Σ_{n<=N₁} n^{-2σ}` over `mid 𝔼F²`.
    pub head_fraction: f64,
    /// `1 − Σ_{n<=N₂} n^{-2σ} / mid 𝔼F²`.
    pub tail_fraction: f64,
    pub head_step: f64,
    pub tail_step: f64,
    pub empirical_f1_fraction: f64,
    pub empirical_f1_se: f64,
    pub empirical_f3_fraction: f64,
    pub empirical_f3_se: f64,
    /// Empirical `Var F₂ / Var F` (share of the LIL statistic's spread).
    pub f2_variance_share: f64,
    pub f2_correlation_with_total: f64,
    /// Mean of `|F₂|/denom(σ)` where the LIL scale is defined.
    pub f2_mean_abs_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub terms: u64,
    pub breakpoints: Vec<u64>,
    pub sides: [SplitSide; 2],
    pub f2_correlation: f64,
    pub total_correlation: f64,
    pub max_reconstruction_error: f64,
}

fn direct_mass(s: f64, from: u64, to: u64) -> f64 {
    let mut acc = CompensatedSum::new();
    for n in from..=to {
        acc.add(power_term(n, s));
    }
    acc.value()
}

pub fn run_split_independence(cfg: &SplitConfig) -> Result<RunOutput> {
    let run = &cfg.run;
    let sched = Schedule::new(cfg.kind, cfg.delta)?;
    let mut rec = RecordBuilder::new("split", run, cfg)?;
    let pts = [sigma_seq(&sched, cfg.k)?, sigma_seq(&sched, cfg.k + 1)?];
    let splits: Vec<SurrogateSplit> = pts
        .iter()
        .map(|&p| surrogate_split(p, cfg.eps1, cfg.eps2))
        .collect::<Result<_>>()?;
    if splits[0].n2 > splits[1].n1 {
        return Err(invalid(format!(
            "F2 blocks overlap: N2(k) = {} > N1(k+1) = {}",
            splits[0].n2, splits[1].n1
        )));
    }
    let plans = [rec.feasible_plan(pts[0])?, rec.feasible_plan(pts[1])?];
    let terms = plans[0].terms.max(plans[1].terms);

    let mut breakpoints: Vec<u64> = splits
        .iter()
        .flat_map(|s| [s.n1 + 1, s.n2 + 1])
        .filter(|&b| (2..=terms).contains(&b))
        .collect();
    breakpoints.sort_unstable();
    breakpoints.dedup();
    let starts: Vec<u64> = std::iter::once(1).chain(breakpoints.iter().copied()).collect();
    let nseg = starts.len();
    let st = SharedTermPlan::with_segments(&pts, terms, &breakpoints, run.stream)?;
    let parts = |x: &[f64], p: usize| -> [f64; 4] {
        let sp = &splits[p];
        let mut f = [CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()];
        for (s, &start) in starts.iter().enumerate() {
            let v = x[p * nseg + s];
            let i = if start <= sp.n1 {
                0
            } else if start <= sp.n2 {
                1
            } else {
                2
            };
            f[i].add(v);
            f[3].add(v);
        }
        [f[0].value(), f[1].value(), f[2].value(), f[3].value()]
    };
    // per path: [F₁, F₂, F₃, F] at σ_k then σ_{k+1}
    let values: Vec<[[f64; 4]; 2]> = map_paths(run.paths, |i| {
        let mut out = vec![0.0; 2 * nseg];
        st.eval_into(&SignPath::new(derive_seed(run.seed, i)), &mut out);
        [parts(&out, 0), parts(&out, 1)]
    });
    rec.account(run.paths, terms, st.head() + st.block_count() as u64);
    let n = values.len() as f64;

    let max_recon = values
        .iter()
        .flat_map(|v| v.iter())
        .map(|f| {
            let scale = f[0].abs() + f[1].abs() + f[2].abs();
            (f[0] + f[1] + f[2] - f[3]).abs() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    rec.check(Check::at_most(
        "reconstruction",
        max_recon,
        0.0,
        1e-12,
        "|F1 + F2 + F3 - F| <= 1e-12 * (|F1| + |F2| + |F3|) on every path",
    ));

    let col = |p: usize, j: usize| -> Vec<f64> { values.iter().map(|v| v[p][j]).collect() };
    let rho2 = correlation(&col(0, 1), &col(1, 1));
    rec.check(Check::at_most(
        "f2_correlation",
        rho2.abs(),
        0.0,
        3.0 / n.sqrt(),
        "|corr(F2(sigma_k), F2(sigma_{k+1}))| <= 3/sqrt(paths)",
    ));
    let total_corr = correlation(&col(0, 3), &col(1, 3));

    let mut sides = Vec::new();
    for p in 0..2 {
        let sp = &splits[p];
        let k = cfg.k + p as u64;
        let s = pts[p].sigma() * 2.0;
        let var = sp.variance.mid();
        let head_fraction = direct_mass(s, 1, sp.n1) / var;
        let tail_fraction = 1.0 - direct_mass(s, 1, sp.n2) / var;
        let head_step = power_term(sp.n1 + 1, s) / var;
        let tail_step = sp.tail_step / var;
        let rel = sp.variance.half_width() / var;
        rec.check(Check::at_most(
            format!("head_fraction_k_{k}"),
            (head_fraction - cfg.eps1).abs(),
            head_step,
            rel,
            "|sum_{n<=N1} n^-2sigma / EF^2 - eps1| <= (N1+1)^-2sigma / EF^2 + variance bracket half-width",
        ));
        rec.check(Check::at_most(
            format!("tail_fraction_k_{k}"),
            (tail_fraction - cfg.eps2).abs(),
            tail_step,
            rel,
            "|sum_{n>N2} n^-2sigma / EF^2 - eps2| <= N2^-2sigma / EF^2 + variance bracket half-width",
        ));

        let sq = |j: usize| -> Vec<f64> { values.iter().map(|v| v[p][j] * v[p][j] / var).collect() };
        let m1 = moments(&sq(0));
        let m3 = moments(&sq(2));
        if sp.n1 <= st.head() {
            rec.check(Check::at_most(
                format!("empirical_head_fraction_k_{k}"),
                (m1.mean - head_fraction).abs(),
                0.0,
                3.0 * m1.std_err,
                "|mean F1^2 / EF^2 - head fraction| <= 3*se (the head is evaluated exactly)",
            ));
        }
        let f2 = col(p, 1);
        let f = col(p, 3);
        let v2 = moments(&f2).variance;
        let vf = moments(&f).variance;
        let r2 = match lil_scale_from_variance(sp.variance) {
            Ok(sc) => Some(f2.iter().map(|x| x.abs() / sc.denom.mid()).sum::<f64>() / n),
            Err(Error::LoglogUndefined { .. }) => {
                rec.notes.push(format!("k = {k}: LIL scale undefined, F2 share reported by variance only"));
                None
            }
            Err(e) => return Err(e),
        };
        sides.push(SplitSide {
            k,
            u: pts[p].u(),
            n1: sp.n1,
            n2: sp.n2,
            variance_mid: var,
            head_fraction,
            tail_fraction,
            head_step,
            tail_step,
            empirical_f1_fraction: m1.mean,
            empirical_f1_se: m1.std_err,
            empirical_f3_fraction: m3.mean,
            empirical_f3_se: m3.std_err,
            f2_variance_share: v2 / vf,
            f2_correlation_with_total: correlation(&f2, &f),
            f2_mean_abs_r: r2,
        });
    }

    let mut table = PathTable::new(&["path", "f1_k", "f2_k", "f3_k", "f1_k1", "f2_k1", "f3_k1"]);
    table.rows = values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i as f64, v[0][0], v[0][1], v[0][2], v[1][0], v[1][1], v[1][2]])
        .collect();
    let [a, b]: [SplitSide; 2] = sides.try_into().map_err(|_| invalid("two sides expected"))?;
    let summary = SplitSummary {
        terms,
        breakpoints,
        sides: [a, b],
        f2_correlation: rho2,
        total_correlation: total_corr,
        max_reconstruction_error: max_recon,
    };
    rec.finish(&summary, table)
}
