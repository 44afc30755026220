//! Dyadic chaining on `[σ_k, σ_{k-1}]`: increment second moments, threshold
//! violations per level, and the oscillation of `F` over the grid.

use serde::{Deserialize, Serialize};

use super::{map_paths, Check, PathTable, RecordBuilder, RunConfig, RunOutput};
use crate::bounds::hoeffding_bound;
use crate::bracket::Bracket;
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, SignPath};
use crate::schedules::{chain_threshold, chain_union_bound, sigma_seq, DyadicGrid, Schedule, ScheduleKind};
use crate::series::{deriv_variance_bracket, TruncationPlan};
use crate::stats::moments;
use crate::stream::SharedTermPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub run: RunConfig,
    pub delta: f64,
    /// Schedule index; `0` picks the largest feasible k.
    pub k: u64,
    pub levels: u32,
    pub c0: f64,
    /// Alternative `c₀` values whose violation frequencies are reported.
    pub c0_sensitivity: Vec<f64>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::new("chain", 1000, 1_000_000_000_000_000, 0.01),
            delta: 0.1,
            k: 0,
            levels: 6,
            c0: 1.0,
            c0_sensitivity: vec![0.5, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLevel {
    pub level: u32,
    pub mean_square: f64,
    pub mean_square_se: f64,
    /// `(Δσ/2^l)²·hi 𝔼F′(σ_k)²`.
    pub mean_square_bound: f64,
    pub lambda: f64,
    pub violation_frequency: f64,
    pub violation_se: f64,
    pub violation_bound: f64,
    /// Fraction of paths with at least one violation at this level (empirical `A_{l,k}`).
    pub any_violation_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub c0: f64,
    pub violation_frequency: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub k: u64,
    pub frontier_k: Option<u64>,
    pub u_k: f64,
    pub u_prev: f64,
    pub delta_sigma: f64,
    pub terms: u64,
    pub deriv_variance: Bracket,
    pub deriv_certified_constant: f64,
    pub levels: Vec<ChainLevel>,
    pub lambda_sum: f64,
    pub union_bound_lhs: f64,
    pub union_bound_rhs: f64,
    /// `max_τ |F(τ) − F(σ_k)| / √(mid 𝔼F(σ_k)²)` over the grid.
    pub oscillation_ratio_mean: f64,
    pub oscillation_ratio_max: f64,
    pub paths_without_violation: u64,
    pub chaining_failures: u64,
    pub c0_sensitivity: Vec<SensitivityRow>,
}

pub fn run_chain_increments(cfg: &ChainConfig) -> Result<RunOutput> {
    let run = &cfg.run;
    let sched = Schedule::new(ScheduleKind::Upper, cfg.delta)?;
    let mut rec = RecordBuilder::new("chain", run, cfg)?;

    let (k, plan, frontier) = if cfg.k == 0 {
        let mut best: Option<(u64, TruncationPlan)> = None;
        let mut frontier = None;
        for k in 1..=sched.k_max {
            let p = rec.plan(sigma_seq(&sched, k)?)?;
            if !p.feasible {
                frontier = Some(k);
                break;
            }
            best = Some((k, p));
        }
        let (k, p) = best.ok_or_else(|| invalid("no feasible k for the chaining grid"))?;
        (k, p, frontier)
    } else {
        (cfg.k, rec.feasible_plan(sigma_seq(&sched, cfg.k)?)?, None)
    };
    let grid = DyadicGrid::new(&sched, k, cfg.levels, cfg.c0)?;
    let points = grid.level(cfg.levels)?;
    let top = points.len() - 1;
    let endpoints_ok = points[0].u().to_bits() == sigma_seq(&sched, k)?.u().to_bits()
        && points[top].u().to_bits() == sigma_seq(&sched, k - 1)?.u().to_bits();
    rec.check(Check::at_least(
        "grid_endpoints",
        f64::from(u8::from(endpoints_ok)),
        1.0,
        0.0,
        "level-0 points equal sigma_k and sigma_{k-1} bit for bit",
    ));

    let deriv = deriv_variance_bracket(grid.sigma_k())?;
    let st = SharedTermPlan::new(&points, plan.terms, run.stream)?;
    let values: Vec<Vec<f64>> = map_paths(run.paths, |i| st.eval(&SignPath::new(derive_seed(run.seed, i))));
    rec.account(run.paths, plan.terms, st.head() + st.block_count() as u64);

    let lambdas: Vec<f64> = (0..=cfg.levels)
        .map(|l| if l == 0 { f64::INFINITY } else { chain_threshold(&grid, l) })
        .collect();
    let increments = |v: &[f64], l: u32| -> Vec<f64> {
        let stride = 1usize << (cfg.levels - l);
        (0..(1usize << l)).map(|n| v[(n + 1) * stride] - v[n * stride]).collect()
    };

    let mut levels = Vec::new();
    for l in 0..=cfg.levels {
        let ms: Vec<f64> = values
            .iter()
            .map(|v| {
                let d = increments(v, l);
                d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64
            })
            .collect();
        let m = moments(&ms);
        let step = grid.delta_sigma() / (1u64 << l) as f64;
        let bound = step * step * deriv.bracket.hi();
        rec.check(Check::at_most(
            format!("mean_square_level_{l}"),
            m.mean,
            bound,
            3.0 * m.std_err,
            "mean |dF|^2 <= (dsigma/2^l)^2 * hi(E F'(sigma_k)^2) + 3*se over per-path averages",
        ));
        let (vf, vse, vb, any) = if l == 0 {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            let lam = lambdas[l as usize];
            let frac: Vec<f64> = values
                .iter()
                .map(|v| {
                    let d = increments(v, l);
                    d.iter().filter(|x| x.abs() >= lam).count() as f64 / d.len() as f64
                })
                .collect();
            let fm = moments(&frac);
            let vb = (2.0 * hoeffding_bound(bound, lam)?).min(1.0);
            rec.check(Check::at_most(
                format!("violations_level_{l}"),
                fm.mean,
                vb,
                3.0 * fm.std_err,
                "P(|dF| >= lambda_{k,l}) <= 2*exp(-lambda^2/(2*level bound)) + 3*se over per-path fractions",
            ));
            let any = frac.iter().filter(|&&f| f > 0.0).count() as f64 / frac.len() as f64;
            (fm.mean, fm.std_err, vb, any)
        };
        levels.push(ChainLevel {
            level: l,
            mean_square: m.mean,
            mean_square_se: m.std_err,
            mean_square_bound: bound,
            lambda: lambdas[l as usize],
            violation_frequency: vf,
            violation_se: vse,
            violation_bound: vb,
            any_violation_frequency: any,
        });
    }

    let lambda_sum: f64 = lambdas[1..].iter().sum();
    let scale = plan.variance.mid().sqrt();
    let mut table = PathTable::new(&["path", "max_oscillation", "oscillation_ratio", "max_violated_level"]);
    for l in 1..=cfg.levels {
        table.header.push(format!("violations_l{l}"));
    }
    let mut ratios = Vec::with_capacity(values.len());
    let mut clean = 0u64;
    let mut failures = 0u64;
    for (i, v) in values.iter().enumerate() {
        let osc_all = v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
        // σ_{k-1} itself needs the level-0 step, which has no threshold.
        let osc_open = v[..top].iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
        let counts: Vec<f64> = (1..=cfg.levels)
            .map(|l| {
                let lam = lambdas[l as usize];
                increments(v, l).iter().filter(|x| x.abs() >= lam).count() as f64
            })
            .collect();
        let max_level = counts.iter().rposition(|&c| c > 0.0).map_or(0, |p| p + 1);
        if max_level == 0 {
            clean += 1;
            if osc_open > lambda_sum * (1.0 + 1e-12) + 1e-12 {
                failures += 1;
            }
        }
        ratios.push(osc_all / scale);
        let mut row = vec![i as f64, osc_all, osc_all / scale, max_level as f64];
        row.extend(counts);
        table.rows.push(row);
    }
    rec.check(Check::at_most(
        "chaining_implication",
        failures as f64,
        0.0,
        0.0,
        "paths with no violation satisfy max_{tau<sigma_{k-1}} |F(tau)-F(sigma_k)| <= sum_l lambda_{k,l}",
    ));

    let mut sens = Vec::new();
    for &c0 in &cfg.c0_sensitivity {
        let g = DyadicGrid::new(&sched, k, cfg.levels, c0)?;
        let freqs = (1..=cfg.levels)
            .map(|l| {
                let lam = chain_threshold(&g, l);
                let hits: usize = values
                    .iter()
                    .map(|v| increments(v, l).iter().filter(|x| x.abs() >= lam).count())
                    .sum();
                hits as f64 / (values.len() << l) as f64
            })
            .collect();
        sens.push(SensitivityRow {
            c0,
            violation_frequency: freqs,
        });
    }

    let rm = moments(&ratios);
    let (ub_lhs, ub_rhs) = chain_union_bound(&grid, cfg.levels);
    let summary = ChainSummary {
        k,
        frontier_k: frontier,
        u_k: grid.u_k,
        u_prev: grid.u_prev,
        delta_sigma: grid.delta_sigma(),
        terms: plan.terms,
        deriv_variance: deriv.bracket,
        deriv_certified_constant: deriv.certified_constant,
        levels,
        lambda_sum,
        union_bound_lhs: ub_lhs,
        union_bound_rhs: ub_rhs,
        oscillation_ratio_mean: rm.mean,
        oscillation_ratio_max: ratios.iter().copied().fold(0.0, f64::max),
        paths_without_violation: clean,
        chaining_failures: failures,
        c0_sensitivity: sens,
    };
    rec.finish(&summary, table)
}
