//! Sampling under the tilted product measure and importance-sampled tail
//! probabilities `P(F̄(σ) >= a)`.
//!
//! The tilted sampler mirrors [`SharedTermPlan`]: head signs are drawn one by
//! one with `P̃(Xₙ = +1) = e^{θₙ}/(2 cosh θₙ)`, and each block uses a single
//! tilt `θ_b = t₀·m_b^{-σ}/norm`, so its sum is `2·Bin(L, p_b) − L` and its
//! likelihood ratio `L·log cosh θ_b − θ_b·S_b` depends on the sum alone.
//! The weights are therefore exact for the sampled model.

use rand::RngCore;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{log_cosh, TiltedModel};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, stream_rng, unit_f64, SignPath, STREAM_TILT};
use crate::stream::{SharedTermPlan, StreamConfig};
use crate::summation::CompensatedSum;

/// Kish effective sample size below which an estimate is flagged.
pub const ESS_FLOOR: f64 = 50.0;

/// `P̃(Xₙ = +1) = 1/(1 + e^{−2θₙ})`.
pub fn tilt_prob(model: &TiltedModel, n: u64) -> f64 {
    plus_prob(model.theta(n))
}

fn plus_prob(theta: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * theta).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedPathSample {
    /// Realized signs for the exact head `n <= head`.
    pub head_signs: Vec<i8>,
    /// Realized block sums beyond the head.
    pub block_sums: Vec<i64>,
    /// `log dP/dP̃` of the realized configuration.
    pub log_lr: f64,
    /// Truncated `F̄`.
    pub value: f64,
}

/// Value and log-likelihood ratio of one tilted draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedDraw {
    pub value: f64,
    pub log_lr: f64,
}

#[derive(Debug, Clone)]
pub struct TiltedSampler {
    model: TiltedModel,
    plan: SharedTermPlan,
    head_p: Vec<f64>,
    head_theta: Vec<f64>,
    head_weight: Vec<f64>,
    block_theta: Vec<f64>,
    block_dist: Vec<Binomial>,
    block_weight: Vec<f64>,
    block_len: Vec<u64>,
    /// `Σ log cosh θ` over head indices and blocks (with multiplicity).
    lr_const: f64,
}

impl TiltedSampler {
    /// `plan` must be a single-point, single-segment plan at `model.sigma`.
    pub fn new(model: TiltedModel, plan: SharedTermPlan) -> Result<Self> {
        if plan.points().len() != 1 || plan.segments() != 1 {
            return Err(invalid("tilted sampling needs a single-point, single-segment plan"));
        }
        if plan.points()[0].u().to_bits() != model.sigma.u().to_bits() {
            return Err(invalid("tilted model and plan disagree on σ"));
        }
        let mut lr_const = CompensatedSum::new();
        let mut head_p = Vec::new();
        let mut head_theta = Vec::new();
        let mut head_weight = Vec::new();
        for n in 1..=plan.head() {
            let w = plan.head_weight(n, 0);
            let th = model.t0 * w / model.norm;
            head_weight.push(w);
            head_theta.push(th);
            head_p.push(plus_prob(th));
            lr_const.add(log_cosh(th));
        }
        let mut block_theta = Vec::new();
        let mut block_dist = Vec::new();
        let mut block_weight = Vec::new();
        let mut block_len = Vec::new();
        for (b, blk) in plan.blocks().iter().enumerate() {
            let c = plan.block_weight(b, 0);
            let th = model.t0 * c / model.norm;
            block_theta.push(th);
            block_weight.push(c);
            block_len.push(blk.len);
            block_dist.push(Binomial::new(blk.len, plus_prob(th)).map_err(|e| invalid(e.to_string()))?);
            lr_const.add(blk.len as f64 * log_cosh(th));
        }
        Ok(Self {
            model,
            plan,
            head_p,
            head_theta,
            head_weight,
            block_theta,
            block_dist,
            block_weight,
            block_len,
            lr_const: lr_const.value(),
        })
    }

    /// Builds the stream plan for `terms` indices with `config`.
    pub fn from_terms(model: TiltedModel, terms: u64, config: StreamConfig) -> Result<Self> {
        let plan = SharedTermPlan::new(&[model.sigma], terms, config)?;
        Self::new(model, plan)
    }

    pub fn model(&self) -> &TiltedModel {
        &self.model
    }

    pub fn plan(&self) -> &SharedTermPlan {
        &self.plan
    }

    fn run(&self, seed: u64, mut record: Option<&mut TiltedPathSample>) -> TiltedDraw {
        let mut rng = stream_rng(seed, STREAM_TILT);
        let mut f = CompensatedSum::new();
        let mut lr = CompensatedSum::new();
        lr.add(self.lr_const);
        for i in 0..self.head_p.len() {
            let plus = unit_f64(rng.next_u64()) < self.head_p[i];
            let w = self.head_weight[i];
            let th = self.head_theta[i];
            if plus {
                f.add(w);
                lr.add(-th);
            } else {
                f.add(-w);
                lr.add(th);
            }
            if let Some(r) = record.as_deref_mut() {
                r.head_signs.push(if plus { 1 } else { -1 });
            }
        }
        for b in 0..self.block_dist.len() {
            let k = self.block_dist[b].sample(&mut rng);
            let s = 2 * k as i64 - self.block_len[b] as i64;
            f.add(s as f64 * self.block_weight[b]);
            lr.add(-self.block_theta[b] * s as f64);
            if let Some(r) = record.as_deref_mut() {
                r.block_sums.push(s);
            }
        }
        TiltedDraw {
            value: f.value() / self.model.norm,
            log_lr: lr.value(),
        }
    }

    pub fn draw(&self, seed: u64) -> TiltedDraw {
        self.run(seed, None)
    }

    pub fn sample(&self, seed: u64) -> TiltedPathSample {
        let mut rec = TiltedPathSample {
            head_signs: Vec::with_capacity(self.head_p.len()),
            block_sums: Vec::with_capacity(self.block_dist.len()),
            log_lr: 0.0,
            value: 0.0,
        };
        let d = self.run(seed, Some(&mut rec));
        rec.log_lr = d.log_lr;
        rec.value = d.value;
        rec
    }
}

/// One tilted path of length `m` with the default stream configuration.
pub fn sample_tilted(model: &TiltedModel, seed: u64, m: u64) -> Result<TiltedPathSample> {
    Ok(TiltedSampler::from_terms(*model, m, StreamConfig::default())?.sample(seed))
}

/// Event whose probability is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TailEvent {
    /// `F̄ >= a`.
    Above { a: f64 },
    /// `a <= F̄ <= b`.
    Window { a: f64, b: f64 },
}

impl TailEvent {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            TailEvent::Above { a } => x >= a,
            TailEvent::Window { a, b } => a <= x && x <= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub n_paths: u64,
    pub hits: u64,
    /// Kish effective sample size of the contributing weights.
    pub ess: f64,
    pub low_ess: bool,
    /// Sample mean of `exp(log_lr)` over all paths (should be near 1).
    pub mean_lr: f64,
    pub mean_lr_se: f64,
    /// Sample mean of `F̄` under the sampling measure.
    pub mean_value: f64,
}

/// Reduces per-path `(value, log_lr)` pairs in index order.
pub fn summarize_weighted(draws: &[TiltedDraw], event: TailEvent) -> TailEstimate {
    let n = draws.len() as f64;
    let mut y = CompensatedSum::new();
    let mut y2 = CompensatedSum::new();
    let mut w = CompensatedSum::new();
    let mut w2 = CompensatedSum::new();
    let mut hw = CompensatedSum::new();
    let mut hw2 = CompensatedSum::new();
    let mut v = CompensatedSum::new();
    let mut hits = 0;
    for d in draws {
        let lr = d.log_lr.exp();
        w.add(lr);
        w2.add(lr * lr);
        v.add(d.value);
        if event.contains(d.value) {
            hits += 1;
            y.add(lr);
            y2.add(lr * lr);
            hw.add(lr);
            hw2.add(lr * lr);
        }
    }
    let mean = y.value() / n;
    let var = (y2.value() / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    let wm = w.value() / n;
    let wvar = (w2.value() / n - wm * wm).max(0.0) * n / (n - 1.0).max(1.0);
    let ess = if hw2.value() > 0.0 {
        hw.value() * hw.value() / hw2.value()
    } else {
        0.0
    };
    TailEstimate {
        p_hat: mean,
        std_err: (var / n).sqrt(),
        n_paths: draws.len() as u64,
        hits,
        ess,
        low_ess: ess < ESS_FLOOR,
        mean_lr: wm,
        mean_lr_se: (wvar / n).sqrt(),
        mean_value: v.value() / n,
    }
}

/// Draws `n_paths` tilted paths (path `i` seeded with `derive_seed(seed, i)`).
pub fn tilted_draws(sampler: &TiltedSampler, n_paths: u64, seed: u64) -> Vec<TiltedDraw> {
    (0..n_paths)
        .into_par_iter()
        .map(|i| sampler.draw(derive_seed(seed, i)))
        .collect()
}

/// Importance-sampling estimate of `P(F̄ >= a)` for the truncated model.
pub fn estimate_tail(
    model: &TiltedModel,
    a: f64,
    n_paths: u64,
    m: u64,
    seed: u64,
) -> Result<TailEstimate> {
    let sampler = TiltedSampler::from_terms(*model, m, StreamConfig::default())?;
    estimate_event(&sampler, TailEvent::Above { a }, n_paths, seed)
}

pub fn estimate_event(
    sampler: &TiltedSampler,
    event: TailEvent,
    n_paths: u64,
    seed: u64,
) -> Result<TailEstimate> {
    if n_paths < 2 {
        return Err(invalid("need at least two paths"));
    }
    Ok(summarize_weighted(&tilted_draws(sampler, n_paths, seed), event))
}

/// Plain Monte Carlo estimate with the binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlainEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub n_paths: u64,
    pub hits: u64,
}

/// Untilted values `F̄` at the plan's single point, paths seeded like [`tilted_draws`].
pub fn plain_values(plan: &SharedTermPlan, norm: f64, n_paths: u64, seed: u64) -> Vec<f64> {
    (0..n_paths)
        .into_par_iter()
        .map_init(
            || vec![0.0; plan.points().len() * plan.segments()],
            |buf, i| {
                plan.eval_into(&SignPath::new(derive_seed(seed, i)), buf);
                buf.iter().copied().collect::<CompensatedSum>().value() / norm
            },
        )
        .collect()
}

pub fn plain_estimate(values: &[f64], event: TailEvent) -> PlainEstimate {
    let n = values.len() as u64;
    let hits = values.iter().filter(|&&v| event.contains(v)).count() as u64;
    let p = hits as f64 / n as f64;
    PlainEstimate {
        p_hat: p,
        std_err: (p * (1.0 - p) / n as f64).sqrt(),
        n_paths: n,
        hits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::solve_t0;
    use crate::series::SigmaPoint;

    #[test]
    fn untilted_probability_is_half() {
        let m = TiltedModel::untilted(SigmaPoint::from_sigma(1.0).unwrap()).unwrap();
        assert!((1..100).all(|n| tilt_prob(&m, n) == 0.5));
    }

    #[test]
    fn tilt_prob_example() {
        let mut m = TiltedModel::untilted(SigmaPoint::from_sigma(1.0).unwrap()).unwrap();
        m.t0 = 1.0;
        let th = 1.0 / m.norm;
        let expect = th.exp() / (2.0 * th.cosh());
        assert!((tilt_prob(&m, 1) - expect).abs() < 1e-15);
        assert!((m.norm - (std::f64::consts::PI / 6f64.sqrt())).abs() < 1e-8);
        m.t0 = 1e6;
        assert_eq!(tilt_prob(&m, 1), 1.0);
    }

    #[test]
    fn untilted_sample_has_zero_log_lr() {
        let m = TiltedModel::untilted(SigmaPoint::from_sigma(0.75).unwrap()).unwrap();
        let s = sample_tilted(&m, 5, 100_000).unwrap();
        assert_eq!(s.log_lr, 0.0);
        assert_eq!(s.head_signs.len(), 4096);
    }

    #[test]
    fn sample_matches_draw() {
        let s = SigmaPoint::from_sigma(0.75).unwrap();
        let m = solve_t0(s, 1.0, 1e-10).unwrap();
        let sm = TiltedSampler::from_terms(m, 200_000, StreamConfig::default()).unwrap();
        let a = sm.sample(9);
        let b = sm.draw(9);
        assert_eq!(a.value, b.value);
        assert_eq!(a.log_lr, b.log_lr);
    }

    #[test]
    fn rejects_multi_point_plan() {
        let s = SigmaPoint::from_sigma(0.75).unwrap();
        let m = TiltedModel::untilted(s).unwrap();
        let plan = SharedTermPlan::new(&[s, s], 100, StreamConfig::default()).unwrap();
        assert!(TiltedSampler::new(m, plan).is_err());
    }
}
