//! Shared-term streaming evaluation of `F` at several σ points on one path.
//!
//! Indices `n <= exact_head` are summed exactly from the path's sign bits.
//! Beyond the head the index range is cut into geometric blocks
//! `[a, a + L)` with `L = max(1, ⌊a·r⌋)`. Inside a block the weight `n^{-σ}`
//! is replaced by its value at the block's mean index `m_b`, so the block
//! contributes `m_b^{-σ}·S_b` where `S_b = Σ_{n∈b} Xₙ = 2·Bin(L, 1/2) − L`.
//! `S_b` is drawn directly from its binomial law, which makes one path cost
//! `O(exact_head + log(M)/r)` instead of `O(M)`.
//!
//! The blocked sum is a Rademacher series with piecewise-constant weights, so
//! it has exactly the law of `Σ Xₙ c(n)`. Coupling the two with the same
//! signs, the difference from the true truncation has variance at most
//! `Σ_b (σ a_b^{-σ-1})² L(L²−1)/12` (the quantization bound). Because
//! `x ↦ x^{-2σ}` is convex, `L·m_b^{-2σ} <= Σ_{n∈b} n^{-2σ}` and the model
//! variance never exceeds the truncated variance.
//!
//! Block realizations are functions of the path seed, but beyond the head
//! they are not tied to `SignPath::sign(n)`; [`crate::series::eval_truncated`]
//! remains the term-by-term reference.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{stream_rng, SignPath, STREAM_BLOCKS};
use crate::series::{power_term, tail_bracket_integral, SigmaPoint};
use crate::summation::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamConfig {
    /// Indices summed term by term from the path's signs.
    pub exact_head: u64,
    /// Block length relative to the block start.
    pub block_ratio: f64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            exact_head: 4096,
            block_ratio: 0.02,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub start: u64,
    pub len: u64,
    pub segment: usize,
    pub fair: Binomial,
}

/// Precomputed weights and blocks for a fixed set of σ points, a term count,
/// and optional segment breakpoints.
#[derive(Debug, Clone)]
pub struct SharedTermPlan {
    points: Vec<SigmaPoint>,
    terms: u64,
    head: u64,
    /// Index of the first term of segments `1..`; segment 0 starts at 1.
    breakpoints: Vec<u64>,
    /// `head_weights[(n-1)·P + p] = n^{-σ_p}`.
    head_weights: Vec<f64>,
    /// `(first, last)` head index of each segment, possibly empty.
    head_segments: Vec<(u64, u64)>,
    blocks: Vec<Block>,
    /// `block_weights[b·P + p] = m_b^{-σ_p}`.
    block_weights: Vec<f64>,
    quant_var: Vec<f64>,
    model_var: Vec<f64>,
    config: StreamConfig,
}

impl SharedTermPlan {
    pub fn new(points: &[SigmaPoint], terms: u64, config: StreamConfig) -> Result<Self> {
        Self::with_segments(points, terms, &[], config)
    }

    /// Like [`new`](Self::new) but splits `1..=terms` at the given
    /// breakpoints; segment `s` covers `[breakpoints[s-1], breakpoints[s])`.
    /// Blocks never straddle a breakpoint.
    pub fn with_segments(
        points: &[SigmaPoint],
        terms: u64,
        breakpoints: &[u64],
        config: StreamConfig,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("at least one σ point is required"));
        }
        if terms == 0 {
            return Err(invalid("term count must be positive"));
        }
        if !(config.block_ratio > 0.0 && config.block_ratio.is_finite()) {
            return Err(invalid("block_ratio must be positive"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1])
            || breakpoints.first().is_some_and(|&b| b < 2)
            || breakpoints.last().is_some_and(|&b| b > terms)
        {
            return Err(invalid(format!(
                "breakpoints must be strictly increasing within 2..={terms}: {breakpoints:?}"
            )));
        }
        let np = points.len();
        let head = config.exact_head.min(terms);
        let mut head_weights = Vec::with_capacity(head as usize * np);
        let mut model_var = vec![CompensatedSum::new(); np];
        for n in 1..=head {
            for (p, pt) in points.iter().enumerate() {
                let w = power_term(n, pt.sigma());
                head_weights.push(w);
                model_var[p].add(w * w);
            }
        }
        let seg_start = |s: usize| if s == 0 { 1 } else { breakpoints[s - 1] };
        let seg_end = |s: usize| {
            if s < breakpoints.len() {
                breakpoints[s] - 1
            } else {
                terms
            }
        };
        let nseg = breakpoints.len() + 1;
        let head_segments = (0..nseg)
            .map(|s| (seg_start(s), seg_end(s).min(head)))
            .collect();

        let mut blocks = Vec::new();
        let mut block_weights = Vec::new();
        let mut quant = vec![CompensatedSum::new(); np];
        let mut a = head + 1;
        let mut segment = breakpoints.iter().take_while(|&&b| b <= a).count();
        while a <= terms {
            let limit = seg_end(segment);
            let len = ((a as f64 * config.block_ratio).floor() as u64)
                .max(1)
                .min(limit - a + 1);
            let centre = a as f64 + (len - 1) as f64 / 2.0;
            let fair = Binomial::new(len, 0.5).map_err(|e| invalid(e.to_string()))?;
            for (p, pt) in points.iter().enumerate() {
                let s = pt.sigma();
                let c = centre.powf(-s);
                block_weights.push(c);
                model_var[p].add(len as f64 * c * c);
                let slope = s * (a as f64).powf(-s - 1.0);
                let l = len as f64;
                quant[p].add(slope * slope * l * (l * l - 1.0) / 12.0);
            }
            blocks.push(Block {
                start: a,
                len,
                segment,
                fair,
            });
            a += len;
            if a > limit {
                segment += 1;
            }
        }
        Ok(Self {
            points: points.to_vec(),
            terms,
            head,
            breakpoints: breakpoints.to_vec(),
            head_weights,
            head_segments,
            blocks,
            block_weights,
            quant_var: quant
                .iter()
                .map(|q| q.value() * (1.0 + 1e-12) + q.error_bound())
                .collect(),
            model_var: model_var.iter().map(CompensatedSum::value).collect(),
            config,
        })
    }

    pub fn points(&self) -> &[SigmaPoint] {
        &self.points
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    pub fn head(&self) -> u64 {
        self.head
    }

    pub fn segments(&self) -> usize {
        self.breakpoints.len() + 1
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn config(&self) -> StreamConfig {
        self.config
    }

    /// Variance of the blocked model at point `p`.
    pub fn model_variance(&self, p: usize) -> f64 {
        self.model_var[p]
    }

    /// Upper bound on the quantization error variance at point `p`.
    pub fn quantization_variance_bound(&self, p: usize) -> f64 {
        self.quant_var[p]
    }

    /// Certified `Σ_{n>M} n^{-2σ_p}`.
    pub fn tail_variance_bound(&self, p: usize) -> f64 {
        tail_bracket_integral(self.points[p].u(), self.terms).hi()
    }

    /// Bound on the L² distance between the evaluated value and `F(σ_p)`
    /// under the coupling described in the module docs.
    pub fn error_std_bound(&self, p: usize) -> f64 {
        self.tail_variance_bound(p).sqrt() + self.quantization_variance_bound(p).sqrt()
    }

    pub(crate) fn head_weight(&self, n: u64, p: usize) -> f64 {
        self.head_weights[(n as usize - 1) * self.points.len() + p]
    }

    pub(crate) fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub(crate) fn block_weight(&self, b: usize, p: usize) -> f64 {
        self.block_weights[b * self.points.len() + p]
    }

    /// `(start, len, segment)` of every block, in index order.
    pub fn block_spans(&self) -> impl Iterator<Item = (u64, u64, usize)> + '_ {
        self.blocks.iter().map(|b| (b.start, b.len, b.segment))
    }

    /// Evaluates every (point, segment) partial sum on `path`.
    /// `out[p·S + s]` receives segment `s` at point `p`.
    pub fn eval_into(&self, path: &SignPath, out: &mut [f64]) {
        let np = self.points.len();
        let ns = self.segments();
        assert_eq!(out.len(), np * ns);
        let mut acc = vec![CompensatedSum::new(); np * ns];
        let mut words = path.words_from(0);
        let mut bits = 0u64;
        for (s, &(first, last)) in self.head_segments.iter().enumerate() {
            for n in first..=last {
                if (n - 1) % 64 == 0 {
                    bits = words.next().expect("sign words are unbounded");
                }
                let plus = (bits >> ((n - 1) % 64)) & 1 == 1;
                let row = &self.head_weights[(n as usize - 1) * np..(n as usize) * np];
                for (p, &w) in row.iter().enumerate() {
                    acc[p * ns + s].add(if plus { w } else { -w });
                }
            }
        }
        if !self.blocks.is_empty() {
            let mut rng = stream_rng(path.seed, STREAM_BLOCKS);
            for (b, blk) in self.blocks.iter().enumerate() {
                let k = blk.fair.sample(&mut rng);
                let sum = 2.0 * k as f64 - blk.len as f64;
                let row = &self.block_weights[b * np..(b + 1) * np];
                for (p, &c) in row.iter().enumerate() {
                    acc[p * ns + blk.segment].add(sum * c);
                }
            }
        }
        for (o, a) in out.iter_mut().zip(&acc) {
            *o = a.value();
        }
    }

    /// Full truncated value at each point.
    pub fn eval(&self, path: &SignPath) -> Vec<f64> {
        let ns = self.segments();
        let mut buf = vec![0.0; self.points.len() * ns];
        self.eval_into(path, &mut buf);
        buf.chunks(ns)
            .map(|c| c.iter().copied().collect::<CompensatedSum>().value())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{eval_truncated, plan_truncation};

    fn sp(u: f64) -> SigmaPoint {
        SigmaPoint::from_u(u).unwrap()
    }

    #[test]
    fn all_exact_when_head_covers_terms() {
        let s = sp(0.5);
        let mut plan = plan_truncation(s, 0.5, 1 << 20).unwrap();
        plan.terms = 3000;
        let st = SharedTermPlan::new(&[s], 3000, StreamConfig::default()).unwrap();
        assert_eq!(st.block_count(), 0);
        for seed in 0..5 {
            let path = SignPath::new(seed);
            let exact = eval_truncated(&path, s, &plan).value;
            let v = st.eval(&path)[0];
            assert!((exact - v).abs() < 1e-12, "{exact} vs {v}");
        }
        assert_eq!(st.quantization_variance_bound(0), 0.0);
    }

    #[test]
    fn blocks_tile_the_index_range() {
        let st = SharedTermPlan::with_segments(
            &[sp(0.2)],
            1_000_000,
            &[5000, 70_001],
            StreamConfig {
                exact_head: 1000,
                block_ratio: 0.05,
            },
        )
        .unwrap();
        let mut next = 1001;
        for b in st.blocks() {
            assert_eq!(b.start, next);
            next = b.start + b.len;
            let seg = if b.start < 5000 { 0 } else if b.start < 70_001 { 1 } else { 2 };
            assert_eq!(b.segment, seg);
            assert!(b.start + b.len <= [5000, 70_001, 1_000_001][seg]);
        }
        assert_eq!(next, 1_000_001);
    }

    #[test]
    fn model_variance_is_below_truncated_variance() {
        let s = sp(0.2);
        let st = SharedTermPlan::new(&[s], 2_000_000, StreamConfig::default()).unwrap();
        let exact: CompensatedSum = (1..=2_000_000u64).map(|n| power_term(n, 1.2)).collect();
        assert!(st.model_variance(0) <= exact.value());
        assert!(exact.value() - st.model_variance(0) < 1e-4);
        assert!(st.quantization_variance_bound(0) < 1e-4);
    }

    #[test]
    fn segments_sum_to_total_and_are_deterministic() {
        let pts = [sp(0.3), sp(0.1)];
        let st = SharedTermPlan::with_segments(&pts, 500_000, &[100, 9000], StreamConfig::default())
            .unwrap();
        let path = SignPath::new(11);
        let mut a = vec![0.0; 6];
        let mut b = vec![0.0; 6];
        st.eval_into(&path, &mut a);
        st.eval_into(&path, &mut b);
        assert_eq!(a, b);
        let tot = st.eval(&path);
        assert!((tot[0] - (a[0] + a[1] + a[2])).abs() < 1e-12);
        assert!((tot[1] - (a[3] + a[4] + a[5])).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        let c = StreamConfig::default();
        assert!(SharedTermPlan::with_segments(&[sp(1.0)], 100, &[50, 50], c).is_err());
        assert!(SharedTermPlan::with_segments(&[sp(1.0)], 100, &[1], c).is_err());
        assert!(SharedTermPlan::with_segments(&[sp(1.0)], 100, &[101], c).is_err());
        assert!(SharedTermPlan::new(&[], 100, c).is_err());
    }
}
