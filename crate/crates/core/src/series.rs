//! Series core: σ points, certified zeta and variance brackets, truncation
//! plans, and compensated evaluation of the truncated series.
//!
//! All exponents are passed as gaps above 1 where possible: the variance is
//! `𝔼F(σ)² = ζ(2σ) = ζ(1 + u)` with `u = 2σ - 1`, and `u` is the quantity that
//! must stay accurate near the abscissa.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bracket::Bracket;
use crate::error::{invalid, Error, Result};
use crate::rng::SignPath;
use crate::summation::CompensatedSum;

/// Direct partial sums longer than this are refused by [`zeta_bracket`].
pub const DEFAULT_TERM_BUDGET: u64 = 1 << 32;

/// Chunk length for summation; a multiple of 64 so chunks start on sign-word boundaries.
pub const CHUNK: u64 = 1 << 16;

const EPS: f64 = f64::EPSILON;

/// A point `σ > 1/2`, stored as `u = 2σ - 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SigmaPoint {
    u: f64,
}

impl SigmaPoint {
    pub fn from_u(u: f64) -> Result<Self> {
        if !(u.is_finite() && u > 0.0) {
            return Err(invalid(format!("u = 2σ-1 must be positive and finite, got {u}")));
        }
        Ok(Self { u })
    }

    /// Convenience constructor; loses the low bits of `u` when `σ` is close to 1/2.
    pub fn from_sigma(sigma: f64) -> Result<Self> {
        Self::from_u(2.0 * sigma - 1.0)
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn sigma(&self) -> f64 {
        0.5 + 0.5 * self.u
    }

    /// `n^{-σ}`.
    #[inline]
    pub fn weight(&self, n: u64) -> f64 {
        (n as f64).powf(-self.sigma())
    }
}

/// `n^{-exponent}` with `n` converted exactly (n < 2^53).
#[inline]
pub(crate) fn power_term(n: u64, exponent: f64) -> f64 {
    (n as f64).powf(-exponent)
}

/// Relative error bound of a computed `n^{-s}` for `n <= m`, including the
/// effect of a half-ulp perturbation of `s` itself.
pub(crate) fn term_rel_error(s: f64, m: u64) -> f64 {
    (0.5 * s.abs() * (m.max(1) as f64).ln() + 4.0) * EPS
}

/// Compensated `Σ_{n=1}^{m} n^{-exponent}`, chunked and merged in ascending order.
pub(crate) fn power_sum(exponent: f64, m: u64) -> CompensatedSum {
    let chunks = m.div_ceil(CHUNK);
    let chunk_sum = |c: u64| {
        let first = c * CHUNK + 1;
        let last = ((c + 1) * CHUNK).min(m);
        let mut s = CompensatedSum::new();
        for n in first..=last {
            s.add(power_term(n, exponent));
        }
        s
    };
    let parts: Vec<CompensatedSum> = if chunks > 4 {
        (0..chunks).into_par_iter().map(chunk_sum).collect()
    } else {
        (0..chunks).map(chunk_sum).collect()
    };
    let mut total = CompensatedSum::new();
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Certified bracket for `Σ_{n=1}^{m} n^{-(1+gap)}`. The `n = 1` term is exact.
pub(crate) fn partial_bracket(gap: f64, m: u64) -> Bracket {
    let s = 1.0 + gap;
    let sum = power_sum(s, m);
    let v = sum.value();
    let rest = (sum.abs_sum() - 1.0).max(0.0);
    let slack = term_rel_error(s, m) * rest + sum.error_bound() * f64::from(u8::from(m > 1));
    if slack == 0.0 {
        Bracket::point(v)
    } else {
        Bracket::point(v).widen(slack)
    }
}

/// `x^{-gap} / gap` with an outward relative slack; `x >= 1`.
fn integral_tail_from(gap: f64, x: f64) -> (f64, f64) {
    let val = (-gap * x.ln()).exp() / gap;
    let rel = (gap * x.ln() + 6.0) * EPS;
    (val, rel)
}

/// Integral comparison for the tail `Σ_{n>m} n^{-(1+gap)}`:
/// `∫_{m+1}^∞ x^{-s} dx <= tail <= ∫_m^∞ x^{-s} dx = m^{-gap}/gap`.
pub fn tail_bracket_integral(gap: f64, m: u64) -> Bracket {
    let (hi, rel_hi) = integral_tail_from(gap, m as f64);
    let (lo, rel_lo) = integral_tail_from(gap, m as f64 + 1.0);
    let lo = (lo * (1.0 - rel_lo)).next_down().max(0.0);
    // m = 1 gives exactly 1/gap
    let hi = if m == 1 { hi } else { (hi * (1.0 + rel_hi)).next_up() };
    Bracket::new(lo, hi.max(lo)).expect("integral tail bracket")
}

/// Euler–Maclaurin bracket for `Σ_{n>m} n^{-(1+gap)}`, `m >= 1`.
///
/// Two correction terms are kept; `x^{-s}` is completely monotone, so the
/// remainder lies between zero and the first omitted term.
pub fn zeta_tail_em(gap: f64, m: u64) -> Bracket {
    assert!(m >= 1 && gap > 0.0);
    let s = 1.0 + gap;
    let x = m as f64;
    let lx = x.ln();
    let (integral, rel) = integral_tail_from(gap, x);
    let fm = (-s * lx).exp();
    let c1 = s * fm / (12.0 * x);
    let c2 = s * (s + 1.0) * (s + 2.0) * fm / (720.0 * x * x * x);
    let c3 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * fm / (30240.0 * x.powi(5));
    let base = integral - 0.5 * fm + c1 - c2;
    let slack = rel * integral + 16.0 * EPS * (fm + c1 + c2 + base.abs());
    let em = Bracket::new((base - slack).next_down(), (base + c3 + slack).next_up())
        .expect("Euler-Maclaurin tail bracket");
    // Both enclosures are valid; for small m the integral one can be tighter.
    let int = tail_bracket_integral(gap, m);
    let lo = em.lo().max(int.lo());
    let hi = em.hi().min(int.hi());
    Bracket::new(lo, hi.max(lo)).expect("tail bracket intersection")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaBracket {
    pub terms: u64,
    pub partial: Bracket,
    pub tail: Bracket,
    pub total: Bracket,
}

/// Brackets `ζ(s)` as a certified partial sum over `n <= m` plus the
/// integral-comparison tail.
pub fn zeta_bracket(s: f64, m: u64) -> Result<ZetaBracket> {
    zeta_bracket_budgeted(s, m, DEFAULT_TERM_BUDGET)
}

pub fn zeta_bracket_budgeted(s: f64, m: u64, budget: u64) -> Result<ZetaBracket> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::DivergentZeta { s });
    }
    zeta_bracket_gap(s - 1.0, m, budget)
}

/// [`zeta_bracket`] at `s = 1 + gap`, keeping `gap` exact.
pub fn zeta_bracket_gap(gap: f64, m: u64, budget: u64) -> Result<ZetaBracket> {
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::DivergentZeta { s: 1.0 + gap });
    }
    if m == 0 {
        return Err(invalid("zeta_bracket needs at least one term"));
    }
    if m > budget {
        return Err(Error::TermBudget {
            requested: m,
            budget,
        });
    }
    let partial = partial_bracket(gap, m);
    let tail = tail_bracket_integral(gap, m);
    Ok(ZetaBracket {
        terms: m,
        partial,
        tail,
        total: partial.add(&tail),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VarianceOptions {
    /// Target relative width of the bracket.
    pub rel_tol: f64,
    /// Largest partial sum the bracket may use.
    pub term_budget: u64,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            term_budget: 1 << 28,
        }
    }
}

/// Bracket for `𝔼F(σ)² = ζ(2σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variance {
    pub bracket: Bracket,
    pub terms: u64,
    /// Set when the term budget stopped the bracket short of the tolerance.
    pub loose: bool,
}

pub fn variance(sigma: SigmaPoint) -> Result<Variance> {
    variance_with(sigma, &VarianceOptions::default())
}

pub fn variance_with(sigma: SigmaPoint, opts: &VarianceOptions) -> Result<Variance> {
    let gap = sigma.u();
    let s = 1.0 + gap;
    let z_lo = (1.0 / gap).max(1.0);
    // Tail width is about m^{-s}; start there and double until it fits.
    let guess = (opts.rel_tol * z_lo).powf(-1.0 / s) * 1.1;
    let mut m = if guess.is_finite() { guess.ceil().clamp(1.0, 1e18) as u64 } else { 1 };
    m = m.min(opts.term_budget).max(1);
    loop {
        let z = zeta_bracket_gap(gap, m, opts.term_budget)?;
        if z.total.rel_width() <= opts.rel_tol {
            return Ok(Variance {
                bracket: z.total,
                terms: m,
                loose: false,
            });
        }
        if m >= opts.term_budget {
            return Ok(Variance {
                bracket: z.total,
                terms: m,
                loose: true,
            });
        }
        m = (m.saturating_mul(2)).min(opts.term_budget);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivVariance {
    /// Encloses `𝔼F'(σ)² = Σ n^{-2σ} log² n`.
    pub bracket: Bracket,
    pub terms: u64,
    /// `∫_1^∞ t^{-2σ} log² t dt = 2/u³`.
    pub closed_form: f64,
    /// `bracket.hi / closed_form`.
    pub certified_constant: f64,
    /// Proven constant `1 + 2u³/(s²e²)`: the sum exceeds the integral by at
    /// most the peak value `(2/s)² e^{-2}` of the unimodal summand.
    pub peak_constant: f64,
}

fn log_sq_term(n: u64, s: f64) -> f64 {
    let x = n as f64;
    let l = x.ln();
    x.powf(-s) * l * l
}

/// `∫_m^∞ x^{-s} log² x dx = e^{-uL}(L²/u + 2L/u² + 2/u³)`, `L = log m`.
fn log_sq_tail_integral(u: f64, x: f64) -> f64 {
    let l = x.ln();
    (-u * l).exp() * (l * l / u + 2.0 * l / (u * u) + 2.0 / (u * u * u))
}

pub fn deriv_variance_bracket(sigma: SigmaPoint) -> Result<DerivVariance> {
    deriv_variance_with(sigma, &VarianceOptions::default())
}

pub fn deriv_variance_with(sigma: SigmaPoint, opts: &VarianceOptions) -> Result<DerivVariance> {
    let u = sigma.u();
    let s = 1.0 + u;
    let closed_form = 2.0 / (u * u * u);
    // Summand is decreasing beyond e^{2/s} < 8.
    let mut m: u64 = 8;
    loop {
        let sum: CompensatedSum = (1..=m).map(|n| log_sq_term(n, s)).collect();
        let rel = term_rel_error(s, m) + 8.0 * EPS;
        let partial = Bracket::around(sum.value(), rel).widen(sum.error_bound());
        let t_hi = log_sq_tail_integral(u, m as f64);
        let t_lo = log_sq_tail_integral(u, m as f64 + 1.0);
        let trel = (u * (m as f64).ln() + 16.0) * EPS;
        let tail = Bracket::new(
            (t_lo * (1.0 - trel)).next_down().max(0.0),
            (t_hi * (1.0 + trel)).next_up(),
        )?;
        let total = partial.add(&tail);
        if total.rel_width() <= opts.rel_tol || m >= opts.term_budget {
            return Ok(DerivVariance {
                bracket: total,
                terms: m,
                closed_form,
                certified_constant: total.hi() / closed_form,
                peak_constant: 1.0 + 2.0 * u * u * u / (s * s * std::f64::consts::E.powi(2)),
            });
        }
        m = m.saturating_mul(2).min(opts.term_budget);
    }
}

/// A term count `M` with a certified bound on the variance of the dropped tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    pub u: f64,
    pub terms: u64,
    /// Natural log of the smallest `M` meeting the target (may exceed the budget).
    pub log_required_terms: f64,
    /// Upper bound on `Σ_{n>M} n^{-2σ}`.
    pub tail_variance_bound: f64,
    pub tail_std_bound: f64,
    pub target_fraction: f64,
    /// `tail_variance_bound / variance.lo`.
    pub achieved_fraction: f64,
    pub feasible: bool,
    pub variance: Bracket,
}

impl TruncationPlan {
    pub fn sigma(&self) -> SigmaPoint {
        SigmaPoint { u: self.u }
    }
}

pub fn plan_truncation(
    sigma: SigmaPoint,
    target_fraction: f64,
    term_budget: u64,
) -> Result<TruncationPlan> {
    plan_truncation_with(sigma, target_fraction, term_budget, &variance(sigma)?)
}

/// [`plan_truncation`] against an already computed variance bracket.
pub fn plan_truncation_with(
    sigma: SigmaPoint,
    target_fraction: f64,
    term_budget: u64,
    var: &Variance,
) -> Result<TruncationPlan> {
    if !(target_fraction > 0.0 && target_fraction < 1.0) {
        return Err(invalid(format!(
            "target_fraction must lie in (0, 1), got {target_fraction}"
        )));
    }
    if term_budget == 0 {
        return Err(invalid("term budget must be positive"));
    }
    let u = sigma.u();
    let allowed = target_fraction * var.bracket.lo();
    let tail_hi = |m: u64| tail_bracket_integral(u, m).hi();
    // m^{-u}/u <= allowed  <=>  log m >= -log(u·allowed)/u
    let log_req = (-(u * allowed).ln() / u).max(0.0);
    let plan = |m: u64, feasible: bool| {
        let tv = tail_hi(m);
        TruncationPlan {
            u,
            terms: m,
            log_required_terms: log_req,
            tail_variance_bound: tv,
            tail_std_bound: tv.sqrt(),
            target_fraction,
            achieved_fraction: tv / var.bracket.lo(),
            feasible,
            variance: var.bracket,
        }
    };
    if log_req > (term_budget as f64).ln() + 1e-9 {
        let p = plan(term_budget, false);
        if p.tail_variance_bound <= allowed {
            return Ok(TruncationPlan { feasible: true, ..p });
        }
        return Ok(p);
    }
    let mut m = (log_req.exp().ceil() as u64).clamp(1, term_budget);
    while m > 1 && tail_hi(m - 1) <= allowed {
        m -= 1;
    }
    while tail_hi(m) > allowed {
        if m >= term_budget {
            return Ok(plan(term_budget, false));
        }
        m += 1;
    }
    Ok(plan(m, true))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// `Σ_{n<=M} Xₙ n^{-σ}`.
    pub value: f64,
    /// Upper bound on `Σ_{n<=M} n^{-σ}`, including rounding.
    pub magnitude_bound: f64,
    pub plan: TruncationPlan,
    pub sigma: SigmaPoint,
}

/// Evaluates the truncated series exactly term by term.
///
/// Terms are summed in fixed chunks of [`CHUNK`] indices, each with a
/// compensated accumulator, and the chunk sums are merged in ascending order.
/// The result is therefore bit-identical for any rayon pool size.
pub fn eval_truncated(path: &SignPath, sigma: SigmaPoint, plan: &TruncationPlan) -> EvalResult {
    assert_eq!(
        plan.u.to_bits(),
        sigma.u().to_bits(),
        "truncation plan was built for a different σ"
    );
    let m = plan.terms;
    let exponent = sigma.sigma();
    let chunks = m.div_ceil(CHUNK);
    let chunk_sum = |c: u64| {
        let first = c * CHUNK + 1;
        let last = ((c + 1) * CHUNK).min(m);
        let mut s = CompensatedSum::new();
        let mut words = path.words_from((first - 1) / 64);
        let mut n = first;
        while n <= last {
            let bits = words.next().expect("sign words are unbounded");
            let end = (n + 63).min(last);
            for (i, k) in (n..=end).enumerate() {
                let w = power_term(k, exponent);
                s.add(if (bits >> i) & 1 == 1 { w } else { -w });
            }
            n = end + 1;
        }
        s
    };
    let parts: Vec<CompensatedSum> = if chunks > 4 {
        (0..chunks).into_par_iter().map(chunk_sum).collect()
    } else {
        (0..chunks).map(chunk_sum).collect()
    };
    let mut total = CompensatedSum::new();
    for p in &parts {
        total.merge(p);
    }
    let magnitude_bound =
        total.abs_sum() * (1.0 + term_rel_error(exponent, m) + 4.0 * EPS) + total.error_bound();
    EvalResult {
        value: total.value(),
        magnitude_bound,
        plan: *plan,
        sigma,
    }
}

/// Brackets for the LIL normalisers at `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilScale {
    /// `𝔼F(σ)²`.
    pub ef2: Bracket,
    /// `f(σ) = √(2 log log 𝔼F(σ)²)`.
    pub f: Bracket,
    /// `√(2 𝔼F(σ)² log log 𝔼F(σ)²)`.
    pub denom: Bracket,
}

pub fn lil_scale(sigma: SigmaPoint) -> Result<LilScale> {
    lil_scale_from_variance(variance(sigma)?.bracket)
}

pub fn lil_scale_from_variance(ef2: Bracket) -> Result<LilScale> {
    if !(ef2.lo() > std::f64::consts::E) {
        return Err(Error::LoglogUndefined {
            variance_lo: ef2.lo(),
        });
    }
    // log is accurate to an ulp; log log inherits an absolute error of about
    // (relative error of log x) / 1, which we widen by explicitly.
    let ll = |x: f64| x.ln().ln();
    let ll_lo = ll(ef2.lo());
    let ll_hi = ll(ef2.hi());
    let abs = 4.0 * EPS + 2.0 * EPS * ll_hi.abs();
    let loglog = Bracket::new((ll_lo - abs).max(0.0), ll_hi + abs)?;
    let f = loglog.scale_nonneg(2.0).sqrt()?;
    let denom = ef2.mul_nonneg(&loglog).scale_nonneg(2.0).sqrt()?;
    Ok(LilScale { ef2, f, denom })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    /// `F / √(mid 𝔼F²)`.
    pub value: f64,
    pub variance_mid: f64,
    /// Half-width of the variance bracket relative to its midpoint.
    pub variance_rel_half_width: f64,
}

/// `F̄ = F / √(𝔼F²)` using the midpoint of the plan's variance bracket.
pub fn normalize(r: &EvalResult) -> Normalized {
    let var = r.plan.variance;
    let mid = var.mid();
    Normalized {
        value: r.value / mid.sqrt(),
        variance_mid: mid,
        variance_rel_half_width: var.half_width() / mid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sigma_point_roundtrip_and_domain() {
        let p = SigmaPoint::from_u(1e-12).unwrap();
        assert_eq!(p.u(), 1e-12);
        assert!(SigmaPoint::from_u(0.0).is_err());
        assert!(SigmaPoint::from_u(-1.0).is_err());
        assert!(SigmaPoint::from_sigma(0.5).is_err());
        assert_eq!(SigmaPoint::from_sigma(1.0).unwrap().u(), 1.0);
    }

    #[test]
    fn zeta_single_term() {
        let z = zeta_bracket(2.0, 1).unwrap();
        assert_eq!(z.partial.lo(), 1.0);
        assert_eq!(z.partial.hi(), 1.0);
        assert_eq!(z.tail.hi(), 1.0);
    }

    #[test]
    fn zeta_two_encloses_pi_sq_over_six() {
        let z = zeta_bracket(2.0, 1_000_000).unwrap();
        assert!(z.total.contains(PI * PI / 6.0));
    }

    #[test]
    fn zeta_domain_and_budget_errors() {
        assert!(matches!(zeta_bracket(1.0, 10), Err(Error::DivergentZeta { .. })));
        assert!(matches!(zeta_bracket(0.5, 10), Err(Error::DivergentZeta { .. })));
        assert!(matches!(
            zeta_bracket_budgeted(2.0, 101, 100),
            Err(Error::TermBudget { .. })
        ));
    }

    #[test]
    fn em_tail_is_inside_integral_tail() {
        for &gap in &[0.01, 0.2, 0.5, 1.0, 3.0] {
            for &m in &[1u64, 5, 100, 10_000] {
                let em = zeta_tail_em(gap, m);
                let int = tail_bracket_integral(gap, m);
                assert!(int.contains_bracket(&em), "gap={gap} m={m} em={em} int={int}");
            }
        }
    }

    #[test]
    fn em_tail_matches_brute_force_difference() {
        // Σ_{n>10} n^{-2} = ζ(2) - Σ_{n<=10} n^{-2}
        let head: f64 = (1..=10).map(|n: u64| 1.0 / (n * n) as f64).sum();
        let tail = PI * PI / 6.0 - head;
        let em = zeta_tail_em(1.0, 10);
        assert!(em.widen(1e-15).contains(tail), "{em} vs {tail}");
        assert!(em.width() < 5e-9);
    }

    #[test]
    fn variance_large_sigma_is_near_one() {
        let v = variance(SigmaPoint::from_sigma(10.0).unwrap()).unwrap();
        assert!(v.bracket.lo() >= 1.0 && v.bracket.hi() <= 1.0 + 1e-5);
    }

    #[test]
    fn variance_width_meets_tolerance() {
        for &u in &[1e-6, 0.02, 0.2, 1.0] {
            let v = variance(SigmaPoint::from_u(u).unwrap()).unwrap();
            assert!(!v.loose);
            assert!(v.bracket.rel_width() <= 1e-8, "u={u}");
            assert!(v.bracket.lo() >= 1.0 / u);
        }
    }

    #[test]
    fn variance_loose_flag_when_budget_too_small() {
        let opts = VarianceOptions {
            rel_tol: 1e-12,
            term_budget: 100,
        };
        let v = variance_with(SigmaPoint::from_u(0.5).unwrap(), &opts).unwrap();
        assert!(v.loose);
        assert_eq!(v.terms, 100);
    }

    #[test]
    fn plan_rejects_bad_fraction() {
        let s = SigmaPoint::from_u(1.0).unwrap();
        assert!(plan_truncation(s, 0.0, 100).is_err());
        assert!(plan_truncation(s, 1.0, 100).is_err());
    }

    #[test]
    fn plan_single_term_at_sigma_two() {
        let p = plan_truncation(SigmaPoint::from_sigma(2.0).unwrap(), 0.5, 1_000).unwrap();
        assert!(p.feasible);
        assert_eq!(p.terms, 1);
    }

    #[test]
    fn eval_single_term_is_sign() {
        let s = SigmaPoint::from_u(0.5).unwrap();
        let mut plan = plan_truncation(s, 0.5, 10).unwrap();
        plan.terms = 1;
        for seed in 0..20 {
            let path = SignPath::new(seed);
            let r = eval_truncated(&path, s, &plan);
            assert_eq!(r.value, f64::from(path.sign(1)));
        }
    }

    #[test]
    fn lil_scale_closed_form() {
        let e2 = std::f64::consts::E.powi(2);
        let l = lil_scale_from_variance(Bracket::point(e2)).unwrap();
        let expect = (2.0 * 2f64.ln()).sqrt();
        assert!(l.f.widen(1e-15).contains(expect), "{} vs {expect}", l.f);
        assert!(l.f.width() < 1e-14);
    }

    #[test]
    fn lil_scale_rejects_small_variance() {
        assert!(matches!(
            lil_scale_from_variance(Bracket::point(2.5)),
            Err(Error::LoglogUndefined { .. })
        ));
        assert!(lil_scale(SigmaPoint::from_u(1.0).unwrap()).is_err());
    }

    #[test]
    fn normalize_zero_and_homogeneous() {
        let s = SigmaPoint::from_u(1.0).unwrap();
        let plan = plan_truncation(s, 0.1, 1000).unwrap();
        let mk = |v: f64| EvalResult {
            value: v,
            magnitude_bound: 10.0,
            plan,
            sigma: s,
        };
        assert_eq!(normalize(&mk(0.0)).value, 0.0);
        let a = normalize(&mk(0.75)).value;
        let b = normalize(&mk(1.5)).value;
        assert_eq!(2.0 * a, b);
        let one = normalize(&mk(PI / 6f64.sqrt())).value;
        assert!((one - 1.0).abs() < 1e-8);
    }
}
