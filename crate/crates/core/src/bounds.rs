//! Closed-form deviation bounds and the tilt equation `h(t₀) = target`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bracket::Bracket;
use crate::error::{invalid, Error, Result};
use crate::series::{power_term, tail_bracket_integral, variance, zeta_tail_em, SigmaPoint};
use crate::summation::CompensatedSum;

const EPS: f64 = f64::EPSILON;

/// `exp(−λ²/(2·sum_sq))`: one-sided Hoeffding bound for `Σ aₖXₖ` with `Σ aₖ² <= sum_sq`.
pub fn hoeffding_bound(sum_sq: f64, lambda: f64) -> Result<f64> {
    if !(sum_sq > 0.0 && lambda > 0.0) || !sum_sq.is_finite() || lambda.is_nan() {
        return Err(invalid(format!(
            "hoeffding needs sum_sq > 0 and lambda > 0, got {sum_sq}, {lambda}"
        )));
    }
    Ok((-lambda * lambda / (2.0 * sum_sq)).exp())
}

/// Two-sided form, `min(1, 2·exp(−λ²/(2·sum_sq)))`.
pub fn hoeffding_two_sided(sum_sq: f64, lambda: f64) -> Result<f64> {
    Ok((2.0 * hoeffding_bound(sum_sq, lambda)?).min(1.0))
}

/// `log cosh x`, stable for large `|x|`.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgfSandwich {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds on `𝔼 exp(t·F̄(σ))` from `x²/2 − x⁴/8 <= log cosh x <= x²/2`.
pub fn mgf_sandwich(sigma: SigmaPoint, t: f64) -> Result<MgfSandwich> {
    Ok(mgf_sandwich_from(variance(sigma)?.bracket, t))
}

pub fn mgf_sandwich_from(ef2: Bracket, t: f64) -> MgfSandwich {
    let t2 = t * t;
    let lo = ef2.lo();
    MgfSandwich {
        lower: (t2 / 2.0 - t2 * t2 * PI * PI / (48.0 * lo * lo)).exp(),
        upper: (t2 / 2.0).exp(),
    }
}

/// `(1/2 − ε)·exp(−½δ²(1+λ)²f²)`.
pub fn ld_lower_bound(delta: f64, f_val: f64, lambda: f64, eps: f64) -> Result<f64> {
    if !(delta >= 0.0 && f_val >= 0.0 && lambda > 0.0 && eps > 0.0 && eps < 0.5) {
        return Err(invalid(format!(
            "ld_lower_bound parameters out of range: δ={delta}, f={f_val}, λ={lambda}, ε={eps}"
        )));
    }
    let x = delta * (1.0 + lambda) * f_val;
    Ok((0.5 - eps) * (-0.5 * x * x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdExponent {
    pub exponent: f64,
    /// `Σ k^{-exponent}` diverges.
    pub diverges: bool,
}

/// `(1−γ)²(1+λ)²(1+δ)`.
pub fn ld_exponent(gamma: f64, lambda: f64, delta: f64) -> Result<LdExponent> {
    let ok = |x: f64| (0.0..1.0).contains(&x);
    if !(ok(gamma) && ok(lambda) && ok(delta)) {
        return Err(invalid(format!(
            "ld_exponent parameters must lie in [0, 1): γ={gamma}, λ={lambda}, δ={delta}"
        )));
    }
    let exponent = (1.0 - gamma).powi(2) * (1.0 + lambda).powi(2) * (1.0 + delta);
    Ok(LdExponent {
        exponent,
        diverges: exponent <= 1.0,
    })
}

/// Largest head the tilt function will materialize.
const H_HEAD_CAP: u64 = 1 << 26;
const H_HEAD_MIN: u64 = 64;

/// `h(t) = Σ tanh(t·vₙ)·vₙ` with `vₙ = n^{-σ}/norm`, `norm = √(mid 𝔼F(σ)²)`.
///
/// The head `n <= N` is summed directly. Beyond it
/// `x − x³/3 <= tanh x <= x − x³/3 + 2x⁵/15` (`x >= 0`) reduces the tail to
/// the zeta tails `Σ_{n>N} n^{-2σ}`, `n^{-4σ}`, `n^{-6σ}`.
#[derive(Debug, Clone)]
pub struct TiltFunction {
    sigma: SigmaPoint,
    ef2: Bracket,
    norm: f64,
    head: Vec<f64>,
    z2: Bracket,
    z4: Bracket,
    z6_hi: f64,
}

impl TiltFunction {
    /// Sized so that `h(t)` for `t <= t_max` is bracketed to width about `tol`.
    pub fn new(sigma: SigmaPoint, t_max: f64, tol: f64) -> Result<Self> {
        Self::with_variance(sigma, variance(sigma)?.bracket, t_max, tol)
    }

    pub fn with_variance(sigma: SigmaPoint, ef2: Bracket, t_max: f64, tol: f64) -> Result<Self> {
        if !(t_max >= 0.0 && tol > 0.0) {
            return Err(invalid("tilt function needs t_max >= 0 and tol > 0"));
        }
        let u = sigma.u();
        let norm = ef2.mid().sqrt();
        let g6 = 2.0 + 3.0 * u;
        // (2t⁵/15)·N^{-g6}/(g6·norm⁶) <= tol/4
        let c = 2.0 * t_max.powi(5) / 15.0 / (g6 * norm.powi(6));
        let n = if c > 0.0 {
            ((c / (tol / 4.0)).ln() / g6).exp().ceil()
        } else {
            0.0
        };
        let n = if n.is_finite() { (n as u64).clamp(H_HEAD_MIN, H_HEAD_CAP) } else { H_HEAD_CAP };
        let s = sigma.sigma();
        let head = (1..=n).map(|k| power_term(k, s) / norm).collect();
        Ok(Self {
            sigma,
            ef2,
            norm,
            head,
            z2: zeta_tail_em(u, n),
            z4: zeta_tail_em(1.0 + 2.0 * u, n),
            z6_hi: tail_bracket_integral(g6, n).hi(),
        })
    }

    pub fn sigma(&self) -> SigmaPoint {
        self.sigma
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn ef2(&self) -> Bracket {
        self.ef2
    }

    pub fn head_len(&self) -> u64 {
        self.head.len() as u64
    }

    pub fn eval(&self, t: f64) -> Bracket {
        assert!(t >= 0.0, "h(t) is defined for t >= 0");
        if t == 0.0 {
            return Bracket::point(0.0);
        }
        let sum: CompensatedSum = self.head.iter().map(|&v| (t * v).tanh() * v).collect();
        let head_slack = 8.0 * EPS * sum.abs_sum() + sum.error_bound();
        let n2 = self.norm * self.norm;
        let n4 = n2 * n2;
        let t3 = t * t * t;
        let lo = t * self.z2.lo() / n2 - t3 / 3.0 * self.z4.hi() / n4;
        let hi = t * self.z2.hi() / n2 - t3 / 3.0 * self.z4.lo() / n4
            + 2.0 * t3 * t * t / 15.0 * self.z6_hi / (n4 * n2);
        let slack = head_slack + 8.0 * EPS * (t * self.z2.hi() / n2 + t3 * self.z4.hi() / n4);
        let v = sum.value();
        Bracket::new((v + lo - slack).next_down(), (v + hi + slack).next_up())
            .expect("tilt bracket")
    }
}

/// Enclosure of `h(t)` at tolerance `tol`.
pub fn h_of_t(sigma: SigmaPoint, t: f64, tol: f64) -> Result<Bracket> {
    if !(t >= 0.0) {
        return Err(invalid(format!("h(t) needs t >= 0, got {t}")));
    }
    Ok(TiltFunction::new(sigma, t, tol)?.eval(t))
}

/// Tilted product measure: `P̃(Xₙ = +1) = e^{θₙ}/(2 cosh θₙ)`, `θₙ = t₀·n^{-σ}/norm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedModel {
    pub sigma: SigmaPoint,
    pub t0: f64,
    pub target: f64,
    /// `√(mid 𝔼F(σ)²)`.
    pub norm: f64,
    pub ef2: Bracket,
    /// `max |h(t₀) − target|` over the enclosure of `h(t₀)`.
    pub residual: f64,
    pub tol: f64,
    /// `target·(1 + 27π²target²/(96·ef2.lo²))`.
    pub refined_upper: f64,
}

impl TiltedModel {
    /// The untilted measure written as a model with `t₀ = 0`.
    pub fn untilted(sigma: SigmaPoint) -> Result<Self> {
        let ef2 = variance(sigma)?.bracket;
        Ok(Self {
            sigma,
            t0: 0.0,
            target: 0.0,
            norm: ef2.mid().sqrt(),
            ef2,
            residual: 0.0,
            tol: 0.0,
            refined_upper: 0.0,
        })
    }

    pub fn theta(&self, n: u64) -> f64 {
        self.t0 * self.sigma.weight(n) / self.norm
    }
}

pub fn default_t0_tol(target: f64) -> f64 {
    1e-10 * target.max(1.0)
}

/// `(2/3)·t̂` with `t̂ = (2/π)·ef2.lo`.
pub fn tilt_target_limit(ef2: Bracket) -> f64 {
    2.0 / 3.0 * (2.0 / PI) * ef2.lo()
}

/// Solves `h(t₀) = target` by bisection on `[target, 1.5·target]`.
pub fn solve_t0(sigma: SigmaPoint, target: f64, tol: f64) -> Result<TiltedModel> {
    solve_t0_with(sigma, variance(sigma)?.bracket, target, tol)
}

pub fn solve_t0_with(sigma: SigmaPoint, ef2: Bracket, target: f64, tol: f64) -> Result<TiltedModel> {
    if !(target >= 0.0 && target.is_finite() && tol > 0.0) {
        return Err(invalid(format!("solve_t0 needs target >= 0 and tol > 0, got {target}, {tol}")));
    }
    let limit = tilt_target_limit(ef2);
    if target >= limit {
        return Err(Error::TiltTargetTooLarge { target, limit });
    }
    let norm = ef2.mid().sqrt();
    let refined_upper = target * (1.0 + 27.0 * PI * PI * target * target / (96.0 * ef2.lo().powi(2)));
    if target == 0.0 {
        return Ok(TiltedModel {
            sigma,
            t0: 0.0,
            target,
            norm,
            ef2,
            residual: 0.0,
            tol,
            refined_upper,
        });
    }
    let h = TiltFunction::with_variance(sigma, ef2, 1.5 * target, tol / 8.0)?;
    let mut lo = target;
    let mut hi = 1.5 * target;
    while hi - lo > tol / 2.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h.eval(mid).mid() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t0 = 0.5 * (lo + hi);
    let hb = h.eval(t0);
    let residual = (hb.lo() - target).abs().max((hb.hi() - target).abs());
    Ok(TiltedModel {
        sigma,
        t0,
        target,
        norm,
        ef2,
        residual,
        tol,
        refined_upper,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    HoeffdingUpper,
    MgfUpper,
    MgfLower,
    LdLower,
}

/// One evaluated bound with its inputs, for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value: f64,
    /// True when `value` is a log-probability rather than a probability.
    pub log_value: bool,
    pub params: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn new(kind: BoundKind, value: f64, params: &[(&str, f64)]) -> Self {
        Self {
            kind,
            value,
            log_value: false,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hoeffding_examples() {
        assert!((hoeffding_bound(1.0, 1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-16);
        assert!((hoeffding_bound(4.0 / 3.0, 2.0).unwrap() - (-1.5f64).exp()).abs() < 1e-15);
        assert!(hoeffding_bound(1.0, 1e-9).unwrap() > 1.0 - 1e-15);
        assert!(hoeffding_bound(0.0, 1.0).is_err());
        assert!(hoeffding_bound(1.0, -1.0).is_err());
        assert_eq!(hoeffding_two_sided(1.0, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn log_cosh_is_stable() {
        assert_eq!(log_cosh(0.0), 0.0);
        assert!((log_cosh(1000.0) - (1000.0 - std::f64::consts::LN_2)).abs() < 1e-12);
        assert!((log_cosh(0.3) - 0.3f64.cosh().ln()).abs() < 1e-16);
    }

    #[test]
    fn mgf_sandwich_at_sigma_one() {
        let z2 = PI * PI / 6.0;
        let m = mgf_sandwich_from(Bracket::point(z2), 1.0);
        let expect = (0.5 - PI * PI / (48.0 * z2 * z2)).exp();
        assert!((m.lower - expect).abs() < 1e-15);
        assert_eq!(m.upper, 0.5f64.exp());
        let z = mgf_sandwich_from(Bracket::point(z2), 0.0);
        assert_eq!((z.lower, z.upper), (1.0, 1.0));
    }

    #[test]
    fn ld_examples() {
        assert_eq!(ld_lower_bound(0.0, 1.0, 0.1, 0.1).unwrap(), 0.4);
        assert!(ld_lower_bound(1.0, 1.0, 0.1, 0.5).is_err());
        let e = ld_exponent(0.2, 0.05, 0.05).unwrap();
        assert!(e.diverges && (e.exponent - 0.74088).abs() < 1e-5);
        let e = ld_exponent(0.0, 0.05, 0.05).unwrap();
        assert!(!e.diverges && (e.exponent - 1.157625).abs() < 1e-12);
        let e = ld_exponent(0.2, 0.0, 0.0).unwrap();
        assert!((e.exponent - 0.64).abs() < 1e-15 && e.diverges);
    }

    #[test]
    fn h_at_zero_and_small_t() {
        let s = SigmaPoint::from_sigma(2.0).unwrap();
        assert_eq!(h_of_t(s, 0.0, 1e-10).unwrap(), Bracket::point(0.0));
        let h = h_of_t(s, 0.1, 1e-12).unwrap();
        assert!(h.hi() <= 0.1 * (1.0 + 1e-8));
        assert!(h.width() <= 2e-12);
    }

    #[test]
    fn solver_zero_target_and_guard() {
        let s = SigmaPoint::from_sigma(1.0).unwrap();
        assert_eq!(solve_t0(s, 0.0, 1e-10).unwrap().t0, 0.0);
        assert!(matches!(solve_t0(s, 1.0, 1e-10), Err(Error::TiltTargetTooLarge { .. })));
    }

    #[test]
    fn solver_sigma_one_half_target() {
        let s = SigmaPoint::from_sigma(1.0).unwrap();
        // (2/3)(2/π)(π²/6) ≈ 0.698, so 0.5 is solvable
        let m = solve_t0(s, 0.5, 1e-10).unwrap();
        assert!(m.t0 >= 0.5 && m.t0 <= 0.75);
        assert!(m.residual <= 1e-10, "residual {}", m.residual);
        assert!(m.t0 <= m.refined_upper);
    }
}
