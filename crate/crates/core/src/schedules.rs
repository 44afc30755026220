//! σ_k schedules, split points in log space, dyadic chaining grids, and
//! desk-scale surrogate splits.

use serde::{Deserialize, Serialize};

use crate::bracket::Bracket;
use crate::error::{invalid, Error, Result};
use crate::series::{partial_bracket, variance, zeta_tail_em, SigmaPoint};
use crate::summation::CompensatedSum;

/// `-log(f64::MIN_POSITIVE)`; larger exponents make `u_k` subnormal.
const MAX_EXPONENT: f64 = 708.396_418_532_264_1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `u_k = exp(-k^{1+δ})`.
    Lower,
    /// `u_k = exp(-k^{1-δ})`.
    Upper,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Self::Lower),
            "upper" => Ok(Self::Upper),
            other => Err(Error::Config(format!(
                "unknown schedule kind {other:?} (expected lower or upper)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub delta: f64,
    pub k_min: u64,
    pub k_max: u64,
}

impl Schedule {
    /// A schedule over `0..=k_max` where `k_max` is the last representable index.
    pub fn new(kind: ScheduleKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) || (kind == ScheduleKind::Upper && delta >= 1.0) {
            return Err(invalid(format!("schedule delta out of range: {delta}")));
        }
        let mut s = Self {
            kind,
            delta,
            k_min: 0,
            k_max: u64::MAX,
        };
        // largest k with k^p <= MAX_EXPONENT
        let mut k = MAX_EXPONENT.powf(1.0 / s.power()).floor() as u64;
        while s.exponent(k + 1) <= MAX_EXPONENT {
            k += 1;
        }
        while k > 0 && s.exponent(k) > MAX_EXPONENT {
            k -= 1;
        }
        s.k_max = k;
        Ok(s)
    }

    pub fn with_range(mut self, k_min: u64, k_max: u64) -> Self {
        self.k_min = k_min;
        self.k_max = k_max;
        self
    }

    fn power(&self) -> f64 {
        match self.kind {
            ScheduleKind::Lower => 1.0 + self.delta,
            ScheduleKind::Upper => 1.0 - self.delta,
        }
    }

    /// `k^{1±δ}`, i.e. `-log u_k`.
    pub fn exponent(&self, k: u64) -> f64 {
        (k as f64).powf(self.power())
    }
}

/// `σ_k` as a [`SigmaPoint`] with `u_k = exp(-k^{1±δ})`.
pub fn sigma_seq(sched: &Schedule, k: u64) -> Result<SigmaPoint> {
    if k < sched.k_min || k > sched.k_max {
        return Err(Error::ScheduleOutOfRange {
            k,
            k_min: sched.k_min,
            k_max: sched.k_max,
        });
    }
    let e = sched.exponent(k);
    let u = (-e).exp();
    if !(u >= f64::MIN_POSITIVE) {
        return Err(Error::Unrepresentable { k, log_u: -e });
    }
    SigmaPoint::from_u(u)
}

/// Step 1 split points, held in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub k: u64,
    pub delta: f64,
    /// `log N₁`; infinite once `exp(k^{1+δ})` overflows.
    pub log_n1: f64,
    pub log_n2: f64,
    /// `log log N₁`, always finite.
    pub log_log_n1: f64,
    pub log_log_n2: f64,
    pub alpha_k: f64,
    /// `log β_k`; `β_k` itself underflows for moderate k.
    pub log_beta_k: f64,
    pub beta_k: f64,
    /// `log log N₁(k+1) − log log N₂(k)`; non-negative when the blocks are disjoint.
    pub independence_margin: f64,
}

/// `log(1 + exp(-k^{1+δ}) − (log k)^{-1/2})`, or `None` when the base is not in (0, 1).
fn log_split_base(k: u64, delta: f64) -> (f64, Option<f64>) {
    let x = -(k as f64).powf(1.0 + delta);
    let arg = x.exp() - (k as f64).ln().powf(-0.5);
    let base = 1.0 + arg;
    if k < 2 || !(arg > -1.0 && arg < 0.0) {
        return (base, None);
    }
    (base, Some(arg.ln_1p()))
}

/// `log β_min`: the smallest admissible `log β_k` for the independence gap.
fn log_beta_min(k: u64, delta: f64) -> Result<f64> {
    let p = 1.0 + delta;
    let (base, lb) = log_split_base(k + 1, delta);
    let lb = lb.ok_or(Error::ScheduleUndefined { k: k + 1, base })?;
    let kf = k as f64;
    // (k+1)^p − k^p = k^p·expm1(p·log1p(1/k))
    let diff = kf.powf(p) * (p * (1.0 / kf).ln_1p()).exp_m1();
    Ok(kf.ln().ln() + diff.exp() * lb)
}

/// Grid for `β_k`: powers `10^{j/16}`.
const BETA_STEPS_PER_DECADE: f64 = 16.0;

pub fn split_points(sched: &Schedule, k: u64) -> Result<SplitPlan> {
    if sched.kind != ScheduleKind::Lower {
        return Err(invalid("split points are defined for the lower schedule"));
    }
    let delta = sched.delta;
    let (base, lb) = log_split_base(k, delta);
    let lb = lb.ok_or(Error::ScheduleUndefined { k, base })?;
    let e = (k as f64).powf(1.0 + delta);
    let lnk = (k as f64).ln();
    let lnlnk = lnk.ln();

    let lbm = log_beta_min(k, delta)?;
    let j = (lbm / std::f64::consts::LN_10 * BETA_STEPS_PER_DECADE).ceil();
    let log_beta = j * std::f64::consts::LN_10 / BETA_STEPS_PER_DECADE;
    if log_beta >= lnlnk {
        return Err(Error::BetaUnsatisfiable {
            k,
            log_beta_min: lbm,
        });
    }
    let log_log_n1 = e + (-lb).ln();
    let log_log_n2 = e + (lnlnk - log_beta).ln();
    // log log N₁(k+1) − log log N₂(k), without forming the huge exponents
    let margin = {
        let (b1, lb1) = log_split_base(k + 1, delta);
        let lb1 = lb1.ok_or(Error::ScheduleUndefined { k: k + 1, base: b1 })?;
        let p = 1.0 + delta;
        let kf = k as f64;
        let diff = kf.powf(p) * (p * (1.0 / kf).ln_1p()).exp_m1();
        diff + (-lb1).ln() - (lnlnk - log_beta).ln()
    };
    Ok(SplitPlan {
        k,
        delta,
        log_n1: log_log_n1.exp(),
        log_n2: log_log_n2.exp(),
        log_log_n1,
        log_log_n2,
        alpha_k: lnk.sqrt(),
        log_beta_k: log_beta,
        beta_k: log_beta.exp(),
        independence_margin: margin,
    })
}

/// Smallest `k >= 2` at which [`split_points`] succeeds, searching up to `limit`.
pub fn split_k_min(delta: f64, limit: u64) -> Result<u64> {
    let sched = Schedule::new(ScheduleKind::Lower, delta)?;
    (2..=limit)
        .find(|&k| split_points(&sched, k).is_ok())
        .ok_or_else(|| invalid(format!("no admissible split index up to {limit} for δ = {delta}")))
}

/// Dyadic grid on `[σ_k, σ_{k-1}]` of the upper schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub k: u64,
    pub delta: f64,
    pub level_cap: u32,
    pub c0: f64,
    pub u_k: f64,
    pub u_prev: f64,
}

impl DyadicGrid {
    pub fn new(sched: &Schedule, k: u64, level_cap: u32, c0: f64) -> Result<Self> {
        if sched.kind != ScheduleKind::Upper {
            return Err(invalid("dyadic grids use the upper schedule"));
        }
        if k == 0 {
            return Err(invalid("dyadic grid needs k >= 1"));
        }
        if level_cap > 52 {
            return Err(invalid("level cap above 52 loses dyadic exactness"));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(invalid(format!("c0 must be positive, got {c0}")));
        }
        Ok(Self {
            k,
            delta: sched.delta,
            level_cap,
            c0,
            u_k: sigma_seq(sched, k)?.u(),
            u_prev: sigma_seq(sched, k - 1)?.u(),
        })
    }

    /// `σ_{k-1} − σ_k`.
    pub fn delta_sigma(&self) -> f64 {
        0.5 * (self.u_prev - self.u_k)
    }

    pub fn sigma_k(&self) -> SigmaPoint {
        SigmaPoint::from_u(self.u_k).expect("grid endpoints are valid")
    }

    /// All points of level `l`, `n = 0..=2^l`.
    pub fn level(&self, l: u32) -> Result<Vec<SigmaPoint>> {
        (0..=(1u64 << l)).map(|n| dyadic_points(self, l, n)).collect()
    }
}

/// `τ_{l,n} = σ_k + (n/2^l)(σ_{k-1} − σ_k)`, interpolated in `u`.
///
/// `n/2^l` is exact in binary, so `τ_{l,2n}` and `τ_{l-1,n}` are computed
/// from identical operands and agree bit for bit.
pub fn dyadic_points(grid: &DyadicGrid, l: u32, n: u64) -> Result<SigmaPoint> {
    if l > grid.level_cap {
        return Err(Error::IndexOutOfRange(format!(
            "level {l} above cap {}",
            grid.level_cap
        )));
    }
    let top = 1u64 << l;
    if n > top {
        return Err(Error::IndexOutOfRange(format!("n = {n} above 2^{l}")));
    }
    if n == top {
        return SigmaPoint::from_u(grid.u_prev);
    }
    let frac = n as f64 / top as f64;
    SigmaPoint::from_u(grid.u_k + frac * (grid.u_prev - grid.u_k))
}

/// `λ_{k,l} = √((2/c₀)·exp(k^{1−δ})·l/4^l)`.
pub fn chain_threshold(grid: &DyadicGrid, l: u32) -> f64 {
    let e = (grid.k as f64).powf(1.0 - grid.delta);
    let lf = f64::from(l);
    (2.0 / grid.c0 * lf * (e - 2.0 * lf * std::f64::consts::LN_2).exp()).sqrt()
}

/// Both sides of the union-bound comparison over levels `1..=levels`:
/// `Σ 2^l exp(−c₀λ²/2 · 4^l k^{2δ}/exp(k^{1−δ}))` and `Σ exp((−k^{2δ} + log 2)·l)`.
pub fn chain_union_bound(grid: &DyadicGrid, levels: u32) -> (f64, f64) {
    let k = grid.k as f64;
    let e = k.powf(1.0 - grid.delta);
    let k2d = k.powf(2.0 * grid.delta);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for l in 1..=levels {
        let lam = chain_threshold(grid, l);
        let lf = f64::from(l);
        let expo = -grid.c0 * lam * lam / 2.0 * k2d * (2.0 * lf * std::f64::consts::LN_2 - e).exp();
        lhs += (lf * std::f64::consts::LN_2 + expo).exp();
        rhs += ((-k2d + std::f64::consts::LN_2) * lf).exp();
    }
    (lhs, rhs)
}

/// A desk-scale split `F = F₁ + F₂ + F₃` with `F₁ = Σ_{n<=N₁}` and `F₃ = Σ_{n>N₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSplit {
    pub u: f64,
    pub n1: u64,
    pub n2: u64,
    pub eps1: f64,
    pub eps2: f64,
    pub variance: Bracket,
    /// `Σ_{n<=N₁} n^{-2σ}`.
    pub head_mass: Bracket,
    /// `Σ_{n>N₂} n^{-2σ}`.
    pub tail_mass: Bracket,
    /// Mass of the last head term `N₁^{-2σ}` (or 0 when `N₁ = 0`).
    pub head_step: f64,
    /// Mass of the last index inside `F₂`, `N₂^{-2σ}`.
    pub tail_step: f64,
}

impl SurrogateSplit {
    pub fn head_fraction(&self) -> f64 {
        self.head_mass.mid() / self.variance.mid()
    }

    pub fn tail_fraction(&self) -> f64 {
        self.tail_mass.mid() / self.variance.mid()
    }
}

/// Largest head and smallest tail index a search will consider.
const SPLIT_BUDGET: u64 = 1 << 32;

pub fn surrogate_split(sigma: SigmaPoint, eps1: f64, eps2: f64) -> Result<SurrogateSplit> {
    if !(eps1 > 0.0 && eps1 < 1.0 && eps2 > 0.0 && eps2 < 1.0) {
        return Err(invalid(format!("eps1, eps2 must lie in (0, 1): {eps1}, {eps2}")));
    }
    let u = sigma.u();
    let s = 1.0 + u;
    let var = variance(sigma)?.bracket;

    let head_cap = eps1 * var.lo();
    let rel = crate::series::term_rel_error(s, SPLIT_BUDGET);
    let mut acc = CompensatedSum::new();
    let mut n1 = 0u64;
    loop {
        let w = crate::series::power_term(n1 + 1, s);
        let mut trial = acc;
        trial.add(w);
        let hi = trial.value() * (1.0 + rel) + trial.error_bound();
        if hi > head_cap {
            break;
        }
        acc = trial;
        n1 += 1;
        if n1 >= SPLIT_BUDGET {
            return Err(Error::TermBudget {
                requested: n1 + 1,
                budget: SPLIT_BUDGET,
            });
        }
    }

    let tail_cap = eps2 * var.lo();
    let fits = |m: u64| zeta_tail_em(u, m).hi() <= tail_cap;
    let mut hi = 1u64;
    while !fits(hi) {
        if hi >= SPLIT_BUDGET {
            return Err(Error::Infeasible {
                u,
                terms: hi,
                target_fraction: eps2,
                achieved_fraction: zeta_tail_em(u, hi).hi() / var.lo(),
            });
        }
        hi = (hi * 2).min(SPLIT_BUDGET);
    }
    let mut lo = hi / 2;
    // invariant: !fits(lo) or lo == 0, fits(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let n2 = if lo >= 1 && fits(lo) { lo } else { hi };
    if n1 >= n2 {
        return Err(invalid(format!(
            "split blocks overlap: N1 = {n1} >= N2 = {n2}; lower eps1 + eps2"
        )));
    }
    let head_mass = if n1 == 0 {
        Bracket::point(0.0)
    } else {
        partial_bracket(u, n1)
    };
    Ok(SurrogateSplit {
        u,
        n1,
        n2,
        eps1,
        eps2,
        variance: var,
        head_mass,
        tail_mass: zeta_tail_em(u, n2),
        head_step: if n1 == 0 { 0.0 } else { crate::series::power_term(n1, s) },
        tail_step: crate::series::power_term(n2, s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lower() -> Schedule {
        Schedule::new(ScheduleKind::Lower, 0.1).unwrap()
    }

    fn upper() -> Schedule {
        Schedule::new(ScheduleKind::Upper, 0.1).unwrap()
    }

    #[test]
    fn sigma_seq_examples() {
        assert_eq!(sigma_seq(&lower(), 1).unwrap().u(), (-1.0f64).exp());
        let u8 = sigma_seq(&upper(), 8).unwrap().u();
        assert!((u8.ln() + 8f64.powf(0.9)).abs() < 1e-12);
        assert!((8f64.powf(0.9) - 6.498).abs() < 1e-3);
    }

    #[test]
    fn sigma_seq_range_and_underflow() {
        let s = lower();
        assert!(sigma_seq(&s, s.k_max).is_ok());
        assert!(matches!(
            sigma_seq(&s, s.k_max + 1),
            Err(Error::ScheduleOutOfRange { .. })
        ));
        let wide = s.with_range(0, u64::MAX);
        assert!(matches!(
            sigma_seq(&wide, s.k_max + 1),
            Err(Error::Unrepresentable { .. })
        ));
    }

    #[test]
    fn split_k2_is_undefined() {
        match split_points(&lower(), 2) {
            Err(Error::ScheduleUndefined { base, .. }) => {
                assert!((base - (1.0 + 0.1172 - 1.2011)).abs() < 1e-3)
            }
            other => panic!("expected undefined schedule, got {other:?}"),
        }
    }

    #[test]
    fn split_k_min_for_default_delta() {
        let k = split_k_min(0.1, 1000).unwrap();
        assert_eq!(k, 3);
        let p = split_points(&lower(), k).unwrap();
        assert!(p.independence_margin >= 0.0);
        assert!(p.log_n2 > p.log_n1);
    }

    #[test]
    fn dyadic_examples() {
        let g = DyadicGrid::new(&upper(), 2, 6, 1.0).unwrap();
        let mid = dyadic_points(&g, 1, 1).unwrap();
        assert!((mid.u() - 0.5 * (g.u_k + g.u_prev)).abs() < 1e-16);
        assert_eq!(dyadic_points(&g, 0, 1).unwrap().u(), g.u_prev);
        assert_eq!(dyadic_points(&g, 0, 0).unwrap().u(), g.u_k);
        assert_eq!(
            dyadic_points(&g, 3, 6).unwrap().u().to_bits(),
            dyadic_points(&g, 2, 3).unwrap().u().to_bits()
        );
        assert!(dyadic_points(&g, 7, 0).is_err());
        assert!(dyadic_points(&g, 2, 5).is_err());
    }

    #[test]
    fn chain_threshold_example() {
        let g = DyadicGrid::new(&upper(), 1, 6, 1.0).unwrap();
        let lam = chain_threshold(&g, 1);
        assert!((lam * lam - 2.0 * std::f64::consts::E / 4.0).abs() < 1e-14);
        assert!((lam - 1.166).abs() < 1e-3);
    }

    #[test]
    fn surrogate_split_small_eps1_has_empty_head() {
        let s = surrogate_split(SigmaPoint::from_sigma(0.75).unwrap(), 1e-9, 0.3).unwrap();
        assert_eq!(s.n1, 0);
        let s = surrogate_split(SigmaPoint::from_sigma(2.0).unwrap(), 0.1, 0.5).unwrap();
        assert!(s.n2 == 1 || s.n2 == 2, "n2 = {}", s.n2);
    }
}
