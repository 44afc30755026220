//! Closed intervals certifying real quantities.
//!
//! Arithmetic here rounds outward by one ulp per operation, which is enough
//! for the correctly rounded `+`, `*`, `/`, `sqrt`. Transcendental maps go
//! through [`Bracket::map_increasing`] with an explicit relative slack.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    lo: f64,
    hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("bracket endpoints must be finite: [{lo}, {hi}]")));
        }
        if lo > hi {
            return Err(invalid(format!("bracket is reversed: [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        debug_assert!(x.is_finite());
        Self { lo: x, hi: x }
    }

    /// Builds `[x(1-rel), x(1+rel)]` rounded outward, for `x >= 0`.
    pub(crate) fn around(x: f64, rel: f64) -> Self {
        debug_assert!(x >= 0.0 && rel >= 0.0);
        if rel == 0.0 {
            return Self::point(x);
        }
        Self {
            lo: (x * (1.0 - rel)).next_down().max(0.0),
            hi: (x * (1.0 + rel)).next_up(),
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width()
    }

    /// Width divided by the magnitude of the midpoint.
    pub fn rel_width(&self) -> f64 {
        let m = self.mid().abs();
        if m == 0.0 {
            if self.width() == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.width() / m
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_bracket(&self, other: &Bracket) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn add(&self, other: &Bracket) -> Bracket {
        let (lo, lo_err) = two_sum(self.lo, other.lo);
        let (hi, hi_err) = two_sum(self.hi, other.hi);
        Bracket {
            lo: if lo_err < 0.0 { lo.next_down() } else { lo },
            hi: if hi_err > 0.0 { hi.next_up() } else { hi },
        }
    }

    /// Product of two brackets with non-negative endpoints.
    pub fn mul_nonneg(&self, other: &Bracket) -> Bracket {
        debug_assert!(self.lo >= 0.0 && other.lo >= 0.0);
        Bracket {
            lo: (self.lo * other.lo).next_down().max(0.0),
            hi: (self.hi * other.hi).next_up(),
        }
    }

    pub fn scale_nonneg(&self, c: f64) -> Bracket {
        debug_assert!(c >= 0.0);
        Bracket {
            lo: (self.lo * c).next_down(),
            hi: (self.hi * c).next_up(),
        }
    }

    /// Applies a non-decreasing map with relative error at most `rel` per
    /// evaluation, rounding outward.
    pub fn map_increasing(&self, f: impl Fn(f64) -> f64, rel: f64) -> Result<Bracket> {
        let lo = f(self.lo);
        let hi = f(self.hi);
        let lo = lo - lo.abs() * rel;
        let hi = hi + hi.abs() * rel;
        Bracket::new(lo.next_down(), hi.next_up())
    }

    pub fn sqrt(&self) -> Result<Bracket> {
        if self.lo < 0.0 {
            return Err(invalid("sqrt of a bracket with negative lower end"));
        }
        Ok(Bracket {
            lo: self.lo.sqrt().next_down().max(0.0),
            hi: self.hi.sqrt().next_up(),
        })
    }

    /// Widens both ends by `slack >= 0`.
    pub fn widen(&self, slack: f64) -> Bracket {
        Bracket {
            lo: (self.lo - slack).next_down(),
            hi: (self.hi + slack).next_up(),
        }
    }
}

/// Error-free transformation: `a + b = s + e` exactly.
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

impl std::fmt::Display for Bracket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_reversed_and_nonfinite() {
        assert!(Bracket::new(2.0, 1.0).is_err());
        assert!(Bracket::new(f64::NAN, 1.0).is_err());
        assert!(Bracket::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn add_encloses_exact_sum() {
        let a = Bracket::new(0.1, 0.2).unwrap();
        let b = Bracket::new(0.3, 0.7).unwrap();
        let s = a.add(&b);
        assert!(s.lo() <= 0.4 && s.hi() >= 0.9);
    }

    #[test]
    fn point_plus_zero_stays_exact() {
        let s = Bracket::point(1.0).add(&Bracket::point(0.0));
        assert_eq!(s.lo(), 1.0);
    }

    #[test]
    fn sqrt_and_rel_width() {
        let b = Bracket::new(4.0, 9.0).unwrap().sqrt().unwrap();
        assert!(b.contains(2.0) && b.contains(3.0));
        assert!((Bracket::new(1.0, 3.0).unwrap().rel_width() - 1.0).abs() < 1e-15);
    }
}
