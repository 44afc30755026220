//! Compensated (Neumaier) summation with a deterministic merge.

use std::ops::AddAssign;

/// Neumaier's variant of Kahan summation. Unlike plain Kahan it stays
/// accurate when an addend is larger than the running sum, which happens
/// for signed series.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs_sum: f64,
    count: u64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs_sum += x.abs();
        self.count += 1;
    }

    /// Folds `other` in after `self`. Merging chunk sums in a fixed order
    /// gives the same bits regardless of which thread produced each chunk.
    pub fn merge(&mut self, other: &CompensatedSum) {
        let count = self.count + other.count;
        let abs_sum = self.abs_sum + other.abs_sum;
        self.add(other.sum);
        self.add(other.comp);
        self.count = count;
        self.abs_sum = abs_sum;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Sum of the magnitudes of all addends seen so far.
    pub fn abs_sum(&self) -> f64 {
        self.abs_sum
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// A bound on the accumulated rounding error of [`value`](Self::value),
    /// `(2u + 2nu²)·Σ|xᵢ|` with `u` the unit roundoff.
    pub fn error_bound(&self) -> f64 {
        let u = f64::EPSILON / 2.0;
        let n = self.count as f64;
        (2.0 * u + 2.0 * n * u * u) * self.abs_sum
    }
}

impl AddAssign<f64> for CompensatedSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}
