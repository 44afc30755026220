//! Numerical laboratory for the law of the iterated logarithm of the random
//! Dirichlet series
//!
//! ```text
//! F(σ) = Σₙ Xₙ n^{-σ},   Xₙ i.i.d. uniform on {-1, +1},   σ > 1/2.
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`series`]: reproducible sign paths, certified zeta/variance brackets,
//!   truncation plans and the compensated evaluation of `F(σ)`.
//! * [`stream`]: shared-term streaming evaluation used by the Monte Carlo
//!   studies (exact head plus aggregated sign-count blocks).
//! * [`schedules`]: the `σ_k` sequences, the split points `N₁/N₂` in log space,
//!   dyadic grids and chaining thresholds.
//! * [`bounds`]: Hoeffding, MGF sandwich, the tilt function `h(t)` and the
//!   bisection solver for `h(t₀) = target`.
//! * [`tilted`]: sampling under the exponentially tilted product measure and
//!   importance-sampling tail estimates.
//! * [`experiments`]: seeded, re-runnable studies producing [`experiments::RunRecord`]s.
//! * [`cli`]: the `dlil` front end.
//!
//! Every point `σ` is carried as the gap `u = 2σ - 1` ([`SigmaPoint`]) so that
//! quantities such as `1/(2σ-1)` stay accurate as `σ → 1/2⁺`.

// `!(x <= y)` is used on purpose so that NaN fails the comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod bracket;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod golden;
pub mod rng;
pub mod schedules;
pub mod series;
pub mod stats;
pub mod stream;
pub mod summation;
pub mod tilted;

pub use bracket::Bracket;
pub use error::{Error, Result};
pub use rng::{GeneratorId, SignPath};
pub use series::{EvalResult, SigmaPoint, TruncationPlan};
