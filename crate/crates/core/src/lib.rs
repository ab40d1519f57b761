//! Noise stability of weighted majority (linear threshold) functions.
//!
//! A weighted majority function is `f(x) = sgn(<w, x> - t)` on the cube
//! `{-1, +1}^n`, taking the three values `-1, 0, +1`. This crate computes the
//! probability `p_eps(n, w, t)` that `f(X)` and `f(N_eps(X))` differ, where
//! `N_eps` flips every coordinate independently with probability `eps`:
//!
//! - [`exact`]: full enumeration and a joint weighted-sum dynamic program,
//!   both with exact rational output on request;
//! - [`bounds`]: the `2 sqrt(eps)` bound, the refined binomial bound, the
//!   Sperner tie bound and the arccos limit for simple majority;
//! - [`montecarlo`]: paired-sample estimation with Wilson intervals and a
//!   bit-parallel path for unit weights;
//! - [`proofcheck`]: executable checks of the random-partition argument
//!   behind the `2 sqrt(eps)` bound;
//! - [`search`]: extremal search for the most noise sensitive weights.

pub mod bounds;
mod error;
pub mod exact;
mod function;
pub mod montecarlo;
mod noise;
pub mod proofcheck;
pub mod rng;
pub mod search;

pub use error::{Error, Result};
pub use function::{reduce_threshold, CubePoint, ReducedThreshold, SignValue, ThresholdFunction};
pub use noise::{apply_noise, FlipRule, NoiseParams};
pub use rng::{CounterRng, RandomSource};
