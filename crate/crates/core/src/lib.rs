//! Two-step Bayesian linearization for nonlinear PDE inverse problems.
//!
//! The data `Y = u_f + n^{-1/2} W` are linearized through `u_f = K v + g~`
//! with `v = L u_f`. A conjugate Gaussian posterior is computed for `v` in a
//! singular basis of `K`, and posterior draws are pushed through a
//! problem-specific solution operator `f = e(v)`.
//!
//! Modules, bottom-up:
//! - [`seqspace`]: coefficient sequences, smoothness norms, multi-index ordering.
//! - [`bases`]: analytic singular systems and the numerical SVD path.
//! - [`inference`]: posterior, empirical and hierarchical Bayes, credible balls.
//! - [`observe`]: white-noise and fixed-design data, interpolation.
//! - [`pdes`]: forward solvers, harmonic extensions, solution operators, Darcy.
//! - [`experiments`]: band figures, contraction and coverage studies.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bases;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod observe;
pub mod pdes;
pub mod seqspace;

pub use bases::{BasisKind, HeatEigenPair, SvdSystem, Triple};
pub use error::{Error, Result};
pub use inference::{CredibleBall, PosteriorGaussian, PriorSpec, SeqObservation};
pub use observe::{Axis, DesignObservation, GridFunction};
pub use pdes::{DarcyGrid, FdGrid, Family, ProblemSpec};
pub use seqspace::{CoeffSeq, MultiIndex, SmoothnessScale};

use rand::SeedableRng;

/// Seeded generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Scalar function of a point, shared across threads.
pub type ScalarFn = std::sync::Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

pub fn scalar_fn<F>(f: F) -> ScalarFn
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    std::sync::Arc::new(f)
}
