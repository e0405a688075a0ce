//! Likelihood-ratio discrimination between close hypotheses about light-tailed
//! parametric families, using only the `k` largest order statistics of a sample.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure function
//! of its inputs: the companion `toplr` crate adds file formats, the CLI and a
//! parallel experiment runner on top.
//!
//! Module map:
//!
//! - [`family`]: the density contract `f(x, γ) = exp(-S(x, γ))` and the
//!   builtin families with analytic partial derivatives.
//! - [`distribution`]: a family frozen at one `γ` with its true normalized
//!   CDF, survival function and quantiles.
//! - [`asymptotics`]: Laplace tail expansion, intermediate quantile, local
//!   step, centering term, Von Mises parts and regularity diagnostics.
//! - [`likelihood_ratio`]: the exact top-k log-likelihood ratio, its
//!   three-factor decomposition and the one-sided test.
//! - [`sampling`]: seeded top-k and exceedance sampling.
//! - [`experiments`]: replicated Monte Carlo checks of the limit laws.

#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod distribution;
mod error;
pub mod experiments;
pub mod family;
pub mod likelihood_ratio;
pub(crate) mod math;
pub mod quadrature;
pub mod roots;
pub mod sampling;
pub mod special;
pub mod stats;

pub use distribution::TailDistribution;
pub use error::{Error, Result};
pub use family::{builtin_family, Builtin, Normalizer, RegularityClass, TailFamily};
pub use likelihood_ratio::{LrReport, TopKSample};
pub use sampling::SeededStream;
