//! Variational inference with uniform-weight mixtures of isotropic Gaussians.
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod geometry;
pub mod mixture;
pub mod optim;
pub mod rng;
pub mod runner;
pub mod targets;

pub use error::{Error, Result};
pub use mixture::{FullCovGaussian, FullCovMixtureState, IsotropicGaussian, MixtureState, VariationalMixture};
pub use targets::Target;
