//! Gaussian and multiplier-bootstrap approximations of argmax laws on finite grids.
//!
//! The crate is organised bottom-up:
//!
//! * [`criterion`], [`grid`], [`sample`], [`argmax`]: domain types and the argmax convention.
//! * [`gaussian`]: Gaussian counterpart models, sampling, distances between argmax laws.
//! * [`estimator`]: grid M-estimators, replication, profiling, sieve grids.
//! * [`bootstrap`]: the multiplier bootstrap and the sample-splitting test.
//! * [`coherence`]: Schur-complement audits and the linear Toeplitz family.
//! * [`theory`]: softmax/soft-step surrogates, anti-concentration, entropy integrals, rates.
//! * [`moments`]: population moments by quadrature or exact enumeration, used as oracles.
//!
//! Every stochastic routine takes a master seed. Replication `r` draws from
//! `ChaCha8Rng` seeded with the master and switched to stream `r`, so results do not
//! depend on how replications are scheduled across threads.

pub mod argmax;
pub mod bootstrap;
pub mod coherence;
pub mod criterion;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod gaussian;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod quadrature;
pub mod sample;
pub mod theory;

pub use argmax::{argmax_index, distribution_distance, ArgmaxDistribution, Metric};
pub use criterion::{evaluate_criterion, empirical_criterion, CriterionKind, CriterionSpec, Kernel, Observation};
pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::ParameterGrid;
pub use sample::{DataGenSpec, DataLaw, SampleSet};
