//! Two-way mixed-membership stochastic blockmodels.
//!
//! An `N1 x N2` interaction table is modeled through latent membership
//! vectors for its rows and columns and a `K1 x K2` blockmodel matrix of
//! group-to-group interaction means (Gaussian tables) or probabilities
//! (binary tables). Two inference engines are provided:
//!
//! * [`vem`]: variational EM, coordinate ascent on the evidence lower bound.
//! * [`gibbs`]: a collapsed Gibbs sampler over per-cell group indicators.
//!
//! Around them sit a seeded simulator ([`simgen`]), evaluation metrics
//! ([`eval`]), a time-course to correlation-table pipeline ([`ingest`]), and
//! the experiment runner behind the `mmblock` binary ([`cli`]).

pub mod cli;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod gibbs;
pub mod ingest;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod simgen;
pub mod special;
pub mod table_io;
pub mod vem;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{
    AssignmentPair, Blockmodel, Hyperparams, InteractionTable, LikelihoodKind, MembershipMatrix,
    Priors,
};
