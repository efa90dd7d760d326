//! Lexical-contrast information for distributional word vectors.
//!
//! Two routes inject synonym/antonym knowledge into word representations:
//! re-weighting sparse LMI count vectors ([`weighting::compute_weight_sa`])
//! and training skip-gram embeddings with an extra contrast term
//! ([`embeddings::train_dlce`]). The [`eval`] module holds the metrics used
//! to measure antonym/synonym separation.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod io;
pub mod lexicon;
pub mod reduction;
pub mod scalar;
pub mod seeding;
pub mod synthetic;
pub mod vectors;
pub mod weighting;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Real = f64;
pub type WeightedMatrix = weighting::WeightedMatrix<Real>;
pub type DenseEmbeddings = vectors::DenseEmbeddings<Real>;
