//! Deep-kernel Gaussian-process surrogate of the oracle.
//!
//! Inputs are one-hot allocation encodings. An MLP maps them to a
//! 16-dimensional embedding, a Matérn kernel acts on embeddings, and the
//! posterior is computed exactly through a Cholesky factorization of the
//! regularized kernel matrix. Targets are standardized log-utilities.

mod embed;
mod kernel;
pub mod linalg;
mod model;
pub mod special;

pub use embed::{fit_embedding, regression_loss_and_grad, EmbeddingConfig, EmbeddingFit};
pub use kernel::{euclidean, matern52, matern_general, matern_kernel, matern_of_distance, GpHyperparams};
pub use model::{gram_matrix, GpConfig, GpModel, GridPoint, Prediction};
