//! Tuning-free learning rates for stochastic optimization.
//!
//! The central piece is a secant-style learning rate computed from two gradient
//! evaluations on a small "LR batch" `S_H`:
//!
//! ```text
//! alpha_t = 1/sqrt(b_H) * |g|^2 / <grad F_SH(x + g), g>,   g = grad F_SH(x)
//! ```
//!
//! which grows as the gradient norm shrinks and vice versa. It drives three
//! optimizers (A-SGD, A-SGDM, A-signSGD) and is benchmarked against constant,
//! diminishing, Barzilai-Borwein, stochastic Polyak and multiplicative rules.
//!
//! Module map:
//!
//! - [`param`], [`rng`]: parameter vectors, seeded sampling of mini-batches.
//! - [`data`]: LIBSVM and IDX readers, synthetic problems with known optima.
//! - [`models`]: loss/gradient oracles (logistic, squared-hinge SVM, MLP, least squares).
//! - [`lr`]: every learning-rate rule.
//! - [`optim`]: step rules and the training loop.
//! - [`metrics`], [`harness`]: metric logs, CSV/SVG output, experiment drivers.

pub mod data;
pub mod error;
pub mod harness;
pub mod lr;
pub mod metrics;
pub mod models;
pub mod optim;
pub mod param;
pub mod rng;

pub use error::{Error, Result};
pub use param::ParamVector;
pub use rng::{sample_batch, IndexBatch, RngState};
