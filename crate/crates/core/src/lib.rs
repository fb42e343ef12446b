//! Generative forecasting of multi-agent team-sport trajectories.
//!
//! The crate is organised bottom-up:
//!
//! - [`numeric`]: arrays, a reverse-mode tape, seeded random streams.
//! - [`data`]: the frame-dictionary clip format, resampling, refinement,
//!   normalization, windowing and flip augmentation.
//! - [`backbone`]: tokenization, embeddings and the factorized
//!   spatial/temporal attention encoder, plus checkpoints.
//! - [`diffusion`]: noise schedule, denoising objective, reverse sampler and
//!   causal sliding-window rollout.
//! - [`event`]: attention pooling and the hierarchical type/subtype heads.
//! - [`train`]: learning-rate schedule, Adam/AdamW and the training loops.
//! - [`metrics`]: displacement errors, team-structure metrics and
//!   EPV-based offense/defense metrics.
//! - [`fixtures`]: synthetic datasets used by tests and demos.

pub mod error;
pub mod backbone;
pub mod data;
pub mod diffusion;
pub mod event;
pub mod fixtures;
pub mod metrics;
pub mod numeric;
pub mod train;

pub use error::{Error, Result};
