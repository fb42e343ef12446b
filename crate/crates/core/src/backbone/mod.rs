//! Tokenization and the factorized spatio-temporal attention encoder.

pub mod checkpoint;
pub mod encoder;
pub mod grid;
pub mod layers;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, sha256_hex, Checkpoint};
pub use encoder::{sinusoidal, Backbone, BackboneConfig};
pub use grid::{ForecastMode, GridBatch, TokenGrid};
pub use layers::{Init, Linear, Norm, ParamBuilder};
