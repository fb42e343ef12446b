//! Dense arrays, a reverse-mode tape and seeded random streams.

pub mod array;
pub mod gradcheck;
pub mod graph;
pub mod rng;

pub use array::{layer_norm, matmul, softmax, softmax_slice, Array};
pub use graph::{GroupLayout, Graph, NodeId, ParamId, ParamStore, Parameter};
pub use rng::RngStream;
