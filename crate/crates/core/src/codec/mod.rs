//! Scalar encoding, plaintext CRT decomposition and scale tracking.

pub mod crt;
pub mod scalar;
pub mod tracker;

pub use crt::CrtSystem;
pub use scalar::{
    decode_scalar, encode_scalar, from_modular, from_modular_big, to_modular, to_modular_big,
};
pub use tracker::ScaleTracker;
