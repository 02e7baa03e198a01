pub mod batching;
pub mod bfv;
pub mod cli;
pub mod codec;
pub mod engine;
pub mod error;
pub mod io;
pub mod nn;
pub mod presets;
pub mod ring;

pub use error::{Error, Result};
