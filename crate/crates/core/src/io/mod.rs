//! File formats: the HFIR binary container and MNIST IDX input.

pub mod hfir;
pub mod idx;

pub use hfir::{params_for, peek_header, EncryptedBatch, Header, Hfir, Kind, Manifest};
pub use idx::{read_images, read_labels, IdxImages};
