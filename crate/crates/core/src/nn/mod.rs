//! Plaintext integer networks: architectures, quantizer, reference
//! evaluation and operation counts.

pub mod audit;
pub mod model;
pub mod oracle;
pub mod quantize;
pub mod spec;
pub mod tensor;

pub use audit::{count_model_ops, count_ops, Audit, OpCounts};
pub use model::{Layer, QuantizedModel};
pub use oracle::{
    avg_pool, classify, conv2d, forward, forward_batch, forward_trace, fully_connected,
    square_layer,
};
pub use quantize::{integerize, quantize_weight};
pub use spec::{LayerSpec, NetworkSpec, Shape};
pub use tensor::IntTensor;
