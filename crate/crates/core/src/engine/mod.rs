//! Homomorphic network evaluation over packed image batches.

pub mod channels;
pub mod eval;
pub mod plan;
pub mod tensor;

pub use channels::{
    classify_batch, reconstruct_logits, run_channel, run_channels, ChannelKeys, ChannelResult,
};
pub use eval::{EvalOptions, Evaluator, OpCounters};
pub use plan::{default_capacity, plan_blocks, Block, BlockPlan};
pub use tensor::{pack_images, unpack, CipherTensor, PackingLayout};
