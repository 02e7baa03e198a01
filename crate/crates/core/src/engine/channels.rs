//! Plaintext-CRT orchestration: one independent evaluation per `t_i`.

use std::sync::Arc;

use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::eval::{EvalOptions, Evaluator};
use super::tensor::{pack_images, unpack, PackingLayout};
use crate::bfv::{BfvParams, PublicKey, RelinKey, SecretKey};
use crate::codec::CrtSystem;
use crate::error::{Error, Result};
use crate::nn::{IntTensor, OpCounts, QuantizedModel};

/// Key material of one CRT channel.
pub struct ChannelKeys {
    pub params: Arc<BfvParams>,
    pub sk: SecretKey,
    pub pk: PublicKey,
    pub rlk: RelinKey,
}

/// Decrypted logits per channel: `logits[channel][unit][image]` mod `t_i`.
/// A `None` entry marks a channel whose result is missing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelResult {
    pub moduli: Vec<u64>,
    pub batch: usize,
    pub logits: Vec<Option<Vec<Vec<u64>>>>,
    pub counts: Vec<OpCounts>,
}

/// Encrypts, evaluates and decrypts one channel.
pub fn run_channel(
    images: &[IntTensor],
    model: &QuantizedModel,
    keys: &ChannelKeys,
    channel: usize,
    options: &EvalOptions,
    seed: u64,
) -> Result<(Vec<Vec<u64>>, OpCounts)> {
    let layout = PackingLayout::for_params(&keys.params, images.len())?;
    let mut rng =
        ChaCha20Rng::seed_from_u64(seed ^ (channel as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let x = pack_images(images, &layout, &keys.pk, channel, &mut rng)?;
    let ev = Evaluator::new(Some(&keys.rlk), options.clone())?;
    let y = ev.eval_network(x, model)?;
    Ok((unpack(&y, &layout, &keys.sk)?, ev.counters.snapshot()))
}

/// Runs every channel; channels are independent and may proceed in parallel.
pub fn run_channels(
    images: &[IntTensor],
    model: &QuantizedModel,
    keys: &[ChannelKeys],
    options: &EvalOptions,
    seed: u64,
) -> Result<ChannelResult> {
    let pool = options.pool()?;
    let results: Vec<Result<(Vec<Vec<u64>>, OpCounts)>> = pool.install(|| {
        keys.par_iter()
            .enumerate()
            .map(|(c, k)| run_channel(images, model, k, c, options, seed))
            .collect()
    });
    let mut logits = Vec::with_capacity(keys.len());
    let mut counts = Vec::with_capacity(keys.len());
    for r in results {
        let (l, c) = r?;
        logits.push(Some(l));
        counts.push(c);
    }
    Ok(ChannelResult {
        moduli: keys.iter().map(|k| k.params.plain_modulus()).collect(),
        batch: images.len(),
        logits,
        counts,
    })
}

/// Signed logits per image, `[image][unit]`, via CRT reconstruction and
/// the centered lift modulo `T`.
pub fn reconstruct_logits(result: &ChannelResult, crt: &CrtSystem) -> Result<Vec<Vec<BigInt>>> {
    if result.moduli != crt.moduli() {
        return Err(Error::mismatch(
            "channel moduli do not match the CRT system",
        ));
    }
    let channels: Vec<&Vec<Vec<u64>>> = result
        .logits
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.as_ref().ok_or_else(|| {
                Error::IncompleteResult(format!(
                    "channel {i} (t = {}) is missing",
                    result.moduli[i]
                ))
            })
        })
        .collect::<Result<_>>()?;
    let units = channels.first().map_or(0, |c| c.len());
    if channels.iter().any(|c| c.len() != units) {
        return Err(Error::mismatch(
            "channels disagree on the number of outputs",
        ));
    }
    (0..result.batch)
        .map(|img| {
            (0..units)
                .map(|u| {
                    let residues: Vec<u64> = channels
                        .iter()
                        .map(|c| {
                            c[u].get(img).copied().ok_or_else(|| {
                                Error::IncompleteResult(format!(
                                    "image {img} missing from a channel"
                                ))
                            })
                        })
                        .collect::<Result<_>>()?;
                    crt.reconstruct_signed(&residues)
                })
                .collect()
        })
        .collect()
}

/// Argmax per image with the lowest index winning ties.
pub fn classify_batch(logits: &[Vec<BigInt>]) -> Vec<usize> {
    logits.iter().map(|l| crate::nn::classify(l)).collect()
}
