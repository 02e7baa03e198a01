//! Layer-by-layer homomorphic evaluation.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use num_bigint::BigUint;
use rayon::ThreadPool;

use super::plan::{default_capacity, plan_blocks, BlockPlan};
use super::tensor::CipherTensor;
use crate::bfv::{hadd_plain, hsquare, Ciphertext, Plaintext, RelinKey};
use crate::codec::scalar::{from_modular, reduce_signed};
use crate::error::{Error, Result};
use crate::nn::oracle::{conv_taps, pool_taps};
use crate::nn::{Layer, LayerSpec, OpCounts, QuantizedModel, Shape};

/// Work item producing `(output position, ciphertext)` pairs.
type Job<'a> = Box<dyn FnOnce() -> Result<Vec<(usize, Ciphertext)>> + Send + 'a>;

/// Primitive-call counters, shared across workers.
#[derive(Debug, Default)]
pub struct OpCounters {
    pub mult_plain: AtomicU64,
    pub square: AtomicU64,
    pub add: AtomicU64,
}

impl OpCounters {
    pub fn snapshot(&self) -> OpCounts {
        OpCounts {
            mult_plain: self.mult_plain.load(Ordering::Relaxed),
            square: self.square.load(Ordering::Relaxed),
        }
    }

    pub fn adds(&self) -> u64 {
        self.add.load(Ordering::Relaxed)
    }
}

/// Evaluation settings.
#[derive(Clone, Debug)]
pub struct EvalOptions {
    /// Worker threads (0 = available parallelism).
    pub workers: usize,
    /// Memory budget used to derive the block capacity `η`.
    pub mem_budget_bytes: u64,
    /// Explicit `η`, overriding the budget-derived value.
    pub capacity: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            workers: 0,
            mem_budget_bytes: 2 << 30,
            capacity: None,
        }
    }
}

impl EvalOptions {
    pub fn pool(&self) -> Result<ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Capacity(format!("cannot start workers: {e}")))
    }
}

/// Shared state of one network evaluation.
pub struct Evaluator<'a> {
    pub rlk: Option<&'a RelinKey>,
    pub options: EvalOptions,
    pub counters: OpCounters,
    pool: ThreadPool,
}

/// Runs `jobs` on the pool in submission order and collects the results
/// in the same order. Layer boundaries act as barriers.
fn run_fifo<T: Send>(
    pool: &ThreadPool,
    jobs: Vec<Box<dyn FnOnce() -> Result<T> + Send + '_>>,
) -> Result<Vec<T>> {
    let slots: Vec<Mutex<Option<Result<T>>>> = (0..jobs.len()).map(|_| Mutex::new(None)).collect();
    pool.scope_fifo(|s| {
        for (job, slot) in jobs.into_iter().zip(&slots) {
            s.spawn_fifo(move |_| {
                *slot.lock().unwrap() = Some(job());
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("job finished"))
        .collect()
}

impl<'a> Evaluator<'a> {
    pub fn new(rlk: Option<&'a RelinKey>, options: EvalOptions) -> Result<Self> {
        Ok(Evaluator {
            rlk,
            pool: options.pool()?,
            options,
            counters: OpCounters::default(),
        })
    }

    fn capacity(&self, params_degree: usize, log2_q: f64) -> usize {
        self.options.capacity.unwrap_or_else(|| {
            default_capacity(self.options.mem_budget_bytes, params_degree, log2_q)
        })
    }

    /// Weighted sum of input ciphertexts with the weights reduced into the
    /// tensor's plaintext modulus; zero weights are skipped.
    fn weighted_sum(
        &self,
        x: &CipherTensor,
        taps: &[(usize, i64)],
        bias: Option<i64>,
    ) -> Result<Ciphertext> {
        let params = x.params().expect("non-empty tensor").clone();
        let t = params.plain_modulus();
        let mut acc: Option<Ciphertext> = None;
        let mut mults = 0;
        for &(i, w) in taps {
            if w == 0 {
                continue;
            }
            let wc = from_modular(reduce_signed(&w.into(), t), t);
            mults += 1;
            match acc.as_mut() {
                None => acc = Some(crate::bfv::hmult_scalar(&x.cts[i], wc)),
                Some(a) => {
                    a.add_scaled_assign(&x.cts[i], wc)?;
                    self.counters.add.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
        self.counters.mult_plain.fetch_add(mults, Ordering::Relaxed);
        let mut out = acc.unwrap_or_else(|| Ciphertext::zero(&params));
        if let Some(b) = bias {
            let pt = Plaintext::constant(reduce_signed(&b.into(), t), params.degree(), t);
            out = hadd_plain(&out, &pt)?;
        }
        Ok(out)
    }

    pub fn eval_conv(&self, x: &CipherTensor, layer: &Layer) -> Result<CipherTensor> {
        let LayerSpec::Conv {
            kernel,
            stride,
            weight_scale,
            ..
        } = layer.spec
        else {
            return Err(Error::Model("eval_conv on a non-conv layer".into()));
        };
        let input = x.shape;
        let out = layer.spec.output_shape(input)?;
        let params = x
            .params()
            .ok_or_else(|| Error::Shape("empty tensor".into()))?
            .clone();
        let (ph, pw) = layer.spec.pad();
        let plan = self.plan(&params, input, kernel, stride, (ph, pw))?;
        let jobs: Vec<Job<'_>> = plan
            .blocks
            .iter()
            .map(|b| {
                let b = b.clone();
                Box::new(move || {
                    let mut res = Vec::new();
                    for oy in b.row_begin..b.row_end {
                        for ox in b.col_begin..b.col_end {
                            for f in 0..out.channels {
                                let taps: Vec<(usize, i64)> =
                                    conv_taps(&layer.spec, input, oy, ox, f)
                                        .into_iter()
                                        .map(|(i, w)| (i, layer.weights[w]))
                                        .collect();
                                let bias = layer.bias.as_ref().map(|b| b[f]);
                                res.push((
                                    out.index(oy, ox, f),
                                    self.weighted_sum(x, &taps, bias)?,
                                ));
                            }
                        }
                    }
                    Ok(res)
                }) as Job<'_>
            })
            .collect();
        let cts = assemble(out.len(), run_fifo(&self.pool, jobs)?);
        CipherTensor::new(out, cts, &x.scale * weight_scale, x.channel)
    }

    fn plan(
        &self,
        params: &crate::bfv::BfvParams,
        input: Shape,
        kernel: [usize; 2],
        stride: [usize; 2],
        pad: (usize, usize),
    ) -> Result<BlockPlan> {
        let eta = self.capacity(params.degree(), params.log2_q());
        // the planner works on one channel plane of the padded map
        let per_plane = (eta / input.channels.max(1)).max(kernel[0] * kernel[1]);
        plan_blocks(
            input.width + 2 * pad.1,
            input.height + 2 * pad.0,
            kernel[1],
            kernel[0],
            stride[1],
            stride[0],
            per_plane,
        )
    }

    pub fn eval_fc(&self, x: &CipherTensor, layer: &Layer) -> Result<CipherTensor> {
        let LayerSpec::FullyConnected { weight_scale, .. } = layer.spec else {
            return Err(Error::Model(
                "eval_fc on a non-fully-connected layer".into(),
            ));
        };
        let out = layer.spec.output_shape(x.shape)?;
        let n = x.shape.len();
        if layer.weights.len() != n * out.channels {
            return Err(Error::Shape(
                "fully connected weight count does not match input".into(),
            ));
        }
        let jobs: Vec<Job<'_>> = (0..out.channels)
            .map(|o| {
                Box::new(move || {
                    let taps: Vec<(usize, i64)> = layer.weights[o * n..(o + 1) * n]
                        .iter()
                        .enumerate()
                        .map(|(i, &w)| (i, w))
                        .collect();
                    let bias = layer.bias.as_ref().map(|b| b[o]);
                    Ok(vec![(o, self.weighted_sum(x, &taps, bias)?)])
                }) as Job<'_>
            })
            .collect();
        let cts = assemble(out.len(), run_fifo(&self.pool, jobs)?);
        CipherTensor::new(out, cts, &x.scale * weight_scale, x.channel)
    }

    pub fn eval_square(&self, x: &CipherTensor) -> Result<CipherTensor> {
        let rlk = self
            .rlk
            .ok_or_else(|| Error::Key("square layer needs a relinearization key".into()))?;
        let workers = self.pool.current_num_threads().max(1);
        let chunk = x.len().div_ceil(workers * 4).max(1);
        let jobs: Vec<Job<'_>> = (0..x.len())
            .step_by(chunk)
            .map(|start| {
                Box::new(move || {
                    (start..(start + chunk).min(x.len()))
                        .map(|i| {
                            self.counters.square.fetch_add(1, Ordering::Relaxed);
                            Ok((i, hsquare(&x.cts[i], rlk)?))
                        })
                        .collect()
                }) as Job<'_>
            })
            .collect();
        let cts = assemble(x.len(), run_fifo(&self.pool, jobs)?);
        CipherTensor::new(x.shape, cts, &x.scale * &x.scale, x.channel)
    }

    pub fn eval_pool(
        &self,
        x: &CipherTensor,
        extent: usize,
        stride: usize,
    ) -> Result<CipherTensor> {
        let spec = LayerSpec::AvgPool { extent, stride };
        let input = x.shape;
        let out = spec.output_shape(input)?;
        let params = x
            .params()
            .ok_or_else(|| Error::Shape("empty tensor".into()))?
            .clone();
        let plan = self.plan(&params, input, [extent, extent], [stride, stride], (0, 0))?;
        let jobs: Vec<Job<'_>> = plan
            .blocks
            .iter()
            .map(|b| {
                let b = b.clone();
                Box::new(move || {
                    let mut res = Vec::new();
                    for oy in b.row_begin..b.row_end {
                        for ox in b.col_begin..b.col_end {
                            for c in 0..out.channels {
                                let taps = pool_taps(extent, stride, input, oy, ox, c);
                                let mut acc = x.cts[taps[0]].clone();
                                for &i in &taps[1..] {
                                    acc.add_assign(&x.cts[i])?;
                                    self.counters.add.fetch_add(1, Ordering::Relaxed);
                                }
                                res.push((out.index(oy, ox, c), acc));
                            }
                        }
                    }
                    Ok(res)
                }) as Job<'_>
            })
            .collect();
        let cts = assemble(out.len(), run_fifo(&self.pool, jobs)?);
        CipherTensor::new(
            out,
            cts,
            &x.scale * BigUint::from((extent * extent) as u64),
            x.channel,
        )
    }

    pub fn eval_layer(&self, x: &CipherTensor, layer: &Layer) -> Result<CipherTensor> {
        match layer.spec {
            LayerSpec::Conv { .. } => self.eval_conv(x, layer),
            LayerSpec::Square => self.eval_square(x),
            LayerSpec::AvgPool { extent, stride } => self.eval_pool(x, extent, stride),
            LayerSpec::FullyConnected { .. } => self.eval_fc(x, layer),
        }
    }

    /// Evaluates the whole model, calling `observe(layer_index, output)`
    /// after every layer (index 1 is the first layer).
    pub fn eval_network_with(
        &self,
        x: CipherTensor,
        model: &QuantizedModel,
        mut observe: impl FnMut(usize, &CipherTensor),
    ) -> Result<CipherTensor> {
        if x.shape != model.input {
            return Err(Error::Shape(
                "ciphertext tensor does not match the model input".into(),
            ));
        }
        let mut cur = x;
        for (i, layer) in model.layers.iter().enumerate() {
            cur = self.eval_layer(&cur, layer)?;
            observe(i + 1, &cur);
        }
        Ok(cur)
    }

    pub fn eval_network(&self, x: CipherTensor, model: &QuantizedModel) -> Result<CipherTensor> {
        self.eval_network_with(x, model, |_, _| {})
    }
}

fn assemble(len: usize, parts: Vec<Vec<(usize, Ciphertext)>>) -> Vec<Ciphertext> {
    let mut slots: Vec<Option<Ciphertext>> = (0..len).map(|_| None).collect();
    for (i, c) in parts.into_iter().flatten() {
        slots[i] = Some(c);
    }
    slots
        .into_iter()
        .map(|c| c.expect("every output position is produced exactly once"))
        .collect()
}
