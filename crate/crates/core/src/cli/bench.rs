//! Primitive latency benchmark.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use super::seeded_rng;
use crate::batching::SlotEncoder;
use crate::bfv::{decrypt, encrypt, hadd, hmult, hmult_plain, hsquare, keygen, Plaintext};
use crate::error::{Error, Result};
use crate::presets::Preset;

pub const WARMUP: usize = 3;
pub const MIN_ITERATIONS: usize = 30;

pub const PRIMITIVES: [&str; 7] = [
    "KeyGen",
    "Enc",
    "Dec",
    "HAdd",
    "HSquare",
    "HMultPlain",
    "HMult",
];

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub primitive: &'static str,
    pub median_ms: f64,
    pub mean_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub preset: String,
    pub channel: usize,
    pub iterations: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn mean(&self, primitive: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.primitive == primitive)
            .map(|r| r.mean_ms)
    }

    /// `mean(HMultPlain) < mean(HSquare) ≤ mean(HMult)`.
    pub fn ordering_holds(&self) -> bool {
        match (
            self.mean("HMultPlain"),
            self.mean("HSquare"),
            self.mean("HMult"),
        ) {
            (Some(p), Some(s), Some(m)) => p < s && s <= m,
            _ => false,
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "preset {} channel {} ({} iterations after {WARMUP} warm-ups)\n{:<11} {:>12} {:>12}\n",
            self.preset, self.channel, self.iterations, "primitive", "median ms", "mean ms"
        );
        for r in &self.rows {
            out += &format!(
                "{:<11} {:>12.3} {:>12.3}\n",
                r.primitive, r.median_ms, r.mean_ms
            );
        }
        out
    }
}

fn measure(iterations: usize, mut f: impl FnMut() -> Result<()>) -> Result<(f64, f64)> {
    for _ in 0..WARMUP {
        f()?;
    }
    let mut ms = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let start = Instant::now();
        f()?;
        ms.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(summarize(ms))
}

/// Times several closures round-robin so that load drift on the machine
/// affects each of them equally. Returns `(median, mean)` per closure.
fn measure_interleaved(
    iterations: usize,
    fs: &mut [&mut dyn FnMut() -> Result<()>],
) -> Result<Vec<(f64, f64)>> {
    for _ in 0..WARMUP {
        for f in fs.iter_mut() {
            f()?;
        }
    }
    let mut ms = vec![Vec::with_capacity(iterations); fs.len()];
    for _ in 0..iterations {
        for (f, m) in fs.iter_mut().zip(ms.iter_mut()) {
            let start = Instant::now();
            f()?;
            m.push(start.elapsed().as_secs_f64() * 1e3);
        }
    }
    Ok(ms.into_iter().map(summarize).collect())
}

fn summarize(mut ms: Vec<f64>) -> (f64, f64) {
    ms.sort_by(f64::total_cmp);
    let mid = ms.len() / 2;
    let median = if ms.len().is_multiple_of(2) {
        (ms[mid - 1] + ms[mid]) / 2.0
    } else {
        ms[mid]
    };
    (median, ms.iter().sum::<f64>() / ms.len() as f64)
}

/// Times every primitive on random slot data.
pub fn run_bench(
    preset: &Preset,
    channel: usize,
    iterations: usize,
    seed: Option<u64>,
) -> Result<BenchReport> {
    if iterations < MIN_ITERATIONS {
        return Err(Error::UnsupportedParameters(format!(
            "benchmarks need at least {MIN_ITERATIONS} iterations"
        )));
    }
    let params = preset.build_context(channel)?;
    let mut rng = seeded_rng(seed, channel as u64);
    let t = params.plain_modulus();
    let n = params.degree();
    let random_pt = |rng: &mut rand_chacha::ChaCha20Rng| -> Result<Plaintext> {
        let slots: Vec<u64> = (0..n).map(|_| rng.gen_range(0..t)).collect();
        if params.supports_batching() {
            SlotEncoder::new(n, t)?.encode_slots(&slots)
        } else {
            Plaintext::new(slots, t)
        }
    };
    let (sk, pk, rlk) = keygen(&params, &mut rng);
    let m1 = random_pt(&mut rng)?;
    let m2 = random_pt(&mut rng)?;
    let c1 = encrypt(&pk, &m1, &mut rng)?;
    let c2 = encrypt(&pk, &m2, &mut rng)?;

    let mut rows = Vec::with_capacity(PRIMITIVES.len());
    let mut push = |name: &'static str, (median_ms, mean_ms): (f64, f64)| {
        rows.push(BenchRow {
            primitive: name,
            median_ms,
            mean_ms,
        })
    };
    let mut key_rng = rng.clone();
    push(
        "KeyGen",
        measure(iterations, || {
            std::hint::black_box(keygen(&params, &mut key_rng));
            Ok(())
        })?,
    );
    let mut enc_rng = rng.clone();
    push(
        "Enc",
        measure(iterations, || {
            std::hint::black_box(encrypt(&pk, &m1, &mut enc_rng)?);
            Ok(())
        })?,
    );
    push(
        "Dec",
        measure(iterations, || {
            std::hint::black_box(decrypt(&sk, &c1)?);
            Ok(())
        })?,
    );
    push(
        "HAdd",
        measure(iterations, || {
            std::hint::black_box(hadd(&c1, &c2)?);
            Ok(())
        })?,
    );
    // the three multiplications are compared with each other, so they share
    // one interleaved loop
    let mut square = || {
        std::hint::black_box(hsquare(&c1, &rlk)?);
        Ok(())
    };
    let mut mult_plain = || {
        std::hint::black_box(hmult_plain(&c1, &m2)?);
        Ok(())
    };
    let mut mult = || {
        std::hint::black_box(hmult(&c1, &c2, &rlk)?);
        Ok(())
    };
    let timed = measure_interleaved(iterations, &mut [&mut square, &mut mult_plain, &mut mult])?;
    for (name, r) in ["HSquare", "HMultPlain", "HMult"].into_iter().zip(timed) {
        push(name, r);
    }
    Ok(BenchReport {
        preset: preset.id.clone(),
        channel,
        iterations,
        rows,
    })
}
