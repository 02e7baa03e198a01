use std::path::{Path, PathBuf};
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};

use super::seeded_rng;
use crate::bfv::{keygen, noise_budget, BfvParams, PublicKey, RelinKey, SecretKey};
use crate::codec::{CrtSystem, ScaleTracker};
use crate::engine::{
    classify_batch, pack_images, reconstruct_logits, unpack, ChannelResult, EvalOptions, Evaluator,
    PackingLayout,
};
use crate::error::{Error, Result};
use crate::io::{idx, EncryptedBatch, Hfir, Manifest};
use crate::nn::{
    count_model_ops, count_ops, forward_batch, Audit, IntTensor, NetworkSpec, OpCounts,
    QuantizedModel, Shape,
};
use crate::presets::{load_preset, Preset};

pub const MANIFEST_FILE: &str = "manifest.hfir";

/// Per-image labels and signed logits (decimal strings, since logits can
/// exceed 64 bits).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predictions {
    pub labels: Vec<usize>,
    pub logits: Vec<Vec<String>>,
}

impl Predictions {
    pub fn new(logits: &[Vec<BigInt>]) -> Self {
        Predictions {
            labels: classify_batch(logits),
            logits: logits
                .iter()
                .map(|l| l.iter().map(ToString::to_string).collect())
                .collect(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (label, logits)) in self.labels.iter().zip(&self.logits).enumerate() {
            out += &format!("image {i}: label {label} logits [{}]\n", logits.join(", "));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(
            path,
            serde_json::to_string_pretty(self).expect("serializable"),
        )?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::format(e.column() as u64, format!("predictions file: {e}")))
    }
}

/// Path of channel `c`'s key: `dir/ch{c}.{ext}` for a directory, the path
/// itself otherwise.
pub fn key_path(path: &Path, channel: usize, ext: &str) -> PathBuf {
    if path.is_dir() {
        path.join(format!("ch{channel}.{ext}"))
    } else {
        path.to_path_buf()
    }
}

/// Channels that have a `ch{c}.{ext}` file in `dir`, ascending.
pub fn channel_files(dir: &Path, ext: &str) -> Result<Vec<usize>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(c) = name
            .strip_prefix("ch")
            .and_then(|r| r.strip_suffix(&format!(".{ext}")))
            .and_then(|n| n.parse::<usize>().ok())
        {
            found.push(c);
        }
    }
    found.sort_unstable();
    Ok(found)
}

fn check_preset_channel(preset: &Preset, channel: usize, params: &BfvParams) -> Result<()> {
    let expected = preset.build_context(channel)?;
    if expected.degree() != params.degree()
        || expected.plain_modulus() != params.plain_modulus()
        || expected.ring().primes() != params.ring().primes()
    {
        return Err(Error::mismatch(format!(
            "channel {channel} artifact has N={} t={}, preset {} expects N={} t={}",
            params.degree(),
            params.plain_modulus(),
            preset.id,
            expected.degree(),
            expected.plain_modulus()
        )));
    }
    Ok(())
}

fn same_params(what: &str, a: &BfvParams, b: &BfvParams) -> Result<()> {
    if a != b {
        return Err(Error::mismatch(format!(
            "{what}: N={} t={} log q={:.0} vs N={} t={} log q={:.0}",
            a.degree(),
            a.plain_modulus(),
            a.log2_q(),
            b.degree(),
            b.plain_modulus(),
            b.log2_q()
        )));
    }
    Ok(())
}

/// Writes `ch{c}.sk`, `ch{c}.pk` and `ch{c}.rlk` for the requested channels.
pub fn cmd_keygen(
    preset: &str,
    out_dir: &Path,
    seed: Option<u64>,
    channel: Option<usize>,
) -> Result<Vec<PathBuf>> {
    let preset = load_preset(preset)?;
    let channels: Vec<usize> = match channel {
        Some(c) => vec![c],
        None => (0..preset.channels()).collect(),
    };
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for c in channels {
        let params = preset.build_context(c)?;
        let mut rng = seeded_rng(seed, c as u64);
        let (sk, pk, rlk) = keygen(&params, &mut rng);
        for (ext, bytes) in [
            ("sk", sk.to_bytes()?),
            ("pk", pk.to_bytes()?),
            ("rlk", rlk.to_bytes()?),
        ] {
            let path = out_dir.join(format!("ch{c}.{ext}"));
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Images `offset..offset + batch` of an IDX file at the given input scale.
pub fn load_images(
    path: &Path,
    offset: usize,
    batch: Option<usize>,
    scale: u64,
) -> Result<Vec<IntTensor>> {
    let idx = idx::read_images(path)?;
    let available = idx.images.len().saturating_sub(offset);
    let take = batch.unwrap_or(available);
    if take == 0 || take > available {
        return Err(Error::Shape(format!(
            "asked for {take} images at offset {offset}, file has {}",
            idx.images.len()
        )));
    }
    let shape = Shape::new(idx.rows, idx.cols, 1);
    idx.images[offset..offset + take]
        .iter()
        .map(|px| IntTensor::from_pixels(shape, px, scale))
        .collect()
}

pub struct EncryptRequest<'a> {
    pub images: &'a Path,
    pub pk: &'a Path,
    pub out_dir: &'a Path,
    pub preset: Option<&'a str>,
    pub channel: Option<usize>,
    pub scale: u64,
    pub offset: usize,
    pub batch: Option<usize>,
    pub seed: Option<u64>,
}

/// Encrypts a batch under every available channel key and writes the
/// bundle `out_dir/ch{c}.ct` plus its manifest.
pub fn cmd_encrypt(req: &EncryptRequest) -> Result<Manifest> {
    let channels = match (req.pk.is_dir(), req.channel) {
        (true, None) => channel_files(req.pk, "pk")?,
        (_, Some(c)) => vec![c],
        (false, None) => vec![0],
    };
    if channels.is_empty() {
        return Err(Error::Key(format!(
            "no public keys in {}",
            req.pk.display()
        )));
    }
    let preset = req.preset.map(load_preset).transpose()?;
    let images = load_images(req.images, req.offset, req.batch, req.scale)?;
    std::fs::create_dir_all(req.out_dir)?;
    let mut manifest: Option<Manifest> = None;
    for c in channels {
        let pk = PublicKey::load(key_path(req.pk, c, "pk"))?;
        let params = pk.params().clone();
        if let Some(p) = &preset {
            check_preset_channel(p, c, &params)?;
        }
        let layout = PackingLayout::for_params(&params, images.len())?;
        let mut rng = seeded_rng(req.seed, 0x1000 + c as u64);
        let tensor = pack_images(&images, &layout, &pk, c, &mut rng)?;
        let file = format!("ch{c}.ct");
        EncryptedBatch {
            tensor,
            images: images.len(),
        }
        .save(req.out_dir.join(&file))?;
        let m = manifest.get_or_insert_with(|| Manifest {
            degree: params.degree(),
            primes: params.ring().primes(),
            plain_moduli: Vec::new(),
            files: Vec::new(),
        });
        if m.degree != params.degree() || m.primes != params.ring().primes() {
            return Err(Error::mismatch("channel keys use different rings"));
        }
        m.plain_moduli.push(params.plain_modulus());
        m.files.push(file);
    }
    let manifest = manifest.expect("at least one channel");
    manifest.save(req.out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn load_bundle_entry(dir: &Path, manifest: &Manifest, i: usize) -> Result<EncryptedBatch> {
    let path = dir.join(&manifest.files[i]);
    if !path.exists() {
        return Err(Error::IncompleteResult(format!(
            "channel {i} (t = {}) file {} is missing",
            manifest.plain_moduli[i],
            path.display()
        )));
    }
    let batch = EncryptedBatch::load(&path)?;
    let params = batch.tensor.params().expect("non-empty tensor");
    if params.plain_modulus() != manifest.plain_moduli[i] || params.degree() != manifest.degree {
        return Err(Error::mismatch(format!(
            "{} holds t={} N={}, manifest lists t={} N={}",
            path.display(),
            params.plain_modulus(),
            params.degree(),
            manifest.plain_moduli[i],
            manifest.degree
        )));
    }
    Ok(batch)
}

#[derive(Clone, Debug, Serialize)]
pub struct ChannelRun {
    pub channel: usize,
    pub plain_modulus: u64,
    pub counts: OpCounts,
    pub seconds: f64,
}

pub struct InferRequest<'a> {
    pub input: &'a Path,
    pub model: &'a Path,
    pub evk: &'a Path,
    pub out_dir: &'a Path,
    pub options: EvalOptions,
}

/// Evaluates the model on every channel of an encrypted bundle and writes
/// the logit ciphertexts as a new bundle.
pub fn cmd_infer(req: &InferRequest) -> Result<Vec<ChannelRun>> {
    let manifest = Manifest::load(req.input.join(MANIFEST_FILE))?;
    let model = QuantizedModel::load(req.model)?;
    let t_total: BigUint = manifest
        .plain_moduli
        .iter()
        .map(|&t| BigUint::from(t))
        .product();
    ScaleTracker::track_model(&model, t_total)?;
    std::fs::create_dir_all(req.out_dir)?;
    let mut runs = Vec::new();
    for i in 0..manifest.files.len() {
        let batch = load_bundle_entry(req.input, &manifest, i)?;
        let c = batch.tensor.channel;
        if batch.tensor.scale != BigUint::from(model.input_scale) {
            return Err(Error::mismatch(format!(
                "batch encrypted at scale {}, model expects {}",
                batch.tensor.scale, model.input_scale
            )));
        }
        let rlk = RelinKey::load(key_path(req.evk, c, "rlk"))?;
        same_params(
            "relinearization key and ciphertexts disagree",
            rlk.params(),
            batch.tensor.params().unwrap(),
        )?;
        let start = Instant::now();
        let ev = Evaluator::new(Some(&rlk), req.options.clone())?;
        let y = ev.eval_network(batch.tensor, &model)?;
        EncryptedBatch {
            tensor: y,
            images: batch.images,
        }
        .save(req.out_dir.join(&manifest.files[i]))?;
        runs.push(ChannelRun {
            channel: c,
            plain_modulus: manifest.plain_moduli[i],
            counts: ev.counters.snapshot(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    manifest.save(req.out_dir.join(MANIFEST_FILE))?;
    Ok(runs)
}

#[derive(Clone, Debug)]
pub struct DecryptOutcome {
    pub predictions: Predictions,
    /// Smallest noise budget among the decrypted ciphertexts.
    pub min_budget: u32,
}

/// Decrypts a logit bundle, reconstructs across channels in manifest order
/// and classifies. With `preset`, the bundle must hold every channel.
pub fn cmd_decrypt(input: &Path, sk: &Path, preset: Option<&str>) -> Result<DecryptOutcome> {
    let manifest = Manifest::load(input.join(MANIFEST_FILE))?;
    if let Some(p) = preset {
        let p = load_preset(p)?;
        if manifest.plain_moduli != p.plain_moduli {
            return Err(Error::IncompleteResult(format!(
                "bundle holds moduli {:?}, preset {} needs {:?}",
                manifest.plain_moduli, p.id, p.plain_moduli
            )));
        }
    }
    let crt = CrtSystem::new(&manifest.plain_moduli)?;
    let mut logits = Vec::with_capacity(manifest.files.len());
    let mut images = None;
    let mut min_budget = u32::MAX;
    for i in 0..manifest.files.len() {
        let batch = load_bundle_entry(input, &manifest, i)?;
        let key = SecretKey::load(key_path(sk, batch.tensor.channel, "sk"))?;
        same_params(
            "secret key and ciphertexts disagree",
            key.params(),
            batch.tensor.params().unwrap(),
        )?;
        if *images.get_or_insert(batch.images) != batch.images {
            return Err(Error::mismatch("channels hold different batch sizes"));
        }
        for ct in &batch.tensor.cts {
            min_budget = min_budget.min(noise_budget(&key, ct)?);
        }
        let layout = PackingLayout::for_params(key.params(), batch.images)?;
        logits.push(Some(unpack(&batch.tensor, &layout, &key)?));
    }
    let result = ChannelResult {
        moduli: manifest.plain_moduli.clone(),
        batch: images.unwrap_or(0),
        logits,
        counts: Vec::new(),
    };
    Ok(DecryptOutcome {
        predictions: Predictions::new(&reconstruct_logits(&result, &crt)?),
        min_budget,
    })
}

/// Plaintext reference labels and logits.
pub fn cmd_oracle(
    images: &Path,
    model: &Path,
    offset: usize,
    batch: Option<usize>,
) -> Result<Predictions> {
    let model = QuantizedModel::load(model)?;
    let images = load_images(images, offset, batch, model.input_scale)?;
    Ok(Predictions::new(&forward_batch(&model, &images)?))
}

/// Operation counts for a model file, or for a named architecture with
/// dense weights.
pub fn cmd_audit(model: Option<&Path>, arch: Option<&str>) -> Result<Audit> {
    match (model, arch) {
        (Some(m), _) => count_model_ops(&QuantizedModel::load(m)?),
        (None, Some(a)) => count_ops(&architecture(a)?),
        (None, None) => Err(Error::Model(
            "audit needs a model file or an architecture".into(),
        )),
    }
}

pub fn architecture(name: &str) -> Result<NetworkSpec> {
    match name {
        "mnist" => Ok(NetworkSpec::mnist()),
        "cifar10" | "cifar-10" => Ok(NetworkSpec::cifar10()),
        "toy" => Ok(NetworkSpec::toy()),
        other => Err(Error::Model(format!("unknown architecture {other}"))),
    }
}

pub fn render_audit(audit: &Audit) -> String {
    let mut out = format!(
        "{:<6} {:<16} {:>10} {:>10} {:>14} {:>10}\n",
        "layer", "kind", "inputs", "outputs", "HMultPlain", "HSquare"
    );
    for l in &audit.layers {
        out += &format!(
            "{:<6} {:<16} {:>10} {:>10} {:>14} {:>10}\n",
            l.layer, l.kind, l.inputs, l.outputs, l.counts.mult_plain, l.counts.square
        );
    }
    out += &format!(
        "{:<6} {:<16} {:>10} {:>10} {:>14} {:>10}\n",
        "total", "", "", "", audit.total.mult_plain, audit.total.square
    );
    out
}
