//! Parameter presets: the published parameter sets plus insecure test sets.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::bfv::{
    decrypt, encrypt, hsquare, keygen, noise_budget, BfvParams, Plaintext, DEFAULT_RELIN_BITS,
};
use crate::codec::CrtSystem;
use crate::error::{Error, Result};
use crate::ring::modulus::{is_prime, ntt_primes};

/// Environment variable naming a presets file that replaces the embedded one.
pub const PRESET_PATH_ENV: &str = "HEFIR_PRESET_PATH";

const EMBEDDED: &str = include_str!("presets.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SecurityClass {
    #[serde(rename = "paper")]
    Paper,
    #[serde(rename = "toy-insecure")]
    ToyInsecure,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preset {
    pub id: String,
    pub class: SecurityClass,
    pub degree: usize,
    pub log_q: u32,
    pub prime_bits: Vec<u32>,
    pub plain_moduli: Vec<u64>,
    pub depth: u32,
    pub security: u32,
    #[serde(default = "default_relin_bits")]
    pub relin_bits: u32,
}

fn default_relin_bits() -> u32 {
    DEFAULT_RELIN_BITS
}

#[derive(Serialize, Deserialize)]
struct PresetFile {
    preset: Vec<Preset>,
}

/// The embedded presets file.
pub fn embedded_toml() -> &'static str {
    EMBEDDED
}

/// Parses a presets document.
pub fn parse_presets(text: &str) -> Result<Vec<Preset>> {
    let file: PresetFile = toml::from_str(text).map_err(|e| Error::PresetInvalid {
        id: "<file>".into(),
        reason: e.to_string(),
    })?;
    Ok(file.preset)
}

/// Presets from `HEFIR_PRESET_PATH` when set, else the embedded ones.
pub fn all_presets() -> Result<Vec<Preset>> {
    match std::env::var_os(PRESET_PATH_ENV) {
        Some(path) => parse_presets(&std::fs::read_to_string(path)?),
        None => parse_presets(EMBEDDED),
    }
}

/// Loads and validates a preset; `set1` is accepted for `1` and so on.
pub fn load_preset(id: &str) -> Result<Preset> {
    let key = id.strip_prefix("set").unwrap_or(id);
    let preset = all_presets()?
        .into_iter()
        .find(|p| p.id == key)
        .ok_or_else(|| Error::UnknownPreset(id.to_string()))?;
    preset.validate()?;
    Ok(preset)
}

impl Preset {
    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::PresetInvalid {
            id: self.id.clone(),
            reason: reason.into(),
        }
    }

    /// Checks the batching condition `t_i ≡ 1 (mod 2N)` for every plaintext
    /// modulus and the bit length of `q`.
    pub fn validate(&self) -> Result<()> {
        if !self.degree.is_power_of_two() || self.degree < 4 {
            return Err(self.invalid("ring degree must be a power of two"));
        }
        if self.plain_moduli.is_empty() {
            return Err(self.invalid("no plaintext modulus"));
        }
        let two_n = 2 * self.degree as u64;
        for &t in &self.plain_moduli {
            if !is_prime(t) {
                return Err(self.invalid(format!("plaintext modulus {t} is not prime")));
            }
            if t % two_n != 1 {
                return Err(
                    self.invalid(format!("plaintext modulus {t} is not 1 mod 2N = {two_n}"))
                );
            }
        }
        if self.plain_moduli.len() > 1 {
            CrtSystem::new(&self.plain_moduli).map_err(|e| self.invalid(e.to_string()))?;
        }
        let total: u32 = self.prime_bits.iter().sum();
        if total.abs_diff(self.log_q) > 2 {
            return Err(self.invalid(format!(
                "prime sizes sum to {total} bits, target log q is {}",
                self.log_q
            )));
        }
        if self.prime_bits.iter().any(|&b| !(20..=62).contains(&b)) {
            return Err(self.invalid("prime sizes must lie in 20..=62 bits"));
        }
        Ok(())
    }

    /// The RNS primes of `q`, in the order of `prime_bits`.
    pub fn q_primes(&self) -> Result<Vec<u64>> {
        let mut chosen: Vec<u64> = Vec::with_capacity(self.prime_bits.len());
        for &bits in &self.prime_bits {
            let p = ntt_primes(bits, self.degree, 1, &chosen);
            match p.first() {
                Some(&p) => chosen.push(p),
                None => return Err(self.invalid(format!("no {bits}-bit NTT prime available"))),
            }
        }
        Ok(chosen)
    }

    pub fn channels(&self) -> usize {
        self.plain_moduli.len()
    }

    /// Parameters for plaintext channel `t_index`.
    pub fn build_context(&self, t_index: usize) -> Result<Arc<BfvParams>> {
        let t = *self.plain_moduli.get(t_index).ok_or_else(|| {
            Error::mismatch(format!(
                "preset {} has {} channels, asked for channel {t_index}",
                self.id,
                self.channels()
            ))
        })?;
        BfvParams::with_metadata(
            self.degree,
            &self.q_primes()?,
            t,
            self.relin_bits,
            self.depth,
            self.security,
        )
    }

    pub fn crt_system(&self) -> Result<CrtSystem> {
        CrtSystem::new(&self.plain_moduli)
    }

    /// Runs the depth probe at the declared depth on every channel and fails
    /// with `PresetInvalid` unless each leaves a positive budget.
    pub fn check_depth(&self, seed: u64) -> Result<Vec<ProbeReport>> {
        let mut reports = Vec::with_capacity(self.channels());
        for channel in 0..self.channels() {
            let report = depth_probe(self, channel, self.depth, seed)?;
            if !report.passed() {
                return Err(self.invalid(format!(
                    "channel {channel} does not reach depth {} (budgets {:?})",
                    self.depth, report.budgets
                )));
            }
            reports.push(report);
        }
        Ok(reports)
    }
}

/// Outcome of squaring a fresh ciphertext `squarings` times.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeReport {
    pub preset: String,
    pub channel: usize,
    /// Budget of the fresh ciphertext followed by the budget after each square.
    pub budgets: Vec<u32>,
    /// Whether every intermediate decryption matched the expected slots.
    pub correct: bool,
    /// First square (counting from 1) whose decryption was wrong.
    pub first_mismatch: Option<u32>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.correct && self.budgets.last().is_some_and(|&b| b > 0)
    }
}

/// Encrypts a random constant, squares it `squarings` times and checks every
/// step. A constant plaintext fills every slot with the same value.
pub fn depth_probe(
    preset: &Preset,
    channel: usize,
    squarings: u32,
    seed: u64,
) -> Result<ProbeReport> {
    let params = preset.build_context(channel)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (sk, pk, rlk) = keygen(&params, &mut rng);
    let t = params.plain_modulus();
    let mut value = rand::Rng::gen_range(&mut rng, 2..t);
    let mut ct = encrypt(
        &pk,
        &Plaintext::constant(value, params.degree(), t),
        &mut rng,
    )?;
    let mut budgets = vec![noise_budget(&sk, &ct)?];
    let mut first_mismatch = None;
    for step in 1..=squarings {
        ct = hsquare(&ct, &rlk)?;
        value = ((value as u128 * value as u128) % t as u128) as u64;
        if decrypt(&sk, &ct)?.as_constant() != Some(value) && first_mismatch.is_none() {
            first_mismatch = Some(step);
        }
        budgets.push(noise_budget(&sk, &ct)?);
    }
    Ok(ProbeReport {
        preset: preset.id.clone(),
        channel,
        budgets,
        correct: first_mismatch.is_none(),
        first_mismatch,
    })
}
