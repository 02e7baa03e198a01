//! Command-line front end. `hefir <command> --help` lists the flags.

pub mod bench;
pub mod commands;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub use bench::{run_bench, BenchReport};
pub use commands::*;

use crate::engine::EvalOptions;
use crate::error::{Error, Result};
use crate::nn::QuantizedModel;
use crate::presets::{all_presets, embedded_toml, load_preset};

/// Deterministic stream `stream` of `seed`, or OS entropy without a seed.
pub fn seeded_rng(seed: Option<u64>, stream: u64) -> ChaCha20Rng {
    match seed {
        Some(s) => {
            let mut rng = ChaCha20Rng::seed_from_u64(s);
            rng.set_stream(stream);
            rng
        }
        None => ChaCha20Rng::from_entropy(),
    }
}

#[derive(Parser, Debug)]
#[command(name = "hefir", version, about = "Homomorphic CNN inference over BFV")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate secret, public and relinearization keys per channel.
    Keygen {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Only this channel (default: all channels of the preset).
        #[arg(long)]
        channel: Option<usize>,
    },
    /// Encrypt a batch of IDX images under each channel's public key.
    Encrypt {
        #[arg(long)]
        images: PathBuf,
        /// Public key file, or a directory of `ch<i>.pk` files.
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        channel: Option<usize>,
        /// Take the input scale from this model.
        #[arg(long, conflicts_with = "scale")]
        model: Option<PathBuf>,
        #[arg(long)]
        scale: Option<u64>,
        #[arg(long, default_value_t = 0)]
        offset: usize,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a model on an encrypted bundle.
    Infer {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Relinearization key file, or a directory of `ch<i>.rlk` files.
        #[arg(long)]
        evk: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: available parallelism).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value_t = 2048)]
        mem_budget_mb: u64,
    },
    /// Decrypt a logit bundle, reconstruct across channels and classify.
    Decrypt {
        #[arg(long = "in")]
        input: PathBuf,
        /// Secret key file, or a directory of `ch<i>.sk` files.
        #[arg(long)]
        sk: PathBuf,
        /// Require every channel of this preset.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail with exit code 4 unless the result equals this predictions file.
        #[arg(long)]
        expect: Option<PathBuf>,
    },
    /// Plaintext reference evaluation.
    Oracle {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        offset: usize,
        #[arg(long)]
        batch: Option<usize>,
        /// IDX labels; prints accuracy.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the primitives and check their relative cost.
    Bench {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 0)]
        channel: usize,
        #[arg(long, default_value_t = bench::MIN_ITERATIONS)]
        iterations: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count HMultPlain and HSquare calls per layer.
    Audit {
        #[arg(long, conflicts_with = "arch")]
        model: Option<PathBuf>,
        /// mnist, cifar10 or toy.
        #[arg(long)]
        arch: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List, export or probe parameter presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand, Debug)]
pub enum PresetAction {
    List,
    /// Write the embedded presets file.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Square a fresh ciphertext `depth` times on every channel.
    Probe {
        id: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn write_json(path: &std::path::Path, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(
        path,
        serde_json::to_string_pretty(value).expect("serializable"),
    )?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Keygen {
            preset,
            out,
            seed,
            channel,
        } => {
            for p in cmd_keygen(&preset, &out, seed, channel)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Encrypt {
            images,
            pk,
            out,
            preset,
            channel,
            model,
            scale,
            offset,
            batch,
            seed,
        } => {
            let scale = match (model, scale) {
                (Some(m), _) => QuantizedModel::load(&m)?.input_scale,
                (None, Some(s)) => s,
                (None, None) => {
                    return Err(Error::Model("encrypt needs --model or --scale".into()))
                }
            };
            let manifest = cmd_encrypt(&EncryptRequest {
                images: &images,
                pk: &pk,
                out_dir: &out,
                preset: preset.as_deref(),
                channel,
                scale,
                offset,
                batch,
                seed,
            })?;
            println!(
                "encrypted {} channel(s) t = {:?} into {}",
                manifest.files.len(),
                manifest.plain_moduli,
                out.display()
            );
        }
        Command::Infer {
            input,
            model,
            evk,
            out,
            workers,
            mem_budget_mb,
        } => {
            let runs = cmd_infer(&InferRequest {
                input: &input,
                model: &model,
                evk: &evk,
                out_dir: &out,
                options: EvalOptions {
                    workers,
                    mem_budget_bytes: mem_budget_mb << 20,
                    capacity: None,
                },
            })?;
            for r in runs {
                println!(
                    "channel {} t={}: {} HMultPlain, {} HSquare, {:.2} s",
                    r.channel, r.plain_modulus, r.counts.mult_plain, r.counts.square, r.seconds
                );
            }
        }
        Command::Decrypt {
            input,
            sk,
            preset,
            out,
            expect,
        } => {
            let outcome = cmd_decrypt(&input, &sk, preset.as_deref())?;
            eprintln!("minimum output noise budget: {} bits", outcome.min_budget);
            if outcome.min_budget == 0 {
                eprintln!("warning: noise budget exhausted; results may be wrong");
            }
            print!("{}", outcome.predictions.render());
            if let Some(path) = out {
                outcome.predictions.save(&path)?;
            }
            if let Some(path) = expect {
                let expected = Predictions::load(&path)?;
                if expected != outcome.predictions {
                    return Err(Error::Verification(format!(
                        "decrypted predictions differ from {}",
                        path.display()
                    )));
                }
                println!("verified against {}", path.display());
            }
        }
        Command::Oracle {
            images,
            model,
            offset,
            batch,
            labels,
            out,
        } => {
            let preds = cmd_oracle(&images, &model, offset, batch)?;
            print!("{}", preds.render());
            if let Some(path) = labels {
                let truth = crate::io::read_labels(&path)?;
                let truth = truth
                    .get(offset..offset + preds.labels.len())
                    .ok_or_else(|| {
                        Error::Shape("label file shorter than the image selection".into())
                    })?;
                let hits = preds
                    .labels
                    .iter()
                    .zip(truth)
                    .filter(|(&p, &t)| p == t as usize)
                    .count();
                println!(
                    "accuracy {hits}/{} = {:.2}%",
                    truth.len(),
                    100.0 * hits as f64 / truth.len() as f64
                );
            }
            if let Some(path) = out {
                preds.save(&path)?;
            }
        }
        Command::Bench {
            preset,
            channel,
            iterations,
            seed,
            out,
        } => {
            let report = run_bench(&load_preset(&preset)?, channel, iterations, seed)?;
            print!("{}", report.render());
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            if !report.ordering_holds() {
                return Err(Error::Verification(
                    "expected mean(HMultPlain) < mean(HSquare) <= mean(HMult)".into(),
                ));
            }
            println!("ordering HMultPlain < HSquare <= HMult holds");
        }
        Command::Audit { model, arch, out } => {
            let audit = cmd_audit(model.as_deref(), arch.as_deref())?;
            print!("{}", render_audit(&audit));
            if let Some(path) = out {
                write_json(&path, &audit)?;
            }
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                println!(
                    "{:<8} {:<13} {:>6} {:>6} {:>6} {:>4}  plaintext moduli",
                    "id", "class", "N", "log q", "depth", "λ"
                );
                for p in all_presets()? {
                    println!(
                        "{:<8} {:<13} {:>6} {:>6} {:>6} {:>4}  {:?}",
                        p.id,
                        format!("{:?}", p.class),
                        p.degree,
                        p.log_q,
                        p.depth,
                        p.security,
                        p.plain_moduli
                    );
                }
            }
            PresetAction::Export { out } => match out {
                Some(path) => std::fs::write(path, embedded_toml())?,
                None => print!("{}", embedded_toml()),
            },
            PresetAction::Probe { id, seed } => {
                let preset = load_preset(&id)?;
                let mut failed = None;
                for c in 0..preset.channels() {
                    let r = crate::presets::depth_probe(&preset, c, preset.depth, seed)?;
                    println!(
                        "channel {c} t={}: budgets {:?} {}",
                        preset.plain_moduli[c],
                        r.budgets,
                        if r.passed() { "ok" } else { "FAILED" }
                    );
                    if !r.passed() && failed.is_none() {
                        failed = Some(c);
                    }
                }
                if let Some(c) = failed {
                    return Err(Error::Verification(format!(
                        "preset {id} channel {c} does not reach depth {}",
                        preset.depth
                    )));
                }
            }
        },
    }
    Ok(())
}
