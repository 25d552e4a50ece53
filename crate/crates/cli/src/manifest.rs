use std::collections::BTreeMap;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use msnet_core::msnet::MsnetConfig;
use msnet_core::tokenizer::DEFAULT_MAX_TOKENS;
use msnet_core::train_eval::TrainConfig;
use msnet_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io_util::{open, read_json};
use crate::opts::{CasingArg, RunArgs};

/// Everything that determines a training run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: MsnetConfig,
    pub train: TrainConfig,
    pub k: usize,
    pub max_tokens: usize,
    pub casing: CasingArg,
    pub skip_invalid: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: MsnetConfig::default(),
            train: TrainConfig::default(),
            k: 5,
            max_tokens: DEFAULT_MAX_TOKENS,
            casing: CasingArg::Auto,
            skip_invalid: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Inputs {
    pub train_tsv: Option<PathBuf>,
    pub test_tsv: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub embeddings: Vec<PathBuf>,
}

impl Inputs {
    pub fn paths(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = [&self.train_tsv, &self.test_tsv, &self.vocab]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path)
            .collect();
        v.extend(self.embeddings.iter().map(PathBuf::as_path));
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: Inputs,
    /// SHA-256 of each input file, keyed by path as given.
    pub digests: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, inputs: &Inputs) -> Result<Self> {
        let digests = inputs
            .paths()
            .into_iter()
            .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
            .collect::<Result<_>>()?;
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.train.seed,
            config: config.clone(),
            inputs: inputs.clone(),
            digests,
        })
    }

    /// Fail if any input still in use no longer matches its recorded digest.
    pub fn verify(&self, inputs: &Inputs) -> Result<()> {
        for p in inputs.paths() {
            let key = p.display().to_string();
            if let Some(expected) = self.digests.get(&key) {
                let actual = sha256_file(p)?;
                if &actual != expected {
                    return Err(Error::Validation(format!(
                        "{key} changed since the manifest was written (sha256 {actual}, expected {expected})"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut r = BufReader::new(open(path)?);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf).map_err(|e| crate::io_util::with_path(e, path))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Defaults, then `--config`, then `--from-manifest`, then explicit flags.
pub fn resolve(command: &str, args: &RunArgs) -> Result<(RunConfig, Inputs)> {
    let mut cfg = RunConfig::default();
    let mut inputs = Inputs::default();
    if let Some(path) = &args.config {
        cfg = read_json(path)?;
    }
    if let Some(path) = &args.from_manifest {
        let m: RunManifest = read_json(path)?;
        if m.command != command {
            return Err(Error::Validation(format!(
                "manifest {} records a `{}` run, not `{command}`",
                path.display(),
                m.command
            )));
        }
        m.verify(&m.inputs)?;
        cfg = m.config;
        inputs = m.inputs;
    }
    let a = args;
    if a.train_tsv.is_some() {
        inputs.train_tsv = a.train_tsv.clone();
    }
    if a.test_tsv.is_some() {
        inputs.test_tsv = a.test_tsv.clone();
    }
    if a.tok.vocab.is_some() {
        inputs.vocab = a.tok.vocab.clone();
    }
    if !a.embeddings.is_empty() {
        inputs.embeddings = a.embeddings.clone();
    }
    let m = &mut cfg.model;
    let t = &mut cfg.train;
    if let Some(v) = a.layers {
        m.layers = v;
    }
    if let Some(v) = a.sdim {
        m.s_dim = v;
    }
    if let Some(v) = a.span {
        m.span_method = v.into();
    }
    if a.per_layer_sim {
        m.per_layer_sim = true;
    }
    if let Some(v) = a.seed {
        m.seed = v;
        t.seed = v;
    }
    if let Some(v) = a.lr {
        t.lr = v;
    }
    if let Some(v) = a.batch {
        t.batch_size = v;
    }
    if let Some(v) = a.epochs {
        t.max_epochs = v;
    }
    if let Some(v) = a.patience {
        t.patience = v;
    }
    if let Some(v) = a.weight_decay {
        t.weight_decay = v;
    }
    if let Some(v) = a.min_delta {
        t.min_delta = v;
    }
    if let Some(v) = a.tok.casing {
        cfg.casing = v;
    }
    if let Some(v) = a.tok.max_tokens {
        cfg.max_tokens = v;
    }
    if a.tok.skip_invalid {
        cfg.skip_invalid = true;
    }
    if inputs.train_tsv.is_none() {
        return Err(Error::Usage("--train-tsv is required".into()));
    }
    if inputs.vocab.is_none() {
        return Err(Error::Usage("--vocab is required".into()));
    }
    if inputs.embeddings.is_empty() {
        return Err(Error::Usage("at least one --embeddings file is required".into()));
    }
    Ok((cfg, inputs))
}
