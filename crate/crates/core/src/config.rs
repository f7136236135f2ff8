//! Flat `key = value` run configuration shared by every command.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::BaselineKind;
use crate::embed::EmbedConfig;
use crate::error::{Error, Result};
use crate::synth::SynthConfig;
use crate::tgraph::NeighborMode;
use crate::train::{DownstreamConfig, PretrainConfig};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    Unset,
    Synth,
    Files(PathBuf),
}

/// Everything a run needs. The single `seed` drives generation,
/// initialization, negative sampling and batch shuffling.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub dataset: DatasetSource,
    pub synth: SynthConfig,
    pub embed: EmbedConfig,
    pub pretrain: PretrainConfig,
    pub downstream: DownstreamConfig,
    pub baselines: Vec<BaselineKind>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            out: PathBuf::from("tempograd-out"),
            dataset: DatasetSource::Unset,
            synth: SynthConfig::default(),
            embed: EmbedConfig::default(),
            pretrain: PretrainConfig::default(),
            downstream: DownstreamConfig::default(),
            baselines: BaselineKind::ALL.to_vec(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::config(format!("`{key}`: cannot parse `{value}`: {e}")))
}

fn list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key; unknown keys and malformed values are config errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "dataset" => {
                self.dataset = match v {
                    "" => DatasetSource::Unset,
                    "synth" => DatasetSource::Synth,
                    path => DatasetSource::Files(PathBuf::from(path)),
                }
            }
            "baselines" => {
                self.baselines = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "embed.kind" => self.embed.kind = v.parse()?,
            "embed.layers" => self.embed.layers = parse(key, v)?,
            "embed.heads" => self.embed.heads = parse(key, v)?,
            "embed.neighbors" => self.embed.neighbors = parse(key, v)?,
            "embed.hidden" => self.embed.hidden = parse(key, v)?,
            "embed.time_dim" => self.embed.time_dim = parse(key, v)?,
            "embed.mode" => {
                self.embed.mode = NeighborMode::parse(v)
                    .ok_or_else(|| Error::config(format!("`{key}`: expected out, in or undirected, got `{v}`")))?
            }
            "pretrain.batch_size" => self.pretrain.batch_size = parse(key, v)?,
            "pretrain.lr" => self.pretrain.lr = parse(key, v)?,
            "pretrain.epochs" => self.pretrain.epochs = parse(key, v)?,
            "pretrain.negatives" => self.pretrain.negatives = parse(key, v)?,
            "downstream.batch_size" => self.downstream.batch_size = parse(key, v)?,
            "downstream.lr" => self.downstream.lr = parse(key, v)?,
            "downstream.epochs" => self.downstream.epochs = parse(key, v)?,
            "downstream.hidden" => {
                self.downstream.hidden = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "synth.n_nodes" => self.synth.n_nodes = parse(key, v)?,
            "synth.fraud_rate" => self.synth.fraud_rate = parse(key, v)?,
            "synth.communities" => self.synth.communities = parse(key, v)?,
            "synth.node_dim" => self.synth.node_dim = parse(key, v)?,
            "synth.edge_dim" => self.synth.edge_dim = parse(key, v)?,
            "synth.normal_rate" => self.synth.normal_rate = parse(key, v)?,
            "synth.activity_shape" => self.synth.activity_shape = parse(key, v)?,
            "synth.burst_size" => self.synth.burst_size = parse(key, v)?,
            "synth.burst_window" => self.synth.burst_window = parse(key, v)?,
            "synth.horizon" => self.synth.horizon = parse(key, v)?,
            _ => return Err(Error::config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// The fully resolved configuration as flat key/value pairs.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let (e, p, d, s) = (&self.embed, &self.pretrain, &self.downstream, &self.synth);
        let dataset = match &self.dataset {
            DatasetSource::Unset => String::new(),
            DatasetSource::Synth => "synth".into(),
            DatasetSource::Files(path) => path.display().to_string(),
        };
        [
            ("seed", self.seed.to_string()),
            ("out", self.out.display().to_string()),
            ("dataset", dataset),
            ("baselines", list(&self.baselines, |b| b.to_string())),
            ("embed.kind", e.kind.to_string()),
            ("embed.layers", e.layers.to_string()),
            ("embed.heads", e.heads.to_string()),
            ("embed.neighbors", e.neighbors.to_string()),
            ("embed.hidden", e.hidden.to_string()),
            ("embed.time_dim", e.time_dim.to_string()),
            ("embed.mode", e.mode.as_str().to_string()),
            ("pretrain.batch_size", p.batch_size.to_string()),
            ("pretrain.lr", format!("{:?}", p.lr)),
            ("pretrain.epochs", p.epochs.to_string()),
            ("pretrain.negatives", p.negatives.to_string()),
            ("downstream.batch_size", d.batch_size.to_string()),
            ("downstream.lr", format!("{:?}", d.lr)),
            ("downstream.epochs", d.epochs.to_string()),
            ("downstream.hidden", list(&d.hidden, usize::to_string)),
            ("synth.n_nodes", s.n_nodes.to_string()),
            ("synth.fraud_rate", format!("{:?}", s.fraud_rate)),
            ("synth.communities", s.communities.to_string()),
            ("synth.node_dim", s.node_dim.to_string()),
            ("synth.edge_dim", s.edge_dim.to_string()),
            ("synth.normal_rate", format!("{:?}", s.normal_rate)),
            ("synth.activity_shape", format!("{:?}", s.activity_shape)),
            ("synth.burst_size", s.burst_size.to_string()),
            ("synth.burst_window", format!("{:?}", s.burst_window)),
            ("synth.horizon", format!("{:?}", s.horizon)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            self.set(key.trim(), value).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Applies a JSON object of keys to string or number values, as written to `manifest.json`.
    pub fn apply_json(&mut self, text: &str, path: &Path) -> Result<()> {
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg,
        };
        let map: BTreeMap<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| bad(format!("invalid manifest: {e}")))?;
        for (key, value) in map {
            let value = match value {
                serde_json::Value::String(s) => s,
                serde_json::Value::Number(n) => n.to_string(),
                other => return Err(bad(format!("`{key}` has unsupported value {other}"))),
            };
            self.set(&key, &value).map_err(|e| bad(e.to_string()))?;
        }
        Ok(())
    }

    /// Reads a config file; `.json` files are read as manifests.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            self.apply_json(&text, path)
        } else {
            self.apply_text(&text, path)
        }
    }

    pub fn manifest_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.entries()).expect("manifest serializes");
        text.push('\n');
        text
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    pub fn pretrain_config(&self) -> PretrainConfig {
        PretrainConfig {
            seed: self.seed,
            ..self.pretrain.clone()
        }
    }

    pub fn downstream_config(&self) -> DownstreamConfig {
        DownstreamConfig {
            seed: self.seed,
            ..self.downstream.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.embed.validate()?;
        self.pretrain.validate()?;
        self.downstream.validate()?;
        match &self.dataset {
            DatasetSource::Unset => Err(Error::config("no dataset: pass --dataset DIR or --synth-defaults")),
            DatasetSource::Synth => self.synth.validate(),
            DatasetSource::Files(_) => Ok(()),
        }
    }
}
