//! Line-oriented `key = value` settings.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::executor::Semantics;
use crate::harness::pipeline::Mode;
use crate::linker::{MatchWeights, SimAnchor, DEFAULT_THETA};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("bad value for {key}: {value:?}")]
    Value { key: String, value: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub kg: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub counts: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub evidence: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub train_data: Option<PathBuf>,
    pub k: usize,
    pub theta: usize,
    pub lambda: f64,
    pub alpha: MatchWeights,
    pub sim_anchor: SimAnchor,
    pub mode: Mode,
    pub semantics: Semantics,
    pub max_nodes: usize,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            kg: None,
            labels: None,
            counts: None,
            vectors: None,
            evidence: None,
            catalog: None,
            lexicon: None,
            model: None,
            train_data: None,
            k: 2,
            theta: DEFAULT_THETA,
            lambda: crate::builder::DEFAULT_LAMBDA,
            alpha: MatchWeights::default(),
            sim_anchor: SimAnchor::Base,
            mode: Mode::Full,
            semantics: Semantics::Homomorphic,
            max_nodes: crate::catalog::DEFAULT_MAX_NODES,
            seed: 0,
        }
    }
}

pub fn parse_alpha(s: &str) -> Option<MatchWeights> {
    let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    match parts.as_slice() {
        [a, b, c] => MatchWeights::new(*a, *b, *c).ok(),
        _ => None,
    }
}

pub fn parse_semantics(s: &str) -> Option<Semantics> {
    match s {
        "hom" | "homomorphic" => Some(Semantics::Homomorphic),
        "iso" | "injective" => Some(Semantics::Injective),
        _ => None,
    }
}

pub fn parse_sim_anchor(s: &str) -> Option<SimAnchor> {
    match s {
        "base" => Some(SimAnchor::Base),
        "best-member" => Some(SimAnchor::BestMember),
        _ => None,
    }
}

impl Settings {
    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::Value {
            key: key.to_string(),
            value: value.to_string(),
        };
        fn num<T: FromStr>(v: &str) -> Option<T> {
            v.parse().ok()
        }
        let path = || Some(PathBuf::from(value));
        match key {
            "kg" => self.kg = path(),
            "labels" => self.labels = path(),
            "counts" => self.counts = path(),
            "vectors" => self.vectors = path(),
            "evidence" => self.evidence = path(),
            "catalog" => self.catalog = path(),
            "lexicon" => self.lexicon = path(),
            "model" => self.model = path(),
            "train-data" | "train_data" => self.train_data = path(),
            "k" => self.k = num(value).filter(|&k| k >= 1).ok_or_else(bad)?,
            "theta" => self.theta = num(value).filter(|&t| t >= 1).ok_or_else(bad)?,
            "lambda" => self.lambda = num(value).filter(|l| (0.0..=1.0).contains(l)).ok_or_else(bad)?,
            "alpha" => self.alpha = parse_alpha(value).ok_or_else(bad)?,
            "sim-anchor" | "sim_anchor" => self.sim_anchor = parse_sim_anchor(value).ok_or_else(bad)?,
            "mode" => self.mode = value.parse().map_err(|_| bad())?,
            "semantics" => self.semantics = parse_semantics(value).ok_or_else(bad)?,
            "max-nodes" | "max_nodes" => self.max_nodes = num(value).filter(|&n| n >= 1).ok_or_else(bad)?,
            "seed" => self.seed = num(value).ok_or_else(bad)?,
            _ => {
                return Err(ConfigError::Parse {
                    line: 0,
                    message: format!("unknown key {key:?}"),
                })
            }
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                ConfigError::Parse { message, .. } => ConfigError::Parse { line: i + 1, message },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text)
    }
}
