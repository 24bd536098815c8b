//! Pipeline orchestration over datasets, with evaluation.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod pipeline;

pub use config::Settings;
pub use dataset::{load_dataset, DatasetEntry};
pub use eval::{evaluate, EvalReport};
pub use pipeline::{Mode, Pipeline, Resources};

use anyhow::{Context, Result};

use crate::builder::{self, BuilderConfig};
use crate::catalog::{self, PatternCatalog};
use crate::classifier::{self, SavedEnsemble};
use crate::embeddings::{self, WordVectorStore};
use crate::kg::{self, KgConfig};
use crate::linker::{self, EvidenceStore, LinkConfig};
use pipeline::PipelineConfig;

impl PipelineConfig {
    pub fn from_settings(s: &Settings) -> Self {
        PipelineConfig {
            k: s.k,
            link: LinkConfig {
                theta: s.theta,
                weights: s.alpha,
                sim_anchor: s.sim_anchor,
            },
            builder: BuilderConfig {
                lambda: s.lambda,
                ..BuilderConfig::default()
            },
            semantics: s.semantics,
            max_nodes: s.max_nodes,
        }
    }
}

pub fn load_catalog(s: &Settings) -> Result<PatternCatalog> {
    match &s.catalog {
        Some(p) => catalog::load_catalog(p, s.max_nodes).with_context(|| format!("loading catalog {}", p.display())),
        None => Ok(PatternCatalog::enumerate(s.max_nodes)),
    }
}

/// Trains the default ensemble from `train_data`: a dataset JSON file, or
/// a `pattern_id\tquestion` file.
pub fn train_from_settings(s: &Settings, catalog: &PatternCatalog) -> Result<SavedEnsemble> {
    let path = s.train_data.as_ref().context("no training data given")?;
    let pairs = if path.extension().is_some_and(|e| e == "json") {
        dataset::training_pairs(&load_dataset(path, catalog, kg::RDF_TYPE)?)
    } else {
        classifier::load_training(path)?
    };
    Ok(classifier::train_default(&pairs, catalog, None)?)
}

/// Loads every resource named in `s`. The classifier comes from `model`
/// when given, else it is trained from `train_data`.
pub fn load_resources(s: &Settings) -> Result<Resources> {
    let kg_path = s.kg.as_ref().context("no knowledge graph given")?;
    let g = kg::load_ntriples(kg_path, s.labels.as_deref(), s.counts.as_deref(), KgConfig::default())
        .with_context(|| format!("loading {}", kg_path.display()))?;
    let vectors = match &s.vectors {
        Some(p) => embeddings::load_vectors(p).with_context(|| format!("loading {}", p.display()))?,
        None => WordVectorStore::default(),
    };
    let evidence = match &s.evidence {
        Some(p) => linker::load_evidence(p).with_context(|| format!("loading {}", p.display()))?,
        None => EvidenceStore::new(),
    };
    let catalog = load_catalog(s)?;
    let model = match &s.model {
        Some(p) => SavedEnsemble::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => train_from_settings(s, &catalog)?,
    };
    let mut res = Resources::new(g, vectors, evidence, catalog, Box::new(model.into_ensemble()?));
    if let Some(p) = &s.lexicon {
        res.lexicon.extend(builder::load_lexicon(p).with_context(|| format!("loading {}", p.display()))?);
    }
    Ok(res)
}
