//! Pattern recognition as top-k classification.
//!
//! Questions are reduced to delexicalized features such as the question
//! word and the shape of the question with content words masked. Any [`PatternClassifier`] produces a full
//! distribution over catalog labels; [`EnsembleModel`] averages several.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{PatternCatalog, PatternId};
use crate::text::{self, Token};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training label {0} is not in the catalog")]
    UnknownLabel(PatternId),
    #[error("ensemble needs at least one member")]
    NoMembers,
    #[error("ensemble weights must be non-negative with a positive sum")]
    BadWeights,
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model file: {0}")]
    Model(#[from] serde_json::Error),
}

/// One token with its syntactic tag, from an optional tag sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub token: String,
    pub tag: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub counts: BTreeMap<String, u32>,
}

impl FeatureVector {
    fn bump(&mut self, name: impl Into<String>, by: u32) {
        if by > 0 {
            *self.counts.entry(name.into()).or_insert(0) += by;
        }
    }

    pub fn get(&self, name: &str) -> u32 {
        self.counts.get(name).copied().unwrap_or(0)
    }
}

const COMPARATIVES: &[&str] = &[
    "more", "less", "fewer", "greater", "larger", "bigger", "higher", "lower", "smaller", "older",
    "younger", "than",
];
const SUPERLATIVES: &[&str] = &[
    "most", "least", "highest", "lowest", "largest", "smallest", "biggest", "tallest", "longest",
    "shortest", "oldest", "youngest", "first", "last", "earliest", "latest",
];

fn wh_class(words: &[String]) -> &'static str {
    for (i, w) in words.iter().enumerate() {
        match w.as_str() {
            "who" | "whom" | "whose" => return "who",
            "what" => return "what",
            "which" => return "which",
            "where" => return "where",
            "when" => return "when",
            "how" if words.get(i + 1).is_some_and(|n| n == "many" || n == "much") => {
                return "how-many"
            }
            _ => {}
        }
    }
    "none"
}

/// Delexicalized token shape: function words stay, capitalized runs become
/// `ENT`, numbers `NUM`, superlatives `SUP`, everything else `W`.
fn shape_sequence(tokens: &[Token<'_>]) -> Vec<String> {
    let runs = text::capitalized_runs(tokens);
    let mut seq = vec!["BOS".to_string()];
    let mut i = 0;
    while i < tokens.len() {
        if let Some(&(_, end)) = runs.iter().find(|r| r.0 == i) {
            seq.push("ENT".into());
            i = end;
            continue;
        }
        let w = tokens[i].text.to_lowercase();
        let shape = if text::is_function_word(&w) || text::IMPERATIVES.contains(&w.as_str()) {
            w
        } else if w.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            "NUM".into()
        } else if SUPERLATIVES.contains(&w.as_str()) {
            "SUP".into()
        } else if w == "same" || w == "many" || w == "than" {
            w
        } else {
            "W".into()
        };
        seq.push(shape);
        i += 1;
    }
    seq.push("EOS".into());
    seq
}

/// Feature vector for a question, optionally enriched with tag bigrams.
pub fn featurize(question: &str, tags: Option<&[TaggedToken]>) -> FeatureVector {
    let tokens = text::tokenize(question);
    let words: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
    let mut fv = FeatureVector::default();

    fv.bump(format!("wh={}", wh_class(&words)), 1);
    let bucket = match words.len() {
        0..=5 => "le5",
        6..=10 => "6-10",
        _ => "gt10",
    };
    fv.bump(format!("len={bucket}"), 1);
    let entities = text::capitalized_runs(&tokens).len().min(3);
    fv.bump(format!("ents={entities}"), 1);

    let count = |list: &[&str]| words.iter().filter(|w| list.contains(&w.as_str())).count() as u32;
    fv.bump("kw=comparative", count(COMPARATIVES));
    fv.bump("kw=superlative", count(SUPERLATIVES));
    fv.bump("kw=conjunction", count(text::CONJUNCTIONS));
    fv.bump("kw=preposition", count(text::PREPOSITIONS));

    for pair in shape_sequence(&tokens).windows(2) {
        fv.bump(format!("shape={}_{}", pair[0], pair[1]), 1);
    }
    if let Some(tags) = tags {
        let mut seq = vec!["BOS"];
        seq.extend(tags.iter().map(|t| t.tag.as_str()));
        seq.push("EOS");
        for pair in seq.windows(2) {
            fv.bump(format!("tag={}_{}", pair[0], pair[1]), 1);
        }
    }
    fv
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredLabel {
    pub pattern: PatternId,
    pub score: f64,
}

/// A scorer that yields a probability distribution over catalog labels.
pub trait PatternClassifier: Send + Sync {
    fn name(&self) -> &str;

    /// Score for every catalog label; scores sum to 1.
    fn distribution(&self, question: &str, tags: Option<&[TaggedToken]>) -> BTreeMap<PatternId, f64>;
}

/// Highest-scoring `k` labels; ties go to the smaller pattern id.
pub fn top_k(distribution: &BTreeMap<PatternId, f64>, k: usize) -> Vec<ScoredLabel> {
    let mut ranked: Vec<ScoredLabel> = distribution
        .iter()
        .map(|(&pattern, &score)| ScoredLabel { pattern, score })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.pattern.cmp(&b.pattern)));
    ranked.truncate(k.max(1));
    ranked
}

pub fn predict_topk(model: &dyn PatternClassifier, question: &str, k: usize) -> Vec<ScoredLabel> {
    top_k(&model.distribution(question, None), k)
}

pub fn predict_topk_tagged(
    model: &dyn PatternClassifier,
    question: &str,
    tags: Option<&[TaggedToken]>,
    k: usize,
) -> Vec<ScoredLabel> {
    top_k(&model.distribution(question, tags), k)
}

fn softmax(logits: &BTreeMap<PatternId, f64>) -> BTreeMap<PatternId, f64> {
    let max = logits.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: BTreeMap<_, _> = logits.iter().map(|(&k, &v)| (k, (v - max).exp())).collect();
    let z: f64 = exp.values().sum();
    exp.into_iter().map(|(k, v)| (k, v / z)).collect()
}

/// Spreads a posterior over seen labels onto the whole label set. Unseen
/// labels share the add-one prior mass `u / (N + L)` uniformly.
fn with_residual(
    seen: BTreeMap<PatternId, f64>,
    labels: &[PatternId],
    examples: usize,
) -> BTreeMap<PatternId, f64> {
    let unseen: Vec<PatternId> = labels.iter().copied().filter(|l| !seen.contains_key(l)).collect();
    let each = 1.0 / (examples + labels.len()) as f64;
    let residual = each * unseen.len() as f64;
    let mut out: BTreeMap<_, _> = seen.into_iter().map(|(k, v)| (k, v * (1.0 - residual))).collect();
    for l in unseen {
        out.insert(l, each);
    }
    out
}

/// Multinomial feature-count model with add-one smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCountModel {
    labels: Vec<PatternId>,
    examples: usize,
    label_examples: BTreeMap<PatternId, usize>,
    feature_counts: BTreeMap<PatternId, BTreeMap<String, u64>>,
    label_totals: BTreeMap<PatternId, u64>,
    vocabulary: BTreeSet<String>,
}

fn check_training(pairs: &[(String, PatternId)], catalog: &PatternCatalog) -> Result<(), ClassifierError> {
    if pairs.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if let Some((_, bad)) = pairs.iter().find(|(_, l)| !catalog.contains(*l)) {
        return Err(ClassifierError::UnknownLabel(*bad));
    }
    Ok(())
}

fn tags_for(tags: Option<&[Vec<TaggedToken>]>, i: usize) -> Option<&[TaggedToken]> {
    tags.and_then(|t| t.get(i)).map(Vec::as_slice).filter(|t| !t.is_empty())
}

impl FeatureCountModel {
    pub fn train(
        pairs: &[(String, PatternId)],
        catalog: &PatternCatalog,
        tags: Option<&[Vec<TaggedToken>]>,
    ) -> Result<Self, ClassifierError> {
        check_training(pairs, catalog)?;
        let mut model = FeatureCountModel {
            labels: catalog.ids().collect(),
            examples: pairs.len(),
            label_examples: BTreeMap::new(),
            feature_counts: BTreeMap::new(),
            label_totals: BTreeMap::new(),
            vocabulary: BTreeSet::new(),
        };
        for (i, (question, label)) in pairs.iter().enumerate() {
            *model.label_examples.entry(*label).or_insert(0) += 1;
            let fv = featurize(question, tags_for(tags, i));
            let counts = model.feature_counts.entry(*label).or_default();
            for (f, &c) in &fv.counts {
                *counts.entry(f.clone()).or_insert(0) += u64::from(c);
                *model.label_totals.entry(*label).or_insert(0) += u64::from(c);
                model.vocabulary.insert(f.clone());
            }
        }
        Ok(model)
    }

    pub fn distribution_for(&self, fv: &FeatureVector) -> BTreeMap<PatternId, f64> {
        let v = self.vocabulary.len() as f64;
        let mut logits = BTreeMap::new();
        for (&label, &n) in &self.label_examples {
            let counts = &self.feature_counts[&label];
            let total = self.label_totals.get(&label).copied().unwrap_or(0) as f64;
            let mut logit = (n as f64).ln();
            for (f, &c) in &fv.counts {
                if !self.vocabulary.contains(f) {
                    continue;
                }
                let n_cf = counts.get(f).copied().unwrap_or(0) as f64;
                logit += f64::from(c) * ((n_cf + 1.0) / (total + v)).ln();
            }
            logits.insert(label, logit);
        }
        with_residual(softmax(&logits), &self.labels, self.examples)
    }
}

impl PatternClassifier for FeatureCountModel {
    fn name(&self) -> &str {
        "feature-count"
    }

    fn distribution(&self, question: &str, tags: Option<&[TaggedToken]>) -> BTreeMap<PatternId, f64> {
        self.distribution_for(&featurize(question, tags))
    }
}

/// Nearest-centroid scorer over L2-normalized feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidModel {
    labels: Vec<PatternId>,
    examples: usize,
    centroids: BTreeMap<PatternId, BTreeMap<String, f64>>,
    sharpness: f64,
}

fn unit(fv: &FeatureVector) -> BTreeMap<String, f64> {
    let norm = fv.counts.values().map(|&c| f64::from(c).powi(2)).sum::<f64>().sqrt();
    fv.counts
        .iter()
        .map(|(k, &c)| (k.clone(), if norm > 0.0 { f64::from(c) / norm } else { 0.0 }))
        .collect()
}

impl CentroidModel {
    pub fn train(
        pairs: &[(String, PatternId)],
        catalog: &PatternCatalog,
        tags: Option<&[Vec<TaggedToken>]>,
    ) -> Result<Self, ClassifierError> {
        check_training(pairs, catalog)?;
        let mut sums: BTreeMap<PatternId, (BTreeMap<String, f64>, usize)> = BTreeMap::new();
        for (i, (question, label)) in pairs.iter().enumerate() {
            let entry = sums.entry(*label).or_default();
            for (k, v) in unit(&featurize(question, tags_for(tags, i))) {
                *entry.0.entry(k).or_insert(0.0) += v;
            }
            entry.1 += 1;
        }
        let centroids = sums
            .into_iter()
            .map(|(label, (sum, n))| (label, sum.into_iter().map(|(k, v)| (k, v / n as f64)).collect()))
            .collect();
        Ok(CentroidModel {
            labels: catalog.ids().collect(),
            examples: pairs.len(),
            centroids,
            sharpness: 8.0,
        })
    }
}

impl PatternClassifier for CentroidModel {
    fn name(&self) -> &str {
        "centroid"
    }

    fn distribution(&self, question: &str, tags: Option<&[TaggedToken]>) -> BTreeMap<PatternId, f64> {
        let x = unit(&featurize(question, tags));
        let logits = self
            .centroids
            .iter()
            .map(|(&label, c)| {
                let dot: f64 = x.iter().map(|(k, v)| v * c.get(k).copied().unwrap_or(0.0)).sum();
                let norm = c.values().map(|v| v * v).sum::<f64>().sqrt();
                let cos = if norm > 0.0 { dot / norm } else { 0.0 };
                (label, self.sharpness * cos)
            })
            .collect();
        with_residual(softmax(&logits), &self.labels, self.examples)
    }
}

/// Serializable form of the built-in scorers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainedModel {
    FeatureCount(FeatureCountModel),
    Centroid(CentroidModel),
}

impl PatternClassifier for TrainedModel {
    fn name(&self) -> &str {
        match self {
            TrainedModel::FeatureCount(m) => m.name(),
            TrainedModel::Centroid(m) => m.name(),
        }
    }

    fn distribution(&self, question: &str, tags: Option<&[TaggedToken]>) -> BTreeMap<PatternId, f64> {
        match self {
            TrainedModel::FeatureCount(m) => m.distribution(question, tags),
            TrainedModel::Centroid(m) => m.distribution(question, tags),
        }
    }
}

/// Weighted average of member distributions.
pub struct EnsembleModel {
    members: Vec<Box<dyn PatternClassifier>>,
    weights: Vec<f64>,
}

impl EnsembleModel {
    /// Weights are normalized to sum to 1.
    pub fn new(members: Vec<Box<dyn PatternClassifier>>, weights: Vec<f64>) -> Result<Self, ClassifierError> {
        if members.is_empty() {
            return Err(ClassifierError::NoMembers);
        }
        let sum: f64 = weights.iter().sum();
        if weights.len() != members.len() || weights.iter().any(|w| w.is_nan() || *w < 0.0) || sum.is_nan() || sum <= 0.0 {
            return Err(ClassifierError::BadWeights);
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(EnsembleModel { members, weights })
    }

    pub fn uniform(members: Vec<Box<dyn PatternClassifier>>) -> Result<Self, ClassifierError> {
        let n = members.len();
        Self::new(members, vec![1.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn members(&self) -> impl Iterator<Item = &dyn PatternClassifier> {
        self.members.iter().map(|m| m.as_ref())
    }
}

impl PatternClassifier for EnsembleModel {
    fn name(&self) -> &str {
        "ensemble"
    }

    fn distribution(&self, question: &str, tags: Option<&[TaggedToken]>) -> BTreeMap<PatternId, f64> {
        let mut out: BTreeMap<PatternId, f64> = BTreeMap::new();
        for (m, &w) in self.members.iter().zip(&self.weights) {
            for (label, s) in m.distribution(question, tags) {
                *out.entry(label).or_insert(0.0) += w * s;
            }
        }
        out
    }
}

pub fn ensemble_predict(ens: &EnsembleModel, question: &str, k: usize) -> Vec<ScoredLabel> {
    predict_topk(ens, question, k)
}

/// Persisted ensemble: built-in members plus their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedEnsemble {
    pub members: Vec<TrainedModel>,
    pub weights: Vec<f64>,
}

impl SavedEnsemble {
    pub fn into_ensemble(self) -> Result<EnsembleModel, ClassifierError> {
        let members = self
            .members
            .into_iter()
            .map(|m| Box::new(m) as Box<dyn PatternClassifier>)
            .collect();
        EnsembleModel::new(members, self.weights)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|source| ClassifierError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let text = std::fs::read_to_string(path).map_err(|source| ClassifierError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// The default ensemble: feature-count and centroid models, equal weights.
pub fn train_default(
    pairs: &[(String, PatternId)],
    catalog: &PatternCatalog,
    tags: Option<&[Vec<TaggedToken>]>,
) -> Result<SavedEnsemble, ClassifierError> {
    Ok(SavedEnsemble {
        members: vec![
            TrainedModel::FeatureCount(FeatureCountModel::train(pairs, catalog, tags)?),
            TrainedModel::Centroid(CentroidModel::train(pairs, catalog, tags)?),
        ],
        weights: vec![0.5, 0.5],
    })
}

fn parse_pattern_id(s: &str) -> Option<PatternId> {
    s.trim().trim_start_matches('p').parse().ok().map(PatternId)
}

/// Parses a training file of `pattern_id\tquestion` lines.
pub fn parse_training(text: &str) -> Result<Vec<(String, PatternId)>, ClassifierError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ClassifierError::Parse { line: i + 1, message };
        let (id, question) = line
            .split_once('\t')
            .ok_or_else(|| err("expected pattern_id\\tquestion".into()))?;
        let id = parse_pattern_id(id).ok_or_else(|| err(format!("bad pattern id {id:?}")))?;
        let question = question.trim();
        if question.is_empty() {
            return Err(err("empty question".into()));
        }
        out.push((question.to_string(), id));
    }
    Ok(out)
}

/// Parses a tag sidecar of `question-index\ttoken/TAG token/TAG ...` lines
/// into per-question tag lists, indexed like the questions they describe.
pub fn parse_tags(text: &str, questions: usize) -> Result<Vec<Vec<TaggedToken>>, ClassifierError> {
    let mut out = vec![Vec::new(); questions];
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ClassifierError::Parse { line: i + 1, message };
        let (idx, rest) = line
            .split_once('\t')
            .ok_or_else(|| err("expected index\\ttoken/TAG ...".into()))?;
        let idx: usize = idx.trim().parse().map_err(|_| err(format!("bad index {idx:?}")))?;
        let slot = out
            .get_mut(idx)
            .ok_or_else(|| err(format!("index {idx} out of range")))?;
        for pair in rest.split_whitespace() {
            let (token, tag) = pair
                .rsplit_once('/')
                .ok_or_else(|| err(format!("bad token/TAG {pair:?}")))?;
            slot.push(TaggedToken {
                token: token.to_string(),
                tag: tag.to_string(),
            });
        }
    }
    Ok(out)
}

pub fn load_training(path: &Path) -> Result<Vec<(String, PatternId)>, ClassifierError> {
    let text = std::fs::read_to_string(path).map_err(|source| ClassifierError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_training(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> PatternCatalog {
        PatternCatalog::default()
    }

    /// Fixed distribution, for ensemble arithmetic.
    struct Fixed(BTreeMap<PatternId, f64>);

    impl PatternClassifier for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn distribution(&self, _: &str, _: Option<&[TaggedToken]>) -> BTreeMap<PatternId, f64> {
            self.0.clone()
        }
    }

    fn fixed(scores: &[f64]) -> Box<dyn PatternClassifier> {
        Box::new(Fixed(
            scores
                .iter()
                .enumerate()
                .map(|(i, &s)| (PatternId(i as u32), s))
                .collect(),
        ))
    }

    #[test]
    fn featurize_reads_wh_and_length() {
        let fv = featurize("Who is X?", None);
        assert_eq!(fv.get("wh=who"), 1);
        assert_eq!(fv.get("len=le5"), 1);
        assert_eq!(fv.get("ents=1"), 1);
        let fv = featurize("How many films did Robert Zemeckis direct?", None);
        assert_eq!(fv.get("wh=how-many"), 1);
        assert_eq!(fv.get("len=6-10"), 1);
        let fv = featurize("Give me all films", None);
        assert_eq!(fv.get("wh=none"), 1);
        assert_eq!(fv.get("ents=0"), 1);
    }

    #[test]
    fn featurize_counts_keywords() {
        let fv = featurize("Which mountain in Italy is higher than the tallest one and older?", None);
        assert_eq!(fv.get("kw=comparative"), 3);
        assert_eq!(fv.get("kw=superlative"), 1);
        assert_eq!(fv.get("kw=conjunction"), 1);
        assert_eq!(fv.get("kw=preposition"), 1);
        assert_eq!(fv.get("len=gt10"), 1);
    }

    #[test]
    fn features_are_delexicalized() {
        let fv = featurize("Who directed Philadelphia and Jonathan Demme?", None);
        for name in fv.counts.keys() {
            let lower = name.to_lowercase();
            assert!(!lower.contains("philadelphia") && !lower.contains("demme"), "{name}");
        }
        assert_eq!(fv.get("shape=directed_ENT"), 0);
        assert_eq!(fv.get("shape=W_ENT"), 1);
    }

    #[test]
    fn tag_bigrams() {
        let tags = vec![
            TaggedToken { token: "Who".into(), tag: "WP".into() },
            TaggedToken { token: "won".into(), tag: "VBD".into() },
        ];
        let fv = featurize("Who won?", Some(&tags));
        assert_eq!(fv.get("tag=BOS_WP"), 1);
        assert_eq!(fv.get("tag=WP_VBD"), 1);
        assert_eq!(fv.get("tag=VBD_EOS"), 1);
    }

    #[test]
    fn empty_training_set_is_rejected() {
        assert!(matches!(
            FeatureCountModel::train(&[], &catalog(), None),
            Err(ClassifierError::EmptyTrainingSet)
        ));
        assert!(matches!(
            FeatureCountModel::train(&[("q".into(), PatternId(77))], &catalog(), None),
            Err(ClassifierError::UnknownLabel(PatternId(77)))
        ));
    }

    #[test]
    fn distributions_sum_to_one() {
        let pairs = vec![
            ("Who directed Philadelphia?".to_string(), PatternId(1)),
            ("Give me all films".to_string(), PatternId(0)),
        ];
        let c = catalog();
        let nb = FeatureCountModel::train(&pairs, &c, None).unwrap();
        let cm = CentroidModel::train(&pairs, &c, None).unwrap();
        for m in [&nb as &dyn PatternClassifier, &cm] {
            let d = m.distribution("Where was Tom Hanks born?", None);
            assert_eq!(d.len(), c.len());
            assert!((d.values().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(d.values().all(|s| (0.0..=1.0).contains(s)));
        }
    }

    #[test]
    fn single_label_always_first() {
        let pairs = vec![("Who directed Philadelphia?".to_string(), PatternId(5))];
        let nb = FeatureCountModel::train(&pairs, &catalog(), None).unwrap();
        for q in ["Give me all films", "How many rivers flow into the sea and are longer than 10 km?", "x"] {
            assert_eq!(predict_topk(&nb, q, 1)[0].pattern, PatternId(5));
        }
    }

    #[test]
    fn separable_training_data_is_fit() {
        let pairs: Vec<(String, PatternId)> = [
            ("Who directed Philadelphia?", 1),
            ("Who wrote Hamlet?", 1),
            ("Who founded Tesla?", 1),
            ("Where was Tom Hanks born?", 3),
            ("Where is Baku?", 3),
            ("Where did Obama study?", 3),
        ]
        .into_iter()
        .map(|(q, l)| (q.to_string(), PatternId(l)))
        .collect();
        let nb = FeatureCountModel::train(&pairs, &catalog(), None).unwrap();
        for (q, l) in &pairs {
            assert_eq!(predict_topk(&nb, q, 1)[0].pattern, *l, "{q}");
        }
    }

    #[test]
    fn top_k_contract() {
        let nb = FeatureCountModel::train(&[("Who is X?".to_string(), PatternId(2))], &catalog(), None).unwrap();
        for k in 1..=20 {
            let top = predict_topk(&nb, "Who is Y?", k);
            assert_eq!(top.len(), k.min(13));
            assert!(top.windows(2).all(|w| w[0].score >= w[1].score));
            let ids: BTreeSet<_> = top.iter().map(|s| s.pattern).collect();
            assert_eq!(ids.len(), top.len());
        }
        // unseen labels tie; smaller id first
        let top = predict_topk(&nb, "Who is Y?", 3);
        assert_eq!(top[1].pattern, PatternId(0));
        assert_eq!(top[2].pattern, PatternId(1));
    }

    #[test]
    fn ensemble_identity_and_projection() {
        let one = EnsembleModel::uniform(vec![fixed(&[0.1, 0.7, 0.2])]).unwrap();
        assert_eq!(
            ensemble_predict(&one, "q", 3),
            predict_topk(&Fixed([(PatternId(0), 0.1), (PatternId(1), 0.7), (PatternId(2), 0.2)].into()), "q", 3)
        );
        let proj = EnsembleModel::new(vec![fixed(&[0.9, 0.1]), fixed(&[0.1, 0.9])], vec![1.0, 0.0]).unwrap();
        assert_eq!(ensemble_predict(&proj, "q", 1)[0].pattern, PatternId(0));
    }

    #[test]
    fn ensemble_averages() {
        let ens = EnsembleModel::new(vec![fixed(&[0.6, 0.4]), fixed(&[0.2, 0.8])], vec![0.5, 0.5]).unwrap();
        let top = ensemble_predict(&ens, "q", 2);
        assert_eq!(top[0].pattern, PatternId(1));
        assert!((top[0].score - 0.6).abs() < 1e-12);
        assert!((top[1].score - 0.4).abs() < 1e-12);
    }

    #[test]
    fn ensemble_rejects_bad_config() {
        assert!(matches!(EnsembleModel::uniform(vec![]), Err(ClassifierError::NoMembers)));
        assert!(matches!(
            EnsembleModel::new(vec![fixed(&[1.0])], vec![-1.0]),
            Err(ClassifierError::BadWeights)
        ));
        assert!(matches!(
            EnsembleModel::new(vec![fixed(&[1.0])], vec![0.0]),
            Err(ClassifierError::BadWeights)
        ));
    }

    #[test]
    fn training_and_tag_files() {
        let pairs = parse_training("1\tWho directed Philadelphia?\np3\tWhere was he born?\n").unwrap();
        assert_eq!(pairs[1], ("Where was he born?".to_string(), PatternId(3)));
        assert!(parse_training("x\tq\n").is_err());
        let tags = parse_tags("1\tWhere/WRB was/VBD\n", 2).unwrap();
        assert!(tags[0].is_empty());
        assert_eq!(tags[1][0].tag, "WRB");
        assert!(parse_tags("5\ta/B\n", 2).is_err());
    }

    #[test]
    fn saved_ensemble_round_trip() {
        let pairs = vec![("Who directed Philadelphia?".to_string(), PatternId(1))];
        let nb = FeatureCountModel::train(&pairs, &catalog(), None).unwrap();
        let saved = SavedEnsemble {
            members: vec![TrainedModel::FeatureCount(nb)],
            weights: vec![1.0],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        saved.save(&path).unwrap();
        assert_eq!(SavedEnsemble::load(&path).unwrap(), saved);
    }
}
