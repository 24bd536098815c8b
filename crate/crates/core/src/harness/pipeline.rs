//! End-to-end question answering with ablation modes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::builder::{self, BuilderConfig, ConstraintLexicon, ExtendContext};
use crate::catalog::{PatternCatalog, PatternId};
use crate::classifier::{self, PatternClassifier};
use crate::embeddings::WordVectorStore;
use crate::executor::{self, Semantics};
use crate::kg::KnowledgeGraph;
use crate::linker::{self, EvidenceStore, HeuristicDetector, LinkConfig, MentionDetector, PhraseExtensionSet};
use crate::query_graph::QueryGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Full,
    /// Gold pattern, linked entity.
    GoldPattern,
    /// Predicted patterns, gold entity.
    GoldEntity,
    /// Gold pattern and gold entity.
    GoldBoth,
    /// Linked entity, greedy expansion without a pattern.
    NoSqp,
}

impl Mode {
    pub fn uses_gold_entity(self) -> bool {
        matches!(self, Mode::GoldEntity | Mode::GoldBoth)
    }

    pub fn uses_gold_pattern(self) -> bool {
        matches!(self, Mode::GoldPattern | Mode::GoldBoth)
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Mode::Full),
            "gold-pattern" => Ok(Mode::GoldPattern),
            "gold-entity" => Ok(Mode::GoldEntity),
            "gold-both" => Ok(Mode::GoldBoth),
            "no-sqp" => Ok(Mode::NoSqp),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::GoldPattern => "gold-pattern",
            Mode::GoldEntity => "gold-entity",
            Mode::GoldBoth => "gold-both",
            Mode::NoSqp => "no-sqp",
        })
    }
}

/// Everything the pipeline reads while answering.
pub struct Resources {
    pub g: KnowledgeGraph,
    pub vectors: WordVectorStore,
    pub evidence: EvidenceStore,
    pub catalog: PatternCatalog,
    pub classifier: Box<dyn PatternClassifier>,
    pub lexicon: ConstraintLexicon,
    pub detector: Box<dyn MentionDetector>,
}

impl Resources {
    /// Uses the built-in lexicon extended with the graph's classes and the
    /// heuristic mention detector.
    pub fn new(
        g: KnowledgeGraph,
        vectors: WordVectorStore,
        evidence: EvidenceStore,
        catalog: PatternCatalog,
        classifier: Box<dyn PatternClassifier>,
    ) -> Self {
        let lexicon = ConstraintLexicon::builtin().with_classes(&g);
        Resources {
            g,
            vectors,
            evidence,
            catalog,
            classifier,
            lexicon,
            detector: Box::new(HeuristicDetector::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub k: usize,
    pub link: LinkConfig,
    pub builder: BuilderConfig,
    pub semantics: Semantics,
    pub max_nodes: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 2,
            link: LinkConfig::default(),
            builder: BuilderConfig::default(),
            semantics: Semantics::Homomorphic,
            max_nodes: crate::catalog::DEFAULT_MAX_NODES,
        }
    }
}

/// Gold information available to the ablation modes.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gold<'a> {
    pub pattern: Option<PatternId>,
    pub entity: Option<&'a str>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub linker_invoked: bool,
    pub entity: Option<String>,
    pub patterns_tried: Vec<PatternId>,
    pub pattern_used: Option<PatternId>,
    pub extension_failed: bool,
    pub failure: Option<String>,
    pub query: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Answer {
    pub answers: BTreeSet<String>,
    pub diagnostics: Diagnostics,
}

pub struct Pipeline<'a> {
    pub resources: &'a Resources,
    pub config: PipelineConfig,
}

impl<'a> Pipeline<'a> {
    pub fn new(resources: &'a Resources, config: PipelineConfig) -> Self {
        Pipeline { resources, config }
    }

    fn extensions(&self, question: &str) -> Vec<PhraseExtensionSet> {
        let theta = self.config.link.theta;
        self.resources
            .detector
            .detect(question, &self.resources.g)
            .iter()
            .map(|p| linker::extend_phrase(p, question, theta.max(p.word_count())))
            .collect()
    }

    pub fn answer(&self, question: &str, mode: Mode, gold: Gold<'_>) -> Answer {
        let mut diag = Diagnostics::default();
        let fail = |mut diag: Diagnostics, msg: String| Answer {
            answers: BTreeSet::new(),
            diagnostics: {
                diag.failure = Some(msg);
                diag
            },
        };
        let res = self.resources;
        let g = &res.g;

        let (entity, extensions) = if mode.uses_gold_entity() {
            let Some(iri) = gold.entity else {
                return fail(diag, "no gold entity".into());
            };
            let Some(id) = g.iri_id(iri) else {
                return fail(diag, format!("gold entity {iri} not in graph"));
            };
            (id, self.extensions(question))
        } else {
            diag.linker_invoked = true;
            match linker::link_with(res.detector.as_ref(), question, g, &res.evidence, &res.vectors, &self.config.link) {
                Ok(l) => (l.entity, l.extensions),
                Err(e) => return fail(diag, e.to_string()),
            }
        };
        diag.entity = Some(g.term(entity).text.clone());

        let mentions = builder::mention_strings(&extensions);
        let ctx = ExtendContext {
            question,
            g,
            store: &res.vectors,
            config: &self.config.builder,
            mentions: &mentions,
        };
        let constraints = builder::detect_constraints_with(question, &res.lexicon);

        if mode == Mode::NoSqp {
            let built = builder::expand_unguided(&ctx, entity, self.config.max_nodes.saturating_sub(1))
                .and_then(|q| builder::augment(&q, &constraints, question, g, &res.vectors, &self.config.builder));
            return match built {
                Ok(q) => self.run(q, diag),
                Err(e) => {
                    diag.extension_failed = true;
                    fail(diag, e.to_string())
                }
            };
        }

        let patterns: Vec<PatternId> = if mode.uses_gold_pattern() {
            match gold.pattern {
                Some(p) => vec![p],
                None => return fail(diag, "no gold pattern".into()),
            }
        } else {
            classifier::predict_topk(res.classifier.as_ref(), question, self.config.k)
                .into_iter()
                .map(|s| s.pattern)
                .collect()
        };

        let mut last_error = String::from("no pattern");
        for pid in patterns {
            let Some(pattern) = res.catalog.get(pid) else {
                last_error = format!("pattern {pid} not in catalog");
                continue;
            };
            diag.patterns_tried.push(pid);
            let built = builder::extend(&ctx, entity, pattern)
                .and_then(|q| builder::augment(&q, &constraints, question, g, &res.vectors, &self.config.builder));
            match built {
                Ok(q) => {
                    diag.pattern_used = Some(pid);
                    return self.run(q, diag);
                }
                Err(e) => {
                    log::debug!("pattern {pid} failed for {question:?}: {e}");
                    last_error = e.to_string();
                }
            }
        }
        diag.extension_failed = true;
        fail(diag, last_error)
    }

    fn run(&self, q: QueryGraph, mut diag: Diagnostics) -> Answer {
        diag.query = Some(q.to_string());
        match executor::execute_with(&q, &self.resources.g, self.config.semantics) {
            Ok(a) => Answer {
                answers: a.to_strings(&self.resources.g),
                diagnostics: diag,
            },
            Err(e) => {
                diag.failure = Some(e.to_string());
                Answer {
                    answers: BTreeSet::new(),
                    diagnostics: diag,
                }
            }
        }
    }
}
