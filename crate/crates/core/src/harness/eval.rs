//! Per-question and macro-averaged answer scores.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::harness::dataset::DatasetEntry;
use crate::harness::pipeline::{Diagnostics, Gold, Mode, Pipeline};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Both sets empty scores 1; a nonempty gold set against an empty answer
/// scores 0.
pub fn score(returned: &BTreeSet<String>, gold: &BTreeSet<String>) -> Scores {
    if returned.is_empty() && gold.is_empty() {
        return Scores {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    let hit = returned.intersection(gold).count() as f64;
    let precision = if returned.is_empty() { 0.0 } else { hit / returned.len() as f64 };
    let recall = if gold.is_empty() { 0.0 } else { hit / gold.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores { precision, recall, f1 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionResult {
    pub id: String,
    pub scores: Scores,
    pub returned: BTreeSet<String>,
    pub pattern_correct: Option<bool>,
    pub entity_correct: Option<bool>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: Mode,
    pub rows: Vec<QuestionResult>,
    pub macro_scores: Scores,
}

impl EvalReport {
    pub fn from_rows(mode: Mode, rows: Vec<QuestionResult>) -> Self {
        let n = rows.len().max(1) as f64;
        let mean = |f: fn(&Scores) -> f64| rows.iter().map(|r| f(&r.scores)).sum::<f64>() / n;
        let macro_scores = if rows.is_empty() {
            Scores {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            }
        } else {
            Scores {
                precision: mean(|s| s.precision),
                recall: mean(|s| s.recall),
                f1: mean(|s| s.f1),
            }
        };
        EvalReport { mode, rows, macro_scores }
    }

    /// Tab-separated rows followed by a macro summary line.
    pub fn to_tsv(&self) -> String {
        let flag = |b: Option<bool>| match b {
            Some(true) => "yes",
            Some(false) => "no",
            None => "-",
        };
        let mut out = String::from("id\tprecision\trecall\tf1\tpattern_ok\tentity_ok\textension_failed\tfailure\tquery\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{}\t{}",
                r.id,
                r.scores.precision,
                r.scores.recall,
                r.scores.f1,
                flag(r.pattern_correct),
                flag(r.entity_correct),
                r.diagnostics.extension_failed,
                r.diagnostics.failure.as_deref().unwrap_or("-"),
                r.diagnostics.query.as_deref().unwrap_or("-"),
            );
        }
        let _ = writeln!(
            out,
            "MACRO\t{:.4}\t{:.4}\t{:.4}\tmode={}\tquestions={}",
            self.macro_scores.precision,
            self.macro_scores.recall,
            self.macro_scores.f1,
            self.mode,
            self.rows.len()
        );
        out
    }
}

pub fn evaluate(pipeline: &Pipeline<'_>, entries: &[DatasetEntry], mode: Mode) -> EvalReport {
    let rows = entries
        .iter()
        .map(|e| {
            let gold = Gold {
                pattern: e.gold_pattern,
                entity: e.gold_entity.as_deref(),
            };
            let answer = pipeline.answer(&e.question, mode, gold);
            let d = answer.diagnostics;
            QuestionResult {
                id: e.id.clone(),
                scores: score(&answer.answers, &e.gold_answers),
                pattern_correct: e.gold_pattern.zip(d.pattern_used).map(|(g, u)| g == u),
                entity_correct: e.gold_entity.as_ref().zip(d.entity.as_ref()).map(|(g, u)| g == u),
                returned: answer.answers,
                diagnostics: d,
            }
        })
        .collect();
    EvalReport::from_rows(mode, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn row(f1: f64) -> QuestionResult {
        QuestionResult {
            id: "q".into(),
            scores: Scores {
                precision: f1,
                recall: f1,
                f1,
            },
            returned: BTreeSet::new(),
            pattern_correct: None,
            entity_correct: None,
            diagnostics: Diagnostics::default(),
        }
    }

    #[test]
    fn scoring_conventions() {
        assert_eq!(score(&set(&[]), &set(&[])).f1, 1.0);
        assert_eq!(score(&set(&[]), &set(&["a"])).f1, 0.0);
        assert_eq!(score(&set(&["a"]), &set(&[])).precision, 0.0);
        let s = score(&set(&["a", "b"]), &set(&["a", "c", "d"]));
        assert_eq!((s.precision, s.recall), (0.5, 1.0 / 3.0));
        assert!((s.f1 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn macro_is_the_mean() {
        let r = EvalReport::from_rows(Mode::Full, vec![row(1.0), row(0.0)]);
        assert_eq!(r.macro_scores.f1, 0.5);
        assert!(r.to_tsv().lines().last().unwrap().starts_with("MACRO\t0.5000"));
    }
}
