mod common;

use std::process::Command;

use sqpqa::harness::{dataset, eval, pipeline, Mode, Pipeline};
use sqpqa::kg;
use sqpqa::linker::{self, LinkConfig, SimAnchor};

use common::*;

const RASHID: &str = "Rashid Behbudov State Song Theatre and Baku Puppet Theatre can be found in which country?";

fn report(mode: Mode) -> eval::EvalReport {
    let res = fixture_resources();
    let ds = dataset::load_dataset(&fixture("mini_eval.json"), &res.catalog, kg::RDF_TYPE).unwrap();
    let p = Pipeline::new(&res, pipeline::PipelineConfig::default());
    eval::evaluate(&p, &ds.entries, mode)
}

#[test]
fn training_set_covers_four_shapes() {
    let res = fixture_resources();
    let ds = dataset::load_dataset(&fixture("mini_train.json"), &res.catalog, kg::RDF_TYPE).unwrap();
    assert_eq!(ds.entries.len(), 60);
    for p in 1..=4 {
        let n = ds.entries.iter().filter(|e| e.gold_pattern.map(|x| x.0) == Some(p)).count();
        assert_eq!(n, 15, "pattern {p}");
    }
}

#[test]
fn gold_answers_match_gold_queries() {
    let res = fixture_resources();
    let ds = dataset::load_dataset(&fixture("mini_eval.json"), &res.catalog, kg::RDF_TYPE).unwrap();
    for e in &ds.entries {
        // counting and superlative questions carry their constraint outside the edge list
        if e.question.starts_with("How many") || e.question.contains("highest") {
            continue;
        }
        let mut q = e.gold_query.clone().unwrap();
        let variables: Vec<usize> = q.variable_positions().collect();
        let found = variables.into_iter().any(|v| {
            q.return_position = Some(v);
            sqpqa::executor::execute(&q, &res.g).unwrap().to_strings(&res.g) == e.gold_answers
        });
        assert!(found, "{}", e.id);
    }
}

#[test]
fn no_sqp_trails_the_guided_pipeline() {
    let guided = report(Mode::Full).macro_scores.f1;
    let unguided = report(Mode::NoSqp).macro_scores.f1;
    assert!(unguided < guided, "no-sqp {unguided} vs full {guided}");
}

#[test]
fn report_lists_every_question() {
    let r = report(Mode::GoldBoth);
    let tsv = r.to_tsv();
    assert_eq!(tsv.lines().count(), 12 + 2);
    assert!(r.rows.iter().all(|row| row.pattern_correct == Some(true)));
}

#[test]
fn default_detector_finds_the_full_name() {
    let res = fixture_resources();
    let linked = linker::link_with(res.detector.as_ref(), RASHID, &res.g, &res.evidence, &res.vectors, &LinkConfig::default()).unwrap();
    assert_eq!(res.g.term(linked.entity).text, "http://dbpedia.org/resource/Rashid_Behbudov_State_Song_Theatre");
}

#[test]
fn best_member_anchor_also_recovers_the_full_name() {
    let res = fixture_resources();
    let detected = linker::detect_mentions(RASHID, &res.g);
    let song = detected.iter().find(|p| p.text.contains("Song Theatre")).unwrap();
    assert_eq!(song.text, "Rashid Behbudov State Song Theatre");
    let config = LinkConfig {
        sim_anchor: SimAnchor::BestMember,
        ..LinkConfig::default()
    };
    let linked = linker::link(RASHID, &res.g, &res.evidence, &res.vectors, &config).unwrap();
    assert_eq!(res.g.term(linked.entity).text, "http://dbpedia.org/resource/Rashid_Behbudov_State_Song_Theatre");
}

fn cli() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sqpqa"));
    c.arg("--kg")
        .arg(fixture("mini_kg.nt"))
        .arg("--labels")
        .arg(fixture("labels.tsv"))
        .arg("--vectors")
        .arg(fixture("vectors.txt"))
        .arg("--evidence")
        .arg(fixture("evidence.tsv"))
        .arg("--train-data")
        .arg(fixture("mini_train.json"));
    c
}

#[test]
fn cli_trains_and_answers() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let out = cli().arg("--model").arg(&model).arg("train").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model.exists());

    let out = cli().arg("--model").arg(&model).arg("ask").arg("Who directed Philadelphia?").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l == "http://dbpedia.org/resource/Jonathan_Demme"), "{stdout}");
}

#[test]
fn cli_eval_prints_a_macro_line() {
    let out = cli().args(["--mode", "gold-both", "eval"]).arg(fixture("mini_eval.json")).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let last = stdout.lines().last().unwrap();
    assert!(last.starts_with("MACRO\t1.0000\t1.0000\t1.0000"), "{last}");
}

#[test]
fn cli_derives_patterns() {
    let out = cli().arg("derive-patterns").arg(fixture("mini_eval.json")).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 12);
    assert!(stdout.lines().next().unwrap().starts_with("e01\tp1\t"), "{stdout}");
}

#[test]
fn cli_rejects_unknown_mode() {
    let out = cli().args(["--mode", "sideways", "ask", "q"]).output().unwrap();
    assert!(!out.status.success());
}
