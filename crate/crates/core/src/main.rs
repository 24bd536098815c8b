use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use sqpqa::harness::{self, dataset, eval, pipeline, Settings};
use sqpqa::kg::{self, KgConfig};

#[derive(Parser)]
#[command(name = "sqpqa", version, about = "Pattern-guided question answering over a knowledge graph")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` settings file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    kg: Option<PathBuf>,
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    #[arg(long, global = true)]
    counts: Option<PathBuf>,
    #[arg(long, global = true)]
    vectors: Option<PathBuf>,
    #[arg(long, global = true)]
    evidence: Option<PathBuf>,
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Trained classifier file.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Dataset JSON or `pattern_id<TAB>question` file.
    #[arg(long, global = true)]
    train_data: Option<PathBuf>,
    #[arg(long, global = true)]
    k: Option<String>,
    #[arg(long, global = true)]
    theta: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// Matching weights `a1,a2,a3`.
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// full | gold-pattern | gold-entity | gold-both | no-sqp
    #[arg(long, global = true)]
    mode: Option<String>,
    /// hom | iso
    #[arg(long, global = true)]
    semantics: Option<String>,
    /// base | best-member
    #[arg(long, global = true)]
    sim_anchor: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load a graph and print its statistics.
    LoadKg,
    /// Train the pattern classifier and write it to `--model`.
    Train,
    /// Answer one question.
    Ask { question: String },
    /// Evaluate a dataset and print per-question and macro scores.
    Eval { dataset: PathBuf },
    /// Print the gold pattern of every dataset entry.
    DerivePatterns { dataset: PathBuf },
}

fn settings(c: &Common) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &c.config {
        s.apply_file(path)?;
    }
    let paths = [
        ("kg", &c.kg),
        ("labels", &c.labels),
        ("counts", &c.counts),
        ("vectors", &c.vectors),
        ("evidence", &c.evidence),
        ("catalog", &c.catalog),
        ("lexicon", &c.lexicon),
        ("model", &c.model),
        ("train-data", &c.train_data),
    ];
    for (key, value) in paths {
        if let Some(v) = value {
            s.set(key, &v.to_string_lossy())?;
        }
    }
    let values = [
        ("k", &c.k),
        ("theta", &c.theta),
        ("lambda", &c.lambda),
        ("alpha", &c.alpha),
        ("mode", &c.mode),
        ("semantics", &c.semantics),
        ("sim-anchor", &c.sim_anchor),
        ("seed", &c.seed),
    ];
    for (key, value) in values {
        if let Some(v) = value {
            s.set(key, v)?;
        }
    }
    Ok(s)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let s = settings(&cli.common)?;
    match cli.command {
        Command::LoadKg => {
            let path = s.kg.as_ref().context("--kg is required")?;
            let g = kg::load_ntriples(path, s.labels.as_deref(), s.counts.as_deref(), KgConfig::default())?;
            println!("nodes\t{}", g.node_count());
            println!("entities\t{}", g.entities().count());
            println!("predicates\t{}", g.predicate_count());
            println!("triples\t{}", g.triple_count());
        }
        Command::Train => {
            let out = s.model.as_ref().context("--model names the output file")?;
            let catalog = harness::load_catalog(&s)?;
            let model = harness::train_from_settings(&s, &catalog)?;
            model.save(out)?;
            println!("wrote {}", out.display());
        }
        Command::Ask { question } => {
            let res = harness::load_resources(&s)?;
            let p = pipeline::Pipeline::new(&res, pipeline::PipelineConfig::from_settings(&s));
            let answer = p.answer(&question, s.mode, pipeline::Gold::default());
            let d = &answer.diagnostics;
            if let Some(q) = &d.query {
                println!("query\t{q}");
            }
            if let Some(f) = &d.failure {
                println!("failure\t{f}");
            }
            for a in &answer.answers {
                println!("{a}");
            }
        }
        Command::Eval { dataset } => {
            let res = harness::load_resources(&s)?;
            let ds = dataset::load_dataset(&dataset, &res.catalog, kg::RDF_TYPE)?;
            let p = pipeline::Pipeline::new(&res, pipeline::PipelineConfig::from_settings(&s));
            print!("{}", eval::evaluate(&p, &ds.entries, s.mode).to_tsv());
        }
        Command::DerivePatterns { dataset } => {
            let catalog = harness::load_catalog(&s)?;
            let ds = dataset::load_dataset(&dataset, &catalog, kg::RDF_TYPE)?;
            for e in &ds.entries {
                let p = e.gold_pattern.map_or("-".to_string(), |p| p.to_string());
                println!("{}\t{p}\t{}", e.id, e.question);
            }
            for x in &ds.excluded {
                println!("{}\texcluded\t{}", x.id, x.reason);
            }
        }
    }
    Ok(())
}
