//! `kgnav`: run knowledge-graph navigation benchmarks from the shell.

mod setup;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kgnav::agent::{run_question, RunConfig, Transcript};
use kgnav::bench::{run_benchmark, write_outputs};
use kgnav::dataset::{load_questions, Question};
use kgnav::llm::{ModelParams, Role};
use kgnav::search::{SearchConfig, DEFAULT_K, DEFAULT_P};
use kgnav::{summarize, SchemaDialect};
use serde_json::json;

use setup::{load_prompts, open_backend, open_models, BackendSpec, GatewayOptions, GatewaySpec};

#[derive(Parser, Debug)]
#[command(
    name = "kgnav",
    version,
    about = "Answer questions by navigating a knowledge graph with an LLM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every question of a dataset and write transcripts and a report
    Run {
        /// JSON-lines question file
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Number of questions processed at once
        #[arg(long, default_value_t = 1)]
        concurrency: usize,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a single question and print the conversation
    Ask {
        /// Question text
        question: String,
        /// Topic entity as LABEL=ID; repeatable
        #[arg(long = "topic", value_name = "LABEL=ID", required = true)]
        topics: Vec<String>,
        /// Question id, also used to pick the script from a script directory
        #[arg(long, default_value = "ask")]
        id: String,
        #[command(flatten)]
        common: Common,
    },
    /// Check that a graph, dataset and exemplar set load cleanly
    Validate {
        /// local:<triples>[,<labels>] or sparql:<url>
        #[arg(long)]
        backend: BackendSpec,
        /// freebase or wikidata
        #[arg(long, default_value = "freebase")]
        dialect: SchemaDialect,
        /// JSON-lines question file whose topic entities are looked up
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Exemplar directory to parse
        #[arg(long)]
        exemplars: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// local:<triples>[,<labels>] or sparql:<url>
    #[arg(long)]
    backend: BackendSpec,
    /// freebase or wikidata
    #[arg(long, default_value = "freebase")]
    dialect: SchemaDialect,
    /// Chat-completions url, or script:<dir|file> for canned replies
    #[arg(long)]
    gateway: GatewaySpec,
    /// Model name sent to a live gateway
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the gateway API key
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
    /// Number of exemplars in the system prompt (default: all)
    #[arg(long)]
    shots: Option<usize>,
    /// Exemplar directory (default: the bundled set)
    #[arg(long)]
    exemplars: Option<PathBuf>,
    /// Instruction text file (default: the bundled instructions)
    #[arg(long)]
    instructions: Option<PathBuf>,
    /// Neighbourhood size above which only properties are returned
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Maximum rows per search result
    #[arg(long, default_value_t = DEFAULT_P)]
    p: usize,
    /// Model turns allowed per question
    #[arg(long, default_value_t = kgnav::agent::DEFAULT_MAX_TURNS)]
    max_turns: usize,
    /// Use the sampling settings recommended for open reasoning models
    #[arg(long)]
    open_model_params: bool,
    /// Sampling temperature sent to the gateway
    #[arg(long)]
    temperature: Option<f64>,
    /// Output token limit per model turn
    #[arg(long)]
    max_tokens: Option<u32>,
    /// Permit contacting remote endpoints and gateways
    #[arg(long)]
    allow_network: bool,
}

impl Common {
    fn run_config(&self, shots: usize) -> Result<RunConfig> {
        if self.max_turns == 0 {
            bail!("--max-turns must be at least 1");
        }
        let mut params = if self.open_model_params {
            ModelParams::open_model_defaults()
        } else {
            ModelParams::default()
        };
        params.temperature = self.temperature.or(params.temperature);
        params.max_output_tokens = self.max_tokens;
        Ok(RunConfig {
            max_turns: self.max_turns,
            search: SearchConfig::new(self.k, self.p)?,
            shots,
            dialect: self.dialect,
            params,
        })
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            dataset,
            common,
            concurrency,
            out,
        } => cmd_run(&dataset, &common, concurrency, &out),
        Command::Ask {
            question,
            topics,
            id,
            common,
        } => cmd_ask(question, &topics, id, &common),
        Command::Validate {
            backend,
            dialect,
            dataset,
            exemplars,
        } => cmd_validate(&backend, dialect, dataset, exemplars),
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn cmd_run(dataset: &Path, common: &Common, concurrency: usize, out: &Path) -> Result<()> {
    // Everything is loaded and checked before the output directory is touched.
    let questions =
        load_questions(dataset).with_context(|| format!("loading {}", dataset.display()))?;
    let prompts = load_prompts(
        common.instructions.as_deref(),
        common.exemplars.as_deref(),
        common.shots,
        common.dialect,
    )?;
    let cfg = common.run_config(prompts.shot_count)?;
    let backend = open_backend(&common.backend, common.dialect, common.allow_network)?;
    let models = open_models(
        &common.gateway,
        &GatewayOptions {
            model: common.model.as_deref(),
            api_key_env: &common.api_key_env,
            concurrency,
            allow_network: common.allow_network,
        },
    )?;

    let started = unix_now();
    let transcripts = run_benchmark(
        &questions,
        models.as_ref(),
        backend.as_ref(),
        &prompts,
        &cfg,
        concurrency,
    );
    let report = summarize(&transcripts, &questions)?;
    let metadata = json!({
        "started_unix": started,
        "finished_unix": unix_now(),
        "dataset": dataset.display().to_string(),
        "backend": common.backend.to_string(),
        "gateway": common.gateway.to_string(),
        "model": common.model,
        "dialect": common.dialect,
        "shots": cfg.shots,
        "k": cfg.search.k,
        "p": cfg.search.p,
        "max_turns": cfg.max_turns,
        "concurrency": concurrency,
    });
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_outputs(out, &transcripts, &report, &metadata)?;

    let a = &report.aggregate;
    println!(
        "hits@1 {:.4} over {} questions (avg turns {:.2}, avg tool calls {:.2}, avg main chars {:.1})",
        a.hits_at_1, a.questions, a.avg_turns, a.avg_tool_calls, a.avg_main_chars
    );
    let errors = report
        .per_question
        .iter()
        .filter(|q| q.outcome == kgnav::Outcome::Error)
        .count();
    if errors > 0 {
        eprintln!(
            "{errors} question(s) ended in an error; see the transcripts in {}",
            out.display()
        );
    }
    println!("report written to {}", out.display());
    Ok(())
}

fn cmd_ask(text: String, topics: &[String], id: String, common: &Common) -> Result<()> {
    let question = Question {
        id,
        text,
        topic_entities: topics
            .iter()
            .map(|t| {
                t.split_once('=')
                    .map(|(label, id)| (label.to_string(), id.to_string()))
                    .with_context(|| format!("--topic expects LABEL=ID, got {t:?}"))
            })
            .collect::<Result<_>>()?,
        answers: vec![],
    };
    let prompts = load_prompts(
        common.instructions.as_deref(),
        common.exemplars.as_deref(),
        common.shots,
        common.dialect,
    )?;
    let cfg = common.run_config(prompts.shot_count)?;
    let backend = open_backend(&common.backend, common.dialect, common.allow_network)?;
    let models = open_models(
        &common.gateway,
        &GatewayOptions {
            model: common.model.as_deref(),
            api_key_env: &common.api_key_env,
            concurrency: 1,
            allow_network: common.allow_network,
        },
    )?;
    let model = models(&question)?;
    let t = run_question(&question, model.as_ref(), backend.as_ref(), &prompts, &cfg);
    print_transcript(&t);
    if let Some(e) = &t.error {
        bail!("run failed: {e}");
    }
    Ok(())
}

fn print_transcript(t: &Transcript) {
    for m in &t.messages[1..] {
        match m.role {
            Role::User => println!("User: {}\n", m.content.as_deref().unwrap_or("")),
            Role::Assistant => {
                if let Some(c) = m.content.as_deref().filter(|c| !c.is_empty()) {
                    println!("Assistant: {c}");
                }
                for call in &m.tool_calls {
                    println!("Tool Call: {}({})", call.name, call.arguments);
                }
                println!();
            }
            Role::Tool => println!("{}\n", m.content.as_deref().unwrap_or("")),
            Role::System => {}
        }
    }
    println!("outcome: {}", t.outcome.as_str());
    if !t.final_answers.is_empty() {
        println!("answers: {}", t.final_answers.join("; "));
    }
    if !t.path.is_empty() {
        let hops: Vec<String> = t
            .path
            .iter()
            .map(|h| format!("{} -[{}]-> {}", h.from.id, h.property.id, h.to.text()))
            .collect();
        println!("path: {}", hops.join(", "));
    }
}

fn cmd_validate(
    backend: &BackendSpec,
    dialect: SchemaDialect,
    dataset: Option<PathBuf>,
    exemplars: Option<PathBuf>,
) -> Result<()> {
    let BackendSpec::Local { triples, labels } = backend else {
        bail!("validate works on local graphs only");
    };
    let store = kgnav::Store::load_files(dialect, triples, labels.as_deref())
        .with_context(|| format!("loading {}", triples.display()))?;
    println!(
        "graph: {} triples, {} entities",
        store.len(),
        store.entity_ids().len()
    );
    if let Some(path) = dataset {
        let questions =
            load_questions(&path).with_context(|| format!("loading {}", path.display()))?;
        let known: std::collections::HashSet<&str> = store.entity_ids().into_iter().collect();
        let mut missing = 0;
        for q in &questions {
            for (label, id) in &q.topic_entities {
                kgnav::types::parse_entity_ref(id, dialect)
                    .with_context(|| format!("question {}: topic entity {label}", q.id))?;
                if !known.contains(id.as_str()) {
                    missing += 1;
                    println!(
                        "warning: question {}: topic entity {id} ({label}) is not in the graph",
                        q.id
                    );
                }
            }
        }
        println!(
            "dataset: {} questions, {missing} topic entities missing from the graph",
            questions.len()
        );
    }
    if let Some(dir) = exemplars {
        let ex = kgnav::prompt::load_exemplars(&dir)?;
        println!("exemplars: {}", ex.len());
    }
    Ok(())
}
