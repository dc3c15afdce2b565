//! Turning command-line settings into backends, models and prompts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use kgnav::bench::ModelFactory;
use kgnav::dataset::Question;
use kgnav::llm::{ChatCompletionsClient, ChatModel, GatewayConfig, GatewayError, ScriptedModel};
use kgnav::prompt::{self, Exemplar, PromptBundle};
use kgnav::sparql::{EndpointConfig, SparqlClient};
use kgnav::{Backend, SchemaDialect, Store};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Local {
        triples: PathBuf,
        labels: Option<PathBuf>,
    },
    Sparql {
        url: String,
    },
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("local:") {
            let mut parts = rest.splitn(2, ',');
            let triples = parts
                .next()
                .filter(|p| !p.is_empty())
                .ok_or("local backend needs a triples file")?;
            Ok(BackendSpec::Local {
                triples: triples.into(),
                labels: parts.next().filter(|p| !p.is_empty()).map(PathBuf::from),
            })
        } else if let Some(url) = s.strip_prefix("sparql:") {
            if url.is_empty() {
                return Err("sparql backend needs an endpoint url".into());
            }
            Ok(BackendSpec::Sparql { url: url.into() })
        } else {
            Err(format!(
                "expected local:<triples>[,<labels>] or sparql:<url>, got {s:?}"
            ))
        }
    }
}

/// Prints the spec in the form it is parsed from.
impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Local {
                triples,
                labels: None,
            } => write!(f, "local:{}", triples.display()),
            BackendSpec::Local {
                triples,
                labels: Some(labels),
            } => write!(f, "local:{},{}", triples.display(), labels.display()),
            BackendSpec::Sparql { url } => write!(f, "sparql:{url}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GatewaySpec {
    /// A script directory (one `<question id>.json` per question) or a single
    /// script file replayed for every question.
    Script(PathBuf),
    Url(String),
}

impl FromStr for GatewaySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(path) = s.strip_prefix("script:") {
            if path.is_empty() {
                return Err("script gateway needs a path".into());
            }
            Ok(GatewaySpec::Script(path.into()))
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(GatewaySpec::Url(s.into()))
        } else {
            Err(format!(
                "expected script:<path> or an http(s) url, got {s:?}"
            ))
        }
    }
}

impl fmt::Display for GatewaySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GatewaySpec::Script(path) => write!(f, "script:{}", path.display()),
            GatewaySpec::Url(url) => f.write_str(url),
        }
    }
}

pub fn open_backend(
    spec: &BackendSpec,
    dialect: SchemaDialect,
    allow_network: bool,
) -> Result<Arc<dyn Backend>> {
    match spec {
        BackendSpec::Local { triples, labels } => {
            let store = Store::load_files(dialect, triples, labels.as_deref())
                .with_context(|| format!("loading {}", triples.display()))?;
            Ok(Arc::new(store))
        }
        BackendSpec::Sparql { url } => {
            if !allow_network {
                bail!("the sparql backend contacts {url}; pass --allow-network to permit it");
            }
            let mut cfg = EndpointConfig::new(url.clone(), dialect);
            cfg.min_request_interval = std::time::Duration::from_millis(250);
            Ok(Arc::new(SparqlClient::new(cfg)?))
        }
    }
}

pub struct GatewayOptions<'a> {
    pub model: Option<&'a str>,
    pub api_key_env: &'a str,
    pub concurrency: usize,
    pub allow_network: bool,
}

pub fn open_models(
    spec: &GatewaySpec,
    opts: &GatewayOptions<'_>,
) -> Result<Box<ModelFactory<'static>>> {
    match spec {
        GatewaySpec::Script(path) => {
            if !path.exists() {
                bail!("script path {} does not exist", path.display());
            }
            let path = path.clone();
            Ok(Box::new(
                move |q: &Question| -> Result<Box<dyn ChatModel>, GatewayError> {
                    let file = if path.is_dir() {
                        path.join(format!("{}.json", q.id))
                    } else {
                        path.clone()
                    };
                    Ok(Box::new(ScriptedModel::from_file(&file)?))
                },
            ))
        }
        GatewaySpec::Url(url) => {
            if !opts.allow_network {
                bail!("the gateway contacts {url}; pass --allow-network to permit it");
            }
            let model = opts
                .model
                .context("--model is required with a live gateway")?;
            let mut cfg = GatewayConfig::new(url.clone(), model);
            cfg.api_key = std::env::var(opts.api_key_env).ok();
            cfg.max_in_flight = opts.concurrency.max(1);
            let client: Arc<ChatCompletionsClient> = Arc::new(ChatCompletionsClient::new(cfg)?);
            Ok(Box::new(
                move |_: &Question| -> Result<Box<dyn ChatModel>, GatewayError> {
                    Ok(Box::new(client.clone()))
                },
            ))
        }
    }
}

pub fn load_prompts(
    instructions: Option<&Path>,
    exemplars: Option<&Path>,
    shots: Option<usize>,
    dialect: SchemaDialect,
) -> Result<PromptBundle> {
    let text = match instructions {
        Some(p) => prompt::load_instructions(p)?,
        None => prompt::DEFAULT_INSTRUCTIONS.to_string(),
    };
    let exemplars: Vec<Exemplar> = match exemplars {
        Some(dir) => prompt::load_exemplars(dir)?,
        None => prompt::bundled_exemplars(),
    };
    let shots = shots.unwrap_or(exemplars.len());
    Ok(prompt::build_system_prompt(
        &text, &exemplars, shots, dialect,
    )?)
}
