//! Batch command line. Each subcommand reads files, runs one step of the
//! pipeline and writes its artifact, with the same operations and seeds as
//! the HTTP service.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use cbench_core::assoc::{build_assoc, link_communities, AssocMeasure, Linkage};
use cbench_core::dataset::{export_csv, load_csv, Dataset, Delimiter, DiscretizationMethod};
use cbench_core::decision::{build_diagram, learn_policy, PayoffMethod};
use cbench_core::fit::{fit, FitMethod};
use cbench_core::graph::{export_edgelist, read_arc_list};
use cbench_core::infer::{query, InferenceMethod, Query};
use cbench_core::learn::{
    averaged_network, validate, Algorithm, ModelDocument, StructureSource, ValidationMode,
};
use cbench_core::score::ScoreKind;

use crate::bundle::build_bundle;
use crate::config::{Config, ConfigError};
use crate::pipeline::{learn_structure, preprocess, LearnRequest, PreprocessStep};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] cbench_core::Error),
    #[error("{0}")]
    Service(#[from] crate::error::ApiError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit status: 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "cbench", version, about = "Discrete Bayesian network workbench")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "CBENCH_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Discretize numeric columns and write the dataset as CSV.
    Discretize(DiscretizeArgs),
    /// Pairwise association network, optionally with link communities.
    Assoc(AssocArgs),
    /// Learn a structure, optionally by bootstrap averaging.
    Learn(LearnArgs),
    /// Re-derive the averaged network of a bootstrapped model.
    Threshold(ThresholdArgs),
    /// Fit conditional probability tables for a model's structure.
    Fit(FitArgs),
    /// Posterior distribution of one node.
    Query(QueryArgs),
    /// Held-out log-likelihood loss.
    Validate(ValidateArgs),
    /// Expected payoff of every decision assignment.
    Policy(PolicyArgs),
    /// Write a self-contained dashboard bundle.
    Publish(PublishArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Input CSV file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub delimiter: Option<Delimiter>,
    /// Intervention indicator column holding 1-based column positions
    /// (0 = observational row).
    #[arg(long)]
    pub interventions: Option<String>,
}

#[derive(Args, Debug)]
pub struct DiscretizeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "quantile")]
    pub method: DiscretizationMethod,
    #[arg(long, default_value_t = 3)]
    pub bins: usize,
    /// Initial intervals for Hartemink's method.
    #[arg(long)]
    pub ibreaks: Option<usize>,
    /// Columns to discretize (default: every numeric column).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AssocArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "cramers_v")]
    pub measure: AssocMeasure,
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// Also detect link communities with this linkage.
    #[arg(long)]
    pub linkage: Option<Linkage>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, visible_alias = "algo")]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub score: Option<ScoreKind>,
    /// Imaginary sample size for bde/mbde.
    #[arg(long)]
    pub iss: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub tabu_length: Option<usize>,
    #[arg(long)]
    pub max_parents: Option<usize>,
    /// Significance level of the constraint-based learners.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Seeds both the search and the bootstrap.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Arc list CSV (`from,to`) of forbidden arcs.
    #[arg(long)]
    pub blacklist: Option<PathBuf>,
    /// Arc list CSV (`from,to`) of required arcs.
    #[arg(long)]
    pub whitelist: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    /// Bootstrap iterations; enables bootstrap averaging.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub sample_fraction: Option<f64>,
    /// Keep the full data and restart each iteration from a random graph.
    #[arg(long)]
    pub no_resample: bool,
    #[arg(long, visible_alias = "edge-thr")]
    pub edge_threshold: Option<f64>,
    #[arg(long, visible_alias = "dir-thr")]
    pub direction_threshold: Option<f64>,
    /// Worker threads for bootstrap iterations.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    /// Model document to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, visible_alias = "edge-thr")]
    pub edge_threshold: Option<f64>,
    #[arg(long, visible_alias = "dir-thr")]
    pub direction_threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "mle")]
    pub method: FitMethod,
    #[arg(long, default_value_t = 1.0)]
    pub iss: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub event: String,
    /// Evidence as NODE=LEVEL; repeatable.
    #[arg(long = "evidence", value_parser = parse_pair)]
    pub evidence: Vec<(String, String)>,
    #[arg(long)]
    pub method: Option<InferenceMethod>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Score this model's structure; without it a structure is learned per fold.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, conflicts_with = "holdout")]
    pub folds: Option<usize>,
    /// Fraction of rows held out for a single split.
    #[arg(long)]
    pub holdout: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PolicyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub utility: String,
    /// Payoff as LEVEL=VALUE in [-1, 1]; one per utility level.
    #[arg(long = "payoff", value_parser = parse_pair, required = true)]
    pub payoffs: Vec<(String, String)>,
    /// Decision variable; repeatable.
    #[arg(long = "decision", required = true)]
    pub decisions: Vec<String>,
    #[arg(long)]
    pub method: Option<PayoffMethod>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PublishArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "dataset")]
    pub title: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, env = "CBENCH_ADDR")]
    pub addr: Option<String>,
    /// Async runtime threads (0 = one per core).
    #[arg(long, env = "CBENCH_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, env = "CBENCH_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn write_or_print(out: &mut dyn Write, path: Option<&Path>, bytes: &[u8]) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::File {
            path: p.to_path_buf(),
            source,
        }),
        None => Ok(out.write_all(bytes)?),
    }
}

fn load_data(args: &DataArgs, cfg: &Config) -> CliResult<Dataset> {
    let mut opts = cfg.csv.clone();
    if let Some(d) = args.delimiter {
        opts.delimiter = d;
    }
    let ds = load_csv(read_file(&args.data)?.as_slice(), &opts)?;
    match &args.interventions {
        Some(column) => Ok(preprocess(
            &ds,
            &PreprocessStep::Interventions {
                column: column.clone(),
                mapping: None,
            },
        )?),
        None => Ok(ds),
    }
}

fn load_model(path: &Path) -> CliResult<ModelDocument> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))?;
    Ok(ModelDocument::from_json(&text)?)
}

fn fitted(doc: &ModelDocument) -> CliResult<&cbench_core::fit::FittedBn> {
    doc.fitted
        .as_ref()
        .ok_or_else(|| CliError::Usage("the model has no fitted tables; run `cbench fit` first".into()))
}

fn learn_request(search: &SearchArgs, boot: &BootstrapArgs, cfg: &Config) -> CliResult<LearnRequest> {
    let mut s = cfg.learn.clone();
    if let Some(a) = search.algorithm {
        s.algorithm = a;
    }
    if let Some(k) = search.score {
        s.score.kind = k;
    }
    if let Some(i) = search.iss {
        s.score.iss = i;
    }
    if let Some(r) = search.restarts {
        s.restarts = r;
    }
    if let Some(t) = search.tabu_length {
        s.tabu_length = t;
    }
    if search.max_parents.is_some() {
        s.max_parents = search.max_parents;
    }
    if let Some(a) = search.alpha {
        s.alpha = a;
    }
    if let Some(seed) = search.seed {
        s.seed = seed;
    }
    if let Some(p) = &search.blacklist {
        s.constraints.blacklist = read_arc_list(&read_file(p)?)?.into_iter().collect();
    }
    if let Some(p) = &search.whitelist {
        s.constraints.whitelist = read_arc_list(&read_file(p)?)?.into_iter().collect();
    }
    let mut bootstrap = cfg.bootstrap.clone();
    if let Some(n) = boot.bootstrap {
        bootstrap.get_or_insert_with(Default::default).iterations = n;
    }
    if let Some(b) = &mut bootstrap {
        if let Some(f) = boot.sample_fraction {
            b.sample_fraction = f;
        }
        if boot.no_resample {
            b.resample = false;
        }
        if let Some(t) = boot.edge_threshold {
            b.edge_threshold = t;
        }
        if let Some(t) = boot.direction_threshold {
            b.direction_threshold = t;
        }
        if let Some(w) = boot.workers {
            b.workers = w;
        }
        if let Some(seed) = search.seed {
            b.seed = seed;
        }
        b.validate()?;
    }
    s.validate()?;
    Ok(LearnRequest { search: s, bootstrap })
}

/// Parses `args` (program name first) and runs the command, writing
/// results to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> CliResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            write!(out, "{e}")?;
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let cfg = Config::load_or_default(cli.config.as_deref())?;
    execute(cli.command, &cfg, out)
}

fn execute(command: Command, cfg: &Config, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Discretize(a) => {
            let ds = load_data(&a.data, cfg)?;
            let step = PreprocessStep::Discretize {
                method: a.method,
                bins: a.bins,
                ibreaks: a.ibreaks,
                columns: a.columns,
            };
            let ds = preprocess(&ds, &step)?;
            write_or_print(out, a.out.as_deref(), &export_csv(&ds)?)
        }
        Command::Assoc(a) => {
            let ds = load_data(&a.data, cfg)?;
            let g = build_assoc(&ds, a.measure, a.threshold)?;
            let communities = a.linkage.map(|l| link_communities(&g, l));
            let doc = serde_json::json!({ "network": g, "communities": communities });
            let mut text = serde_json::to_vec_pretty(&doc)?;
            text.push(b'\n');
            write_or_print(out, a.out.as_deref(), &text)
        }
        Command::Learn(a) => {
            let ds = load_data(&a.data, cfg)?;
            let req = learn_request(&a.search, &a.bootstrap, cfg)?;
            let outcome = learn_structure(&ds, &req, None, None)?;
            for w in &outcome.warnings {
                writeln!(out, "warning: {w}")?;
            }
            if let Some(st) = &outcome.strengths {
                writeln!(out, "arc strengths ({} iterations):", st.iterations)?;
                out.write_all(&st.to_csv())?;
                writeln!(out, "\naveraged network:")?;
            }
            out.write_all(&export_edgelist(&outcome.dag))?;
            writeln!(out, "score: {}", outcome.score)?;
            let mut doc = ModelDocument::new(outcome.dag);
            doc.strengths = outcome.strengths;
            doc.search = Some(req.search);
            doc.bootstrap = req.bootstrap;
            if let Some(p) = &a.out {
                write_or_print(out, Some(p), doc.to_json()?.as_bytes())?;
            }
            Ok(())
        }
        Command::Threshold(a) => {
            let mut doc = load_model(&a.model)?;
            let st = doc
                .strengths
                .clone()
                .ok_or_else(|| CliError::Usage("the model has no arc strengths; learn with --bootstrap".into()))?;
            let b = doc.bootstrap.get_or_insert_with(Default::default);
            b.edge_threshold = a.edge_threshold.unwrap_or(b.edge_threshold);
            b.direction_threshold = a.direction_threshold.unwrap_or(b.direction_threshold);
            b.validate()?;
            doc.dag = averaged_network(&st, b.edge_threshold, b.direction_threshold);
            doc.fitted = None;
            out.write_all(&export_edgelist(&doc.dag))?;
            if let Some(p) = &a.out {
                write_or_print(out, Some(p), doc.to_json()?.as_bytes())?;
            }
            Ok(())
        }
        Command::Fit(a) => {
            let ds = load_data(&a.data, cfg)?;
            let mut doc = load_model(&a.model)?;
            doc.fitted = Some(fit(&ds, &doc.dag, a.method, a.iss)?);
            let path = a.out.as_deref().unwrap_or(&a.model);
            write_or_print(out, Some(path), doc.to_json()?.as_bytes())
        }
        Command::Query(a) => {
            let doc = load_model(&a.model)?;
            let q = Query {
                event: a.event,
                evidence: a.evidence.into_iter().collect(),
            };
            let mut opts = cfg.query.clone();
            opts.method = a.method.or(opts.method);
            opts.samples_per_repeat = a.samples.unwrap_or(opts.samples_per_repeat);
            opts.repeats = a.repeats.unwrap_or(opts.repeats);
            opts.seed = a.seed.unwrap_or(opts.seed);
            let r = query(fitted(&doc)?, &q, &opts)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
            Ok(())
        }
        Command::Validate(a) => {
            let ds = load_data(&a.data, cfg)?;
            let source = match &a.model {
                Some(p) => StructureSource::Fixed(load_model(p)?.dag),
                None => StructureSource::Learn(learn_request(&a.search, &BootstrapArgs::none(), cfg)?.search),
            };
            let mode = match (a.folds, a.holdout) {
                (_, Some(fraction)) => ValidationMode::Holdout { fraction },
                (Some(k), None) => ValidationMode::Kfold { k },
                (None, None) => ValidationMode::default(),
            };
            let report = validate(&ds, &source, mode, a.search.seed.unwrap_or(0))?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            Ok(())
        }
        Command::Policy(a) => {
            let doc = load_model(&a.model)?;
            let payoffs = a
                .payoffs
                .iter()
                .map(|(l, v)| {
                    v.parse::<f64>()
                        .map(|x| (l.clone(), x))
                        .map_err(|_| CliError::Usage(format!("payoff for `{l}` is not a number: `{v}`")))
                })
                .collect::<CliResult<BTreeMap<_, _>>>()?;
            let id = build_diagram(fitted(&doc)?, &a.utility, &payoffs, &a.decisions)?;
            let mut opts = cfg.policy.clone();
            opts.method = a.method.or(opts.method);
            opts.mc_samples = a.mc_samples.unwrap_or(opts.mc_samples);
            opts.seed = a.seed.unwrap_or(opts.seed);
            let table = learn_policy(&id, &opts)?;
            write_or_print(out, a.out.as_deref(), &table.to_csv()?)
        }
        Command::Publish(a) => {
            let doc = load_model(&a.model)?;
            let bytes = build_bundle(&a.title, &doc)?;
            write_or_print(out, Some(&a.out), &bytes)
        }
        Command::Serve(a) => {
            let addr = a.addr.unwrap_or_else(|| cfg.serve.addr.clone());
            let data_dir = a.data_dir.unwrap_or_else(|| cfg.serve.data_dir.clone());
            let workers = a.workers.unwrap_or(cfg.serve.workers);
            let mut rt = tokio::runtime::Builder::new_multi_thread();
            rt.enable_all();
            if workers > 0 {
                rt.worker_threads(workers);
            }
            rt.build()?.block_on(crate::api::serve(&addr, &data_dir))?;
            Ok(())
        }
    }
}

impl BootstrapArgs {
    fn none() -> Self {
        BootstrapArgs {
            bootstrap: None,
            sample_fraction: None,
            no_resample: false,
            edge_threshold: None,
            direction_threshold: None,
            workers: None,
        }
    }
}
