//! `expertbench` command line.
//!
//! Subcommands: `convert`, `preprocess`, `synth`, `evaluate`, `report`.
//! Evaluation settings resolve as flags, then `--config` JSON, then
//! defaults. Fitted representations are cached under `$EXPERTBENCH_CACHE`
//! (or `<out>/.cache`), keyed by dataset hash and representation config.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    build_dataset, dataset_fingerprint, generate_synthetic, load_dataset, load_expert_list,
    parse_aminer, preprocess, save_dataset, Dataset, PreprocessConfig, SyntheticConfig,
};
use crate::evalproto::{merge_reports, run_protocol, EvalReport, Protocol, ReportLabels};
use crate::rankers::{FusionRule, PropagationParams, RankerEngine, RankerSpec};
use crate::textrep::{
    fit_representation, load_doc_matrix, parse_stopwords, save_doc_matrix, DocMatrix, LsiInput,
    RepConfig, RepKind, CACHE_FORMAT_VERSION,
};

pub const CACHE_ENV: &str = "EXPERTBENCH_CACHE";

#[derive(Debug, Parser)]
#[command(name = "expertbench", version, about = "Expert-finding evaluation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an AMiner citation dump into the canonical dataset layout.
    Convert(ConvertArgs),
    /// Apply degree and text-length filters to a dataset.
    Preprocess(PreprocessArgs),
    /// Generate a synthetic planted-expert dataset.
    Synth(SynthArgs),
    /// Run an evaluation protocol (or the full grid with --sweep).
    Evaluate(Box<EvaluateArgs>),
    /// Merge report JSON files into summary tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// AMiner dump (line-prefixed format).
    #[arg(long)]
    pub aminer: PathBuf,
    /// JSON map of topic name to expert author names.
    #[arg(long)]
    pub experts: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Exclusive upper bound on documents per author.
    #[arg(long, default_value_t = 100)]
    pub max_docs: usize,
    /// Inclusive lower bound on documents per author.
    #[arg(long, default_value_t = 1)]
    pub min_docs: usize,
    /// Documents must be strictly longer than this many characters.
    #[arg(long, default_value_t = 50)]
    pub min_text_length: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub topics: usize,
    #[arg(long, default_value_t = 5)]
    pub experts_per_topic: usize,
    #[arg(long, default_value_t = 10)]
    pub docs_per_expert: usize,
    #[arg(long, default_value_t = 20)]
    pub noise: usize,
    #[arg(long, default_value_t = 30)]
    pub vocab_per_topic: usize,
    #[arg(long, default_value_t = 60)]
    pub shared_vocab: usize,
    #[arg(long, default_value_t = 40)]
    pub words_per_doc: usize,
    #[arg(long, default_value_t = 0.8)]
    pub topical_fraction: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args, Default)]
pub struct EvaluateArgs {
    /// Dataset directory (canonical layout).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub rep: Option<String>,
    #[arg(long)]
    pub lsi_rank: Option<usize>,
    /// Matrix factorized by LSI: tf or tfidf.
    #[arg(long)]
    pub lsi_input: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ranker: Option<String>,
    #[arg(long)]
    pub fusion: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub min_term_count: Option<u64>,
    #[arg(long)]
    pub max_doc_fraction: Option<f64>,
    #[arg(long)]
    pub phrase_passes: Option<usize>,
    /// Stopword list, one term per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Run every representation × ranker × protocol cell.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON files written by `evaluate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Output directory; markdown goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Values accepted in the `--config` JSON file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub rep: Option<String>,
    pub lsi_rank: Option<usize>,
    pub lsi_input: Option<String>,
    pub seed: Option<u64>,
    pub ranker: Option<String>,
    pub fusion: Option<String>,
    pub eta: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub protocol: Option<String>,
    pub k: Option<usize>,
    pub min_term_count: Option<u64>,
    pub max_doc_fraction: Option<f64>,
    pub phrase_passes: Option<usize>,
    pub stopwords: Option<PathBuf>,
    pub sweep: Option<bool>,
    pub out: Option<PathBuf>,
}

/// Fully resolved evaluation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub rep: RepConfig,
    pub ranker: RankerSpec,
    pub protocol: Protocol,
    pub k: usize,
    pub sweep: bool,
    pub out: PathBuf,
}

pub const DEFAULT_ETA: f64 = 0.5;

impl RunConfig {
    pub fn resolve(args: &EvaluateArgs) -> anyhow::Result<Self> {
        let file: FileConfig = match &args.config {
            Some(p) => {
                let f = File::open(p).with_context(|| format!("opening config {}", p.display()))?;
                serde_json::from_reader(BufReader::new(f))
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        macro_rules! pick {
            ($field:ident) => {
                args.$field.clone().or(file.$field.clone())
            };
        }

        let data = pick!(data).context("--data is required")?;
        let out = pick!(out).context("--out is required")?;

        let mut rep = RepConfig::default();
        if let Some(kind) = pick!(rep) {
            rep.kind = kind.parse()?;
        }
        if let Some(r) = pick!(lsi_rank) {
            rep.lsi_rank = r;
        }
        if let Some(i) = pick!(lsi_input) {
            rep.lsi_input = match i.to_ascii_lowercase().as_str() {
                "tf" => LsiInput::Tf,
                "tfidf" | "tf-idf" => LsiInput::TfIdf,
                other => bail!("invalid configuration: unknown lsi input `{other}`"),
            };
        }
        if let Some(s) = pick!(seed) {
            rep.seed = s;
        }
        if let Some(m) = pick!(min_term_count) {
            rep.vocab.min_term_count = m;
        }
        if let Some(f) = pick!(max_doc_fraction) {
            rep.vocab.max_doc_fraction = f;
        }
        if let Some(p) = pick!(phrase_passes) {
            rep.vocab.phrase_passes = p;
        }
        if let Some(path) = pick!(stopwords) {
            let text = fs::read_to_string(&path)
                .with_context(|| format!("reading stopwords {}", path.display()))?;
            rep.vocab.stopwords = parse_stopwords(&text);
        }
        rep.vocab.validate()?;
        if rep.lsi_rank < 1 {
            bail!("invalid configuration: --lsi-rank must be at least 1");
        }

        let fusion: FusionRule = match pick!(fusion) {
            Some(f) => f.parse()?,
            None => FusionRule::ReciprocalRank,
        };
        let params = PropagationParams {
            eta: pick!(eta).unwrap_or(DEFAULT_ETA),
            tol: pick!(tol).unwrap_or(1e-6),
            max_iters: pick!(max_iters).unwrap_or(1000),
        };
        params.validate()?;
        let ranker = match pick!(ranker).as_deref().unwrap_or("propagation") {
            "panoptic" => RankerSpec::Panoptic,
            "vote" => RankerSpec::Vote { fusion },
            "propagation" => RankerSpec::Propagation(params),
            other => bail!("invalid configuration: unknown ranker `{other}`"),
        };
        let protocol = match pick!(protocol) {
            Some(p) => p.parse()?,
            None => Protocol::Topic,
        };
        let k = pick!(k).unwrap_or(10);
        if k == 0 {
            bail!("invalid configuration: --k must be at least 1");
        }
        Ok(RunConfig {
            data,
            rep,
            ranker,
            protocol,
            k,
            sweep: args.sweep || file.sweep.unwrap_or(false),
            out,
        })
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Convert(a) => cmd_convert(&a).map(|_| ()),
        Command::Preprocess(a) => cmd_preprocess(&a).map(|_| ()),
        Command::Synth(a) => cmd_synth(&a).map(|_| ()),
        Command::Evaluate(a) => cmd_evaluate(&RunConfig::resolve(&a)?).map(|_| ()),
        Command::Report(a) => cmd_report(&a),
    }
}

pub fn cmd_convert(args: &ConvertArgs) -> anyhow::Result<Dataset> {
    let file = File::open(&args.aminer)
        .with_context(|| format!("opening dump {}", args.aminer.display()))?;
    let parsed = parse_aminer(BufReader::new(file))
        .with_context(|| format!("reading dump {}", args.aminer.display()))?;
    let experts = match &args.experts {
        Some(p) => load_expert_list(p)?,
        None => Default::default(),
    };
    let (dataset, report) = build_dataset(&parsed.records, &experts)?;
    save_dataset(&dataset, &args.out)?;
    eprintln!(
        "records: {}  rejected: {}  candidates: {}  documents: {}  edges: {}  dropped experts: {}",
        parsed.records.len(),
        parsed.rejected,
        dataset.num_candidates(),
        dataset.num_documents(),
        dataset.edges().len(),
        report.dropped_experts.len()
    );
    for topic in &report.empty_topics {
        eprintln!("warning: topic `{topic}` has no resolvable experts");
    }
    Ok(dataset)
}

pub fn cmd_preprocess(args: &PreprocessArgs) -> anyhow::Result<Dataset> {
    let config = PreprocessConfig {
        max_docs_per_author: args.max_docs,
        min_docs_per_author: args.min_docs,
        min_text_length: args.min_text_length,
    };
    let input = load_dataset(&args.input)?;
    let output = preprocess(&input, &config)?;
    save_dataset(&output, &args.out)?;
    eprintln!(
        "candidates: {} -> {}  documents: {} -> {}  experts: {} -> {}",
        input.num_candidates(),
        output.num_candidates(),
        input.num_documents(),
        output.num_documents(),
        input.experts_all().len(),
        output.experts_all().len()
    );
    Ok(output)
}

pub fn cmd_synth(args: &SynthArgs) -> anyhow::Result<Dataset> {
    let config = SyntheticConfig {
        num_topics: args.topics,
        experts_per_topic: args.experts_per_topic,
        docs_per_expert: args.docs_per_expert,
        noise_candidates: args.noise,
        vocab_per_topic: args.vocab_per_topic,
        shared_vocab: args.shared_vocab,
        words_per_doc: args.words_per_doc,
        topical_fraction: args.topical_fraction,
        rng_seed: args.seed,
    };
    let dataset = generate_synthetic(&config)?;
    save_dataset(&dataset, &args.out)?;
    eprintln!(
        "candidates: {}  documents: {}  topics: {}",
        dataset.num_candidates(),
        dataset.num_documents(),
        dataset.topics().len()
    );
    Ok(dataset)
}

/// Rankers of the full grid: P@noptic, RR voting, propagation at η = 0.1
/// and η = 0.5.
pub fn sweep_rankers(base: &PropagationParams) -> Vec<RankerSpec> {
    vec![
        RankerSpec::Panoptic,
        RankerSpec::Vote {
            fusion: FusionRule::ReciprocalRank,
        },
        RankerSpec::Propagation(PropagationParams { eta: 0.1, ..*base }),
        RankerSpec::Propagation(PropagationParams { eta: 0.5, ..*base }),
    ]
}

fn cache_dir(out: &Path) -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| out.join(".cache"))
}

/// Loads the representation from cache or fits and stores it.
pub fn fitted_representation(
    dataset: &Dataset,
    fingerprint: &str,
    rep: &RepConfig,
    cache: &Path,
) -> anyhow::Result<Arc<DocMatrix>> {
    let mut hasher = Sha256::new();
    hasher.update(fingerprint.as_bytes());
    hasher.update(serde_json::to_vec(rep)?);
    hasher.update(CACHE_FORMAT_VERSION.to_le_bytes());
    let key = hex::encode(hasher.finalize());
    let path = cache.join(format!("{}-{}.bin", rep.kind, &key[..16]));
    match load_doc_matrix(&path, &key) {
        Ok(Some(m)) => return Ok(Arc::new(m)),
        Ok(None) => {}
        Err(e) => eprintln!("warning: ignoring unreadable cache entry: {e}"),
    }
    let texts: Vec<&str> = dataset.documents().iter().map(|d| d.text.as_str()).collect();
    let matrix = fit_representation(&texts, rep)?;
    save_doc_matrix(&matrix, &key, &path)?;
    Ok(Arc::new(matrix))
}

/// Writes via a temporary sibling and rename.
fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let mut f = File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(contents)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn report_stem(report: &EvalReport) -> String {
    format!("{}__{}__{}", report.protocol, report.ranker, report.representation)
}

fn write_report(report: &EvalReport, out: &Path) -> anyhow::Result<()> {
    let stem = report_stem(report);
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    write_atomic(&out.join(format!("{stem}.json")), json.as_bytes())?;
    write_atomic(&out.join(format!("{stem}.csv")), report.summary_csv().as_bytes())?;
    write_atomic(&out.join(format!("{stem}.roc.jsonl")), report.roc_jsonl().as_bytes())?;
    Ok(())
}

fn write_tables(reports: &[EvalReport], out: &Path) -> anyhow::Result<()> {
    for protocol in [Protocol::Topic, Protocol::Document] {
        let subset: Vec<EvalReport> = reports
            .iter()
            .filter(|r| r.protocol == protocol)
            .cloned()
            .collect();
        if subset.is_empty() {
            continue;
        }
        let table = merge_reports(&subset)?;
        write_atomic(&out.join(format!("table_{protocol}.csv")), table.to_csv().as_bytes())?;
        write_atomic(&out.join(format!("table_{protocol}.md")), table.to_markdown().as_bytes())?;
    }
    Ok(())
}

/// Runs one cell, or the whole grid when `config.sweep` is set, writing
/// every report under `config.out`.
pub fn cmd_evaluate(config: &RunConfig) -> anyhow::Result<Vec<EvalReport>> {
    let dataset = load_dataset(&config.data)?;
    fs::create_dir_all(&config.out)
        .with_context(|| format!("creating {}", config.out.display()))?;
    let fingerprint = dataset_fingerprint(&dataset);
    let cache = cache_dir(&config.out);
    let dataset = Arc::new(dataset);

    let (reps, rankers, protocols) = if config.sweep {
        let base = match config.ranker {
            RankerSpec::Propagation(p) => p,
            _ => PropagationParams::default(),
        };
        (
            RepKind::ALL.to_vec(),
            sweep_rankers(&base),
            vec![Protocol::Topic, Protocol::Document],
        )
    } else {
        (vec![config.rep.kind], vec![config.ranker], vec![config.protocol])
    };

    let mut reports = Vec::new();
    for kind in reps {
        let rep_config = RepConfig {
            kind,
            ..config.rep.clone()
        };
        let matrix = fitted_representation(&dataset, &fingerprint, &rep_config, &cache)?;
        for &spec in &rankers {
            let engine = RankerEngine::new(dataset.clone(), matrix.clone(), spec)?;
            let labels = ReportLabels {
                ranker: spec.label(),
                representation: kind.to_string(),
            };
            for &protocol in &protocols {
                let report = run_protocol(protocol, &dataset, &engine, config.k, &labels);
                eprintln!(
                    "{}: {} queries{}",
                    report_stem(&report),
                    report.queries.len(),
                    if report.non_converged > 0 {
                        format!(", {} non-converged", report.non_converged)
                    } else {
                        String::new()
                    }
                );
                write_report(&report, &config.out)?;
                reports.push(report);
            }
        }
    }
    if config.sweep {
        write_tables(&reports, &config.out)?;
    }
    Ok(reports)
}

pub fn cmd_report(args: &ReportArgs) -> anyhow::Result<()> {
    let reports = args
        .reports
        .iter()
        .map(|p| {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            serde_json::from_reader(BufReader::new(f))
                .with_context(|| format!("parsing report {}", p.display()))
        })
        .collect::<anyhow::Result<Vec<EvalReport>>>()?;
    let table = merge_reports(&reports)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let name = format!("table_{}", table.protocol);
            write_atomic(&dir.join(format!("{name}.csv")), table.to_csv().as_bytes())?;
            write_atomic(&dir.join(format!("{name}.md")), table.to_markdown().as_bytes())?;
        }
        None => print!("{}", table.to_markdown()),
    }
    Ok(())
}
