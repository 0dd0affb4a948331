use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use injdetect_core::config::{CampaignMode, RunConfig};
use injdetect_core::eval::TuningGrid;
use injdetect_core::pipeline::{run_stage, Stage, StageOutput};
use injdetect_core::synth::{synthetic_corpus_jsonl, SYNTH_SEED};
use injdetect_core::{AttackType, Method};

/// Detect injected code in function implementations by clustering
/// AST-path embeddings per function type.
#[derive(Parser)]
#[command(name = "injdetect", version, about)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags that override keys of the config file.
#[derive(Args, Default)]
struct Overrides {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config and $INJDETECT_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Corpus JSONL file.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Number of most common function types to analyze.
    #[arg(long, global = true)]
    top_k: Option<usize>,
    /// Detection method: dbscan or ecod.
    #[arg(long, global = true)]
    method: Option<Method>,
    /// DBSCAN neighborhood radius
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// DBSCAN core-point threshold, counting the point itself
    #[arg(long, global = true)]
    min_samples: Option<usize>,
    /// Embedding dimension.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Hashing seed.
    #[arg(long, global = true)]
    embed_seed: Option<u64>,
    /// Precomputed {id, vector} JSONL used instead of hashed embeddings.
    #[arg(long, global = true)]
    import_embeddings: Option<PathBuf>,
    /// Campaign seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fraction of each type to inject, at most 0.1.
    #[arg(long, global = true)]
    rate: Option<f64>,
    /// Comma-separated attack types.
    #[arg(long, global = true, value_delimiter = ',')]
    attacks: Option<Vec<AttackType>>,
    /// Run one mixed campaign instead of one campaign per attack.
    #[arg(long, global = true)]
    mixed: bool,
    /// Analyze the corpus as is, without injecting anything.
    #[arg(long, global = true)]
    no_campaign: bool,
    /// Largest k for precision@k
    #[arg(long, global = true)]
    k_max: Option<usize>,
    /// Cross-validation folds for tuning
    #[arg(long, global = true)]
    folds: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Load and normalize the corpus; write the summary and type histogram.
    Ingest,
    /// Run the injection campaign(s); write manifests and injected corpora.
    Inject,
    /// Full pipeline: inject, embed, detect, evaluate and project.
    Run,
    /// Detect per function type; write ranked detections.
    Detect,
    /// Detect and write the evaluation report.
    Evaluate,
    /// Cross-validated DBSCAN parameter search.
    Tune(TuneArgs),
    /// Write 2-D PCA projections per function type.
    Project,
    /// Write the built-in synthetic corpus.
    Synth {
        /// Destination file.
        #[arg(long, default_value = "data/synthetic_corpus.jsonl")]
        output: PathBuf,
        #[arg(long, default_value_t = SYNTH_SEED)]
        synth_seed: u64,
    },
}

#[derive(Args)]
struct TuneArgs {
    /// Comma-separated eps values.
    #[arg(long, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    /// Comma-separated min_samples values.
    #[arg(long, value_delimiter = ',')]
    min_samples_grid: Option<Vec<usize>>,
    /// eps 0.2..=1.0 by 0.1 and min_samples 2..=10 (81 cells).
    #[arg(long, conflicts_with_all = ["eps_grid", "min_samples_grid"])]
    full_grid: bool,
}

fn build_config(o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    cfg.apply_env();
    if let Some(v) = &o.out {
        cfg.output.dir = v.clone();
    }
    if let Some(v) = &o.corpus {
        cfg.corpus.path = v.clone();
    }
    if let Some(v) = o.top_k {
        cfg.corpus.top_k = v;
    }
    if let Some(v) = o.method {
        cfg.detection.method = v;
    }
    if let Some(v) = o.eps {
        cfg.detection.eps = v;
    }
    if let Some(v) = o.min_samples {
        cfg.detection.min_samples = v;
    }
    if let Some(v) = o.dim {
        cfg.embedding.dim = v;
    }
    if let Some(v) = o.embed_seed {
        cfg.embedding.seed = v;
    }
    if let Some(v) = &o.import_embeddings {
        cfg.embedding.import_path = Some(v.clone());
    }
    if let Some(v) = o.seed {
        cfg.campaign.seed = v;
    }
    if let Some(v) = o.rate {
        cfg.campaign.rate = v;
    }
    if let Some(v) = &o.attacks {
        cfg.campaign.attacks = v.clone();
    }
    if o.mixed {
        cfg.campaign.mode = CampaignMode::Mixed;
    }
    if o.no_campaign {
        cfg.campaign.enabled = false;
    }
    if let Some(v) = o.k_max {
        cfg.eval.k_max = v;
    }
    if let Some(v) = o.folds {
        cfg.eval.folds = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_tune_args(cfg: &mut RunConfig, args: &TuneArgs) -> Result<()> {
    if args.full_grid {
        cfg.eval.tuning = Some(TuningGrid::default());
        return Ok(());
    }
    if args.eps_grid.is_some() || args.min_samples_grid.is_some() {
        let base = cfg.eval.tuning.clone().unwrap_or_default();
        cfg.eval.tuning = Some(TuningGrid {
            eps: args.eps_grid.clone().unwrap_or(base.eps),
            min_samples: args.min_samples_grid.clone().unwrap_or(base.min_samples),
        });
    }
    match &cfg.eval.tuning {
        None => bail!("no tuning grid: pass --eps-grid/--min-samples-grid, --full-grid, or set [eval.tuning]"),
        Some(grid) if grid.eps.is_empty() || grid.min_samples.is_empty() => bail!("tuning grid is empty"),
        Some(_) => Ok(()),
    }
}

fn report(stage: Stage, out: &StageOutput, cfg: &RunConfig) {
    if let Some(s) = &out.summary {
        println!(
            "corpus: {} records, {} function types ({} analyzed), {} duplicate sources, {} skipped lines",
            s.records,
            s.function_types,
            s.analyzed_types.len(),
            s.duplicate_sources,
            s.skipped_lines
        );
    }
    if let Some(r) = &out.report {
        let k = r.k_max;
        println!(
            "{}: mean precision@{k} = {:.4}, mean AP = {:.4}, mean TPR = {:.4}",
            r.method, r.mean_precision_at_k[&k], r.mean_ap, r.mean_tpr
        );
        match r.spearman.rho {
            Some(rho) => println!("spearman rho (detection rate vs implementations) = {rho:.4}"),
            None => println!("spearman rho undefined (constant input)"),
        }
    }
    if let Some(t) = &out.tuning {
        let b = &t.best;
        println!(
            "tuning: {} cells; best eps={} min_samples={} (outlier precision {:.4}, TPR {:.4}, AP {:.4})",
            t.grid.len(),
            b.eps,
            b.min_samples,
            b.outlier_precision,
            b.tpr,
            b.ap
        );
    }
    if !out.skips.is_empty() {
        eprintln!("{} entries in the skip report", out.skips.len());
    }
    println!(
        "{stage:?}: {} files written to {}",
        out.written.len(),
        cfg.output.dir.display()
    );
}

fn run(cli: Cli) -> Result<()> {
    let stage = match &cli.command {
        Command::Synth { output, synth_seed } => {
            let text = synthetic_corpus_jsonl(*synth_seed);
            injdetect_core::io::write_atomic(output, text.as_bytes())?;
            println!("wrote {} records to {}", text.lines().count(), output.display());
            return Ok(());
        }
        Command::Ingest => Stage::Ingest,
        Command::Inject => Stage::Inject,
        Command::Run => Stage::Run,
        Command::Detect => Stage::Detect,
        Command::Evaluate => Stage::Evaluate,
        Command::Tune(_) => Stage::Tune,
        Command::Project => Stage::Project,
    };
    let mut cfg = build_config(&cli.overrides)?;
    if let Command::Tune(args) = &cli.command {
        apply_tune_args(&mut cfg, args)?;
    }
    let out = run_stage(&cfg, stage)?;
    report(stage, &out, &cfg);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already embed their causes; only print the
            // parts of the chain that add something.
            let mut msg = String::new();
            for cause in e.chain() {
                let text = cause.to_string();
                if !msg.contains(&text) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&text);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
