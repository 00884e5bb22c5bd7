//! revrate: predict star ratings from review text.
//!
//! Subcommands: `stats` summarizes a corpus, `prepare` materializes the
//! train/test split, `evaluate` scores the configured predictors, and
//! `predict` answers for a single (user, item) pair. Everything is driven by
//! a TOML config; a handful of flags override the common knobs.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use revrate::config::{DataFormat, ExperimentConfig};
use revrate::corpus::compute_stats;
use revrate::eval::{
    load_dataset, load_or_build_profiles, prepare_dataset, run_experiment_with_log,
};
use revrate::predictors::{predict, Fallback, PredictorKind};
use revrate::vectorspace::Weighting;
use revrate::{Error, ErrorKind};

#[derive(Parser)]
#[command(
    name = "revrate",
    version,
    about = "Predict star ratings from review text"
)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Flags that override the corresponding config keys.
#[derive(Args, Clone, Default)]
struct Overrides {
    /// Corpus path.
    #[arg(long)]
    dataset: Option<PathBuf>,

    /// Corpus format: auto, snap or jsonl.
    #[arg(long)]
    format: Option<DataFormat>,

    /// Keep only users/items with at least this many reviews.
    #[arg(long)]
    prune_min_ratings: Option<usize>,

    /// Term weighting: tf or tf-idf.
    #[arg(long)]
    weighting: Option<Weighting>,

    /// Fraction of reviews that train the profiles.
    #[arg(long)]
    train_fraction: Option<f64>,

    /// Seed for the train/test shuffle.
    #[arg(long)]
    split_seed: Option<u64>,

    /// Skip text normalization (whitespace tokens only).
    #[arg(long)]
    no_normalize: bool,

    /// Profile snapshot file to reuse between runs.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a corpus without running an experiment.
    Stats(StatsArgs),
    /// Write the prepared train/test split to disk.
    Prepare(PrepareArgs),
    /// Score the configured predictors on the test split.
    Evaluate(EvaluateArgs),
    /// Predict one (user, item) rating.
    Predict(PredictArgs),
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PrepareArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Where train.jsonl, test.jsonl and manifest.json go.
    #[arg(long, default_value = "prepared")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Where report.json, report.txt and predictions.tsv go.
    #[arg(long, default_value = "results")]
    output_dir: PathBuf,
    /// Predictors to score (comma separated), overriding the config.
    #[arg(long, value_delimiter = ',')]
    predictors: Option<Vec<PredictorKind>>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// User id.
    #[arg(long)]
    user: String,
    /// Item id.
    #[arg(long)]
    item: String,
    /// Predictor to use.
    #[arg(long, default_value = "CM")]
    predictor: PredictorKind,
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        let code = err
            .downcast_ref::<Error>()
            .map_or(1, |e| if e.kind() == ErrorKind::Config { 2 } else { 1 });
        std::process::exit(code);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Stats(args) => cmd_stats(cli.config.as_deref(), args),
        Command::Prepare(args) => cmd_prepare(cli.config.as_deref(), args),
        Command::Evaluate(args) => cmd_evaluate(cli.config.as_deref(), args),
        Command::Predict(args) => cmd_predict(cli.config.as_deref(), args),
    }
}

/// Config file plus flag overrides; flags win.
fn load_config(path: Option<&std::path::Path>, ov: &Overrides) -> Result<ExperimentConfig, Error> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &ov.dataset {
        cfg.dataset = d.clone();
    }
    if let Some(f) = ov.format {
        cfg.format = f;
    }
    if let Some(k) = ov.prune_min_ratings {
        cfg.prune_min_ratings = k;
    }
    if let Some(w) = ov.weighting {
        cfg.weighting = w;
    }
    if let Some(f) = ov.train_fraction {
        cfg.split.train_fraction = f;
    }
    if let Some(s) = ov.split_seed {
        cfg.split.seed = s;
    }
    if ov.no_normalize {
        cfg.normalization.enabled = false;
    }
    if let Some(s) = &ov.snapshot {
        cfg.snapshot = Some(s.clone());
    }
    if cfg.dataset.as_os_str().is_empty() {
        return Err(Error::Config(
            "no dataset given; pass --config or --dataset".into(),
        ));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fallback_name(f: Fallback) -> &'static str {
    match f {
        Fallback::None => "none",
        Fallback::UserMean => "user_mean",
        Fallback::ItemMean => "item_mean",
        Fallback::GlobalMean => "global_mean",
    }
}

fn cmd_stats(config: Option<&std::path::Path>, args: StatsArgs) -> anyhow::Result<()> {
    let cfg = load_config(config, &args.overrides)?;
    let loaded = load_dataset(&cfg.dataset, cfg.format)?;
    let stats = compute_stats(&loaded.dataset);
    #[derive(Serialize)]
    struct StatsOut<'a> {
        source: String,
        n_parsed: usize,
        n_parse_errors: usize,
        n_reviews: usize,
        n_users: usize,
        n_items: usize,
        rating_histogram: &'a [usize; 5],
        median_words_per_review: usize,
    }
    let out = StatsOut {
        source: cfg.dataset.display().to_string(),
        n_parsed: loaded.n_parsed,
        n_parse_errors: loaded.n_parse_errors,
        n_reviews: stats.n_reviews,
        n_users: stats.n_users,
        n_items: stats.n_items,
        rating_histogram: &stats.rating_histogram,
        median_words_per_review: stats.median_words_per_review,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("source: {}", out.source);
        println!(
            "reviews: {} ({} records parsed, {} rejected)",
            out.n_reviews, out.n_parsed, out.n_parse_errors
        );
        println!("users: {}   items: {}", out.n_users, out.n_items);
        for (i, n) in out.rating_histogram.iter().enumerate() {
            println!("  {} star: {n}", i + 1);
        }
        println!("median words per review: {}", out.median_words_per_review);
    }
    Ok(())
}

fn cmd_prepare(config: Option<&std::path::Path>, args: PrepareArgs) -> anyhow::Result<()> {
    let cfg = load_config(config, &args.overrides)?;
    let norm = cfg.normalization.resolve()?;
    let prepared = prepare_dataset(&cfg)?;
    let out = &args.output_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    prepared.train.save_jsonl(&out.join("train.jsonl"))?;
    prepared.test.save_jsonl(&out.join("test.jsonl"))?;
    #[derive(Serialize)]
    struct Manifest<'a> {
        config_hash: String,
        train: &'a str,
        test: &'a str,
        summary: &'a revrate::eval::DatasetSummary,
    }
    let manifest = Manifest {
        config_hash: cfg.run_fingerprint(&norm),
        train: "train.jsonl",
        test: "test.jsonl",
        summary: &prepared.summary,
    };
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    println!(
        "wrote {} train / {} test reviews to {}",
        prepared.summary.n_train,
        prepared.summary.n_test,
        out.display()
    );
    Ok(())
}

fn cmd_evaluate(config: Option<&std::path::Path>, args: EvaluateArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(config, &args.overrides)?;
    if let Some(preds) = args.predictors {
        if !preds.is_empty() {
            cfg.predictors = preds;
        }
    }
    let out = &args.output_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pred_path = out.join("predictions.tsv");
    let mut log = std::io::BufWriter::new(
        fs::File::create(&pred_path).with_context(|| format!("creating {}", pred_path.display()))?,
    );
    let report = run_experiment_with_log(&cfg, Some(&mut log))?;
    log.flush()?;
    fs::write(
        out.join("report.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    let table = report.to_table();
    fs::write(out.join("report.txt"), &table)?;
    print!("{table}");
    println!("detail: {}", out.display());
    Ok(())
}

fn cmd_predict(config: Option<&std::path::Path>, args: PredictArgs) -> anyhow::Result<()> {
    let cfg = load_config(config, &args.overrides)?;
    let norm = cfg.normalization.resolve()?;
    let prepared = prepare_dataset(&cfg)?;
    let index = load_or_build_profiles(&cfg, &norm, &prepared.train)?;
    let mut opts = cfg.options.clone();
    opts.weighting = cfg.weighting;
    let p = predict(args.predictor, &args.user, &args.item, &index, &opts);
    println!("predictor: {}", args.predictor);
    println!("user:      {}", args.user);
    println!("item:      {}", args.item);
    println!("predicted: {}", p.value);
    println!("fallback:  {}", fallback_name(p.fallback));
    if let Some(sims) = p.per_rating {
        println!("similarity by star:");
        for (i, s) in sims.iter().enumerate() {
            println!("  {}: {s:.6}", i + 1);
        }
    }
    Ok(())
}
