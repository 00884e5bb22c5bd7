//! Experiment runner: load + prepare a corpus, build profiles from the
//! training side, score every test pair with every requested predictor, and
//! report MAE/RMSE per predictor.
//!
//! The runner is deliberately timing-free and runs all floating-point
//! reductions in fixed orders, so the same config and corpus produce a
//! byte-identical report.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{fingerprint, DataFormat, ExperimentConfig, SampleStage};
use crate::corpus::{
    load_snap, prune_min_ratings, split_train_test, stratified_sample, Dataset,
};
use crate::error::{Error, Result};
use crate::predictors::{predict, Fallback, PredictorKind};
use crate::profiles::{build_profiles, load_snapshot, save_snapshot, ProfileIndex};
use crate::vectorspace::Weighting;

/// Mean absolute error over (predicted, actual) pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Data("cannot score an empty prediction set".into()));
    }
    let sum: f64 = pairs.iter().map(|(p, a)| (p - a).abs()).sum();
    Ok(sum / pairs.len() as f64)
}

/// Root mean squared error over (predicted, actual) pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Data("cannot score an empty prediction set".into()));
    }
    let sum: f64 = pairs.iter().map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((sum / pairs.len() as f64).sqrt())
}

/// How often each fallback fired while scoring one predictor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackCounts {
    pub none: usize,
    pub user_mean: usize,
    pub item_mean: usize,
    pub global_mean: usize,
}

impl FallbackCounts {
    fn bump(&mut self, f: Fallback) {
        match f {
            Fallback::None => self.none += 1,
            Fallback::UserMean => self.user_mean += 1,
            Fallback::ItemMean => self.item_mean += 1,
            Fallback::GlobalMean => self.global_mean += 1,
        }
    }
}

/// One scored predictor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub predictor: PredictorKind,
    pub mae: f64,
    pub rmse: f64,
    pub n_predictions: usize,
    pub fallbacks: FallbackCounts,
}

/// Corpus bookkeeping for the report header.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: String,
    pub n_parsed: usize,
    pub n_parse_errors: usize,
    pub n_after_dedup: usize,
    pub n_after_prune: Option<usize>,
    pub n_after_sample: Option<usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub provenance: Vec<String>,
}

/// Full evaluation result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: DatasetSummary,
    pub config_hash: String,
    pub weighting: Weighting,
    pub normalization_enabled: bool,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    /// Plain-text table for terminals and report files.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let d = &self.dataset;
        out.push_str(&format!("dataset: {}\n", d.source));
        out.push_str(&format!(
            "reviews: {} parsed, {} rejected, {} after dedup",
            d.n_parsed, d.n_parse_errors, d.n_after_dedup
        ));
        if let Some(n) = d.n_after_prune {
            out.push_str(&format!(", {n} after prune"));
        }
        if let Some(n) = d.n_after_sample {
            out.push_str(&format!(", {n} after sample"));
        }
        out.push_str(&format!("\nsplit: {} train / {} test\n", d.n_train, d.n_test));
        out.push_str(&format!(
            "weighting: {}   normalization: {}   config: {}\n\n",
            self.weighting,
            if self.normalization_enabled { "on" } else { "off" },
            &self.config_hash[..12.min(self.config_hash.len())]
        ));
        out.push_str(&format!(
            "{:<12} {:>7} {:>9} {:>9}   {}\n",
            "predictor", "n", "mae", "rmse", "fallbacks (user/item/global)"
        ));
        for row in &self.rows {
            let f = row.fallbacks;
            out.push_str(&format!(
                "{:<12} {:>7} {:>9.4} {:>9.4}   {}/{}/{}\n",
                row.predictor.to_string(),
                row.n_predictions,
                row.mae,
                row.rmse,
                f.user_mean,
                f.item_mean,
                f.global_mean
            ));
        }
        out
    }
}

/// A parsed corpus plus parse bookkeeping.
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub n_parsed: usize,
    pub n_parse_errors: usize,
}

/// Load a corpus in the given (or sniffed) format and drop duplicate
/// (user, item) pairs.
pub fn load_dataset(path: &Path, format: DataFormat) -> Result<LoadedDataset> {
    let format = match format {
        DataFormat::Auto => {
            let is_jsonl = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("jsonl"));
            if is_jsonl {
                DataFormat::Jsonl
            } else {
                DataFormat::Snap
            }
        }
        other => other,
    };
    match format {
        DataFormat::Jsonl => {
            let dataset = Dataset::load_jsonl(path)?;
            Ok(LoadedDataset {
                n_parsed: dataset.len(),
                n_parse_errors: 0,
                dataset,
            })
        }
        _ => {
            let outcome = load_snap(path)?;
            for err in &outcome.errors {
                log::warn!("{}: skipped record: {err}", path.display());
            }
            Ok(LoadedDataset {
                n_parsed: outcome.reviews.len(),
                n_parse_errors: outcome.errors.len(),
                dataset: Dataset::from_reviews(outcome.reviews),
            })
        }
    }
}

fn fallback_name(f: Fallback) -> &'static str {
    match f {
        Fallback::None => "none",
        Fallback::UserMean => "user_mean",
        Fallback::ItemMean => "item_mean",
        Fallback::GlobalMean => "global_mean",
    }
}

fn log_io(e: std::io::Error) -> Error {
    Error::io("<prediction log>", e)
}

/// The corpus after every preparation stage, ready to evaluate.
#[derive(Debug)]
pub struct PreparedData {
    pub train: Dataset,
    pub test: Dataset,
    pub summary: DatasetSummary,
}

/// Load, dedup, prune, sample and split the corpus exactly as `cfg` says.
pub fn prepare_dataset(cfg: &ExperimentConfig) -> Result<PreparedData> {
    cfg.validate()?;
    let loaded = load_dataset(&cfg.dataset, cfg.format)?;
    let n_parsed = loaded.n_parsed;
    let n_parse_errors = loaded.n_parse_errors;
    let mut ds = loaded.dataset;
    let n_after_dedup = ds.len();

    // Pruning and sampling, in the configured order.
    let n_after_prune;
    let mut n_after_sample = None;
    let do_prune = |ds: &Dataset| -> Dataset { prune_min_ratings(ds, cfg.prune_min_ratings) };
    match &cfg.sample {
        Some(sample) if sample.stage == SampleStage::PrePrune => {
            ds = stratified_sample(&ds, sample.n, &sample.distribution, sample.seed)?;
            n_after_sample = Some(ds.len());
            ds = do_prune(&ds);
            n_after_prune = Some(ds.len());
        }
        Some(sample) => {
            ds = do_prune(&ds);
            n_after_prune = Some(ds.len());
            ds = stratified_sample(&ds, sample.n, &sample.distribution, sample.seed)?;
            n_after_sample = Some(ds.len());
        }
        None => {
            ds = do_prune(&ds);
            n_after_prune = Some(ds.len());
        }
    }

    let (train, test) = split_train_test(&ds, cfg.split.train_fraction, cfg.split.seed);
    if train.is_empty() || test.is_empty() {
        return Err(Error::Data(format!(
            "split produced {} train / {} test reviews; not enough data to evaluate",
            train.len(),
            test.len()
        )));
    }
    let summary = DatasetSummary {
        source: cfg.dataset.display().to_string(),
        n_parsed,
        n_parse_errors,
        n_after_dedup,
        n_after_prune,
        n_after_sample,
        n_train: train.len(),
        n_test: test.len(),
        provenance: train.provenance().to_vec(),
    };
    Ok(PreparedData {
        train,
        test,
        summary,
    })
}

/// Reuse the configured profile snapshot when its key still matches the
/// stages that shaped the training data; build (and save) otherwise.
pub fn load_or_build_profiles(
    cfg: &ExperimentConfig,
    norm: &crate::textnorm::NormConfig,
    train: &Dataset,
) -> Result<ProfileIndex> {
    let profile_key = fingerprint(&(
        &cfg.dataset,
        cfg.format,
        cfg.prune_min_ratings,
        &cfg.sample,
        &cfg.split,
        norm,
    ));
    match &cfg.snapshot {
        Some(path) => match load_snapshot(path, &profile_key)? {
            Some(index) => Ok(index),
            None => {
                let mut index = build_profiles(train, norm)?;
                index.config_hash = profile_key;
                save_snapshot(&index, path)?;
                Ok(index)
            }
        },
        None => build_profiles(train, norm),
    }
}

/// Run the full experiment described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvalReport> {
    run_experiment_with_log(cfg, None)
}

/// Like [`run_experiment`], optionally streaming one tab-separated line per
/// (predictor, test pair) to `log`.
pub fn run_experiment_with_log(
    cfg: &ExperimentConfig,
    mut log: Option<&mut dyn Write>,
) -> Result<EvalReport> {
    let norm = cfg.normalization.resolve()?;
    let prepared = prepare_dataset(cfg)?;
    let index = load_or_build_profiles(cfg, &norm, &prepared.train)?;

    let mut opts = cfg.options.clone();
    opts.weighting = cfg.weighting;

    let pairs: Vec<(&str, &str, u8)> = prepared
        .test
        .reviews()
        .iter()
        .map(|r| (r.user_id.as_str(), r.item_id.as_str(), r.rating))
        .collect();

    if let Some(w) = log.as_deref_mut() {
        writeln!(w, "predictor\tuser\titem\tpredicted\tactual\tfallback").map_err(log_io)?;
    }

    let mut rows = Vec::with_capacity(cfg.predictors.len());
    for kind in &cfg.predictors {
        let predictions: Vec<_> = pairs
            .par_iter()
            .map(|(u, i, _)| predict(*kind, u, i, &index, &opts))
            .collect();
        let mut fallbacks = FallbackCounts::default();
        let mut scored = Vec::with_capacity(pairs.len());
        for (p, (u, i, actual)) in predictions.iter().zip(&pairs) {
            fallbacks.bump(p.fallback);
            scored.push((p.value, *actual as f64));
            if let Some(w) = log.as_deref_mut() {
                writeln!(
                    w,
                    "{kind}\t{u}\t{i}\t{}\t{actual}\t{}",
                    p.value,
                    fallback_name(p.fallback)
                )
                .map_err(log_io)?;
            }
        }
        rows.push(ReportRow {
            predictor: *kind,
            mae: mae(&scored)?,
            rmse: rmse(&scored)?,
            n_predictions: scored.len(),
            fallbacks,
        });
    }

    Ok(EvalReport {
        dataset: prepared.summary,
        config_hash: cfg.run_fingerprint(&norm),
        weighting: cfg.weighting,
        normalization_enabled: cfg.normalization.enabled,
        rows,
    })
}
