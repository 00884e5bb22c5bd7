//! Corpus handling: the multi-line `key: value` review interchange format,
//! de-duplication, k-core pruning, stratified sampling, train/test splits,
//! and summary statistics. Sampling and splitting are seeded and reproduce
//! bit-for-bit.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write as IoWrite};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One product review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub user_id: String,
    pub item_id: String,
    /// Star rating, 1-5.
    pub rating: u8,
    /// (found helpful, total votes).
    pub helpfulness: (u32, u32),
    pub timestamp: i64,
    pub profile_name: String,
    pub summary: String,
    pub text: String,
}

/// A malformed record in an otherwise readable stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// 1-based line number where the problem was detected.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RecordError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Result of scanning a review stream: good records plus per-record errors.
/// A bad record never aborts the scan.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub reviews: Vec<Review>,
    pub errors: Vec<RecordError>,
}

const KEY_ITEM: &str = "product/productId";
const KEY_USER: &str = "review/userId";
const KEY_PROFILE: &str = "review/profileName";
const KEY_HELPFULNESS: &str = "review/helpfulness";
const KEY_SCORE: &str = "review/score";
const KEY_TIME: &str = "review/time";
const KEY_SUMMARY: &str = "review/summary";
const KEY_TEXT: &str = "review/text";

/// Parse the blank-line-separated `key: value` review format. Invalid UTF-8
/// is replaced, unknown keys are ignored, a repeated key keeps its last
/// value. Only I/O failures return `Err`; malformed records are collected.
pub fn parse_snap_stream<R: Read>(reader: R) -> std::io::Result<ParseOutcome> {
    let mut br = BufReader::new(reader);
    let mut outcome = ParseOutcome::default();
    let mut record = RecordBuilder::default();
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        let n = br.read_until(b'\n', &mut buf)?;
        if n == 0 {
            record.flush(&mut outcome);
            return Ok(outcome);
        }
        line_no += 1;
        let line = String::from_utf8_lossy(&buf);
        let line = line.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            record.flush(&mut outcome);
            continue;
        }
        record.add_line(line_no, line);
    }
}

#[derive(Default)]
struct RecordBuilder {
    start_line: usize,
    // key -> (line where it appeared, value)
    fields: HashMap<String, (usize, String)>,
    error: Option<RecordError>,
    seen_any: bool,
}

impl RecordBuilder {
    fn add_line(&mut self, line_no: usize, line: &str) {
        if !self.seen_any {
            self.seen_any = true;
            self.start_line = line_no;
        }
        match line.split_once(':') {
            Some((key, value)) => {
                let value = value.strip_prefix(' ').unwrap_or(value);
                self.fields
                    .insert(key.trim().to_string(), (line_no, value.to_string()));
            }
            None => {
                if self.error.is_none() {
                    self.error = Some(RecordError {
                        line: line_no,
                        message: format!("expected 'key: value', got {line:?}"),
                    });
                }
            }
        }
    }

    fn flush(&mut self, outcome: &mut ParseOutcome) {
        if !self.seen_any {
            return;
        }
        let built = self.build();
        match built {
            Ok(review) => outcome.reviews.push(review),
            Err(e) => outcome.errors.push(e),
        }
        *self = RecordBuilder::default();
    }

    fn build(&mut self) -> std::result::Result<Review, RecordError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        let start = self.start_line;
        let mut take = |key: &str| self.fields.remove(key);
        let fail = |line: usize, message: String| RecordError { line, message };

        let (_, item_id) = take(KEY_ITEM)
            .ok_or_else(|| fail(start, format!("missing {KEY_ITEM}")))?;
        let (_, user_id) = take(KEY_USER)
            .ok_or_else(|| fail(start, format!("missing {KEY_USER}")))?;
        if item_id.trim().is_empty() {
            return Err(fail(start, format!("empty {KEY_ITEM}")));
        }
        if user_id.trim().is_empty() {
            return Err(fail(start, format!("empty {KEY_USER}")));
        }

        let (score_line, score_raw) = take(KEY_SCORE)
            .ok_or_else(|| fail(start, format!("missing {KEY_SCORE}")))?;
        let score: f64 = score_raw
            .trim()
            .parse()
            .map_err(|_| fail(score_line, format!("unparseable score {score_raw:?}")))?;
        if !score.is_finite() || score.fract() != 0.0 || !(1.0..=5.0).contains(&score) {
            return Err(fail(
                score_line,
                format!("score {score_raw:?} is not a whole star in 1-5"),
            ));
        }

        let (_, text) = take(KEY_TEXT)
            .ok_or_else(|| fail(start, format!("missing {KEY_TEXT}")))?;

        let helpfulness = match take(KEY_HELPFULNESS) {
            None => (0, 0),
            Some((line, raw)) => {
                let parsed = raw.trim().split_once('/').and_then(|(a, b)| {
                    Some((a.trim().parse::<u32>().ok()?, b.trim().parse::<u32>().ok()?))
                });
                match parsed {
                    Some((yes, total)) if yes <= total => (yes, total),
                    Some(_) => {
                        return Err(fail(
                            line,
                            format!("helpfulness {raw:?} has more helpful votes than votes"),
                        ))
                    }
                    None => {
                        return Err(fail(line, format!("unparseable helpfulness {raw:?}")))
                    }
                }
            }
        };

        let timestamp = match take(KEY_TIME) {
            None => 0,
            Some((line, raw)) => raw
                .trim()
                .parse()
                .map_err(|_| fail(line, format!("unparseable time {raw:?}")))?,
        };

        let profile_name = take(KEY_PROFILE).map(|(_, v)| v).unwrap_or_default();
        let summary = take(KEY_SUMMARY).map(|(_, v)| v).unwrap_or_default();

        Ok(Review {
            user_id,
            item_id,
            rating: score as u8,
            helpfulness,
            timestamp,
            profile_name,
            summary,
            text,
        })
    }
}

/// Write reviews in the same `key: value` format `parse_snap_stream` reads.
/// Embedded newlines in free-text fields become spaces so the framing stays
/// intact.
pub fn write_snap<W: IoWrite>(w: &mut W, reviews: &[Review]) -> std::io::Result<()> {
    let one_line = |s: &str| s.replace(['\n', '\r'], " ");
    for r in reviews {
        writeln!(w, "{KEY_ITEM}: {}", one_line(&r.item_id))?;
        writeln!(w, "{KEY_USER}: {}", one_line(&r.user_id))?;
        writeln!(w, "{KEY_PROFILE}: {}", one_line(&r.profile_name))?;
        writeln!(w, "{KEY_HELPFULNESS}: {}/{}", r.helpfulness.0, r.helpfulness.1)?;
        writeln!(w, "{KEY_SCORE}: {}.0", r.rating)?;
        writeln!(w, "{KEY_TIME}: {}", r.timestamp)?;
        writeln!(w, "{KEY_SUMMARY}: {}", one_line(&r.summary))?;
        writeln!(w, "{KEY_TEXT}: {}", one_line(&r.text))?;
        writeln!(w)?;
    }
    Ok(())
}

/// Parse a review file, wrapping I/O failures with the path.
pub fn load_snap(path: &Path) -> Result<ParseOutcome> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_snap_stream(file).map_err(|e| Error::io(path, e))
}

/// An ordered collection of de-duplicated reviews plus a log of how it was
/// produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    reviews: Vec<Review>,
    provenance: Vec<String>,
}

impl Dataset {
    /// Build a dataset, keeping one review per (user, item): the one with
    /// the latest timestamp, ties going to the later stream position.
    pub fn from_reviews(reviews: Vec<Review>) -> Dataset {
        let n_in = reviews.len();
        let mut best: HashMap<(String, String), usize> = HashMap::new();
        for (idx, r) in reviews.iter().enumerate() {
            let key = (r.user_id.clone(), r.item_id.clone());
            match best.entry(key) {
                std::collections::hash_map::Entry::Occupied(mut e) => {
                    if r.timestamp >= reviews[*e.get()].timestamp {
                        e.insert(idx);
                    }
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(idx);
                }
            }
        }
        let mut keep = vec![false; reviews.len()];
        for idx in best.into_values() {
            keep[idx] = true;
        }
        let reviews: Vec<Review> = reviews
            .into_iter()
            .zip(&keep)
            .filter_map(|(r, k)| k.then_some(r))
            .collect();
        let provenance = vec![format!(
            "ingest: {} reviews in, {} duplicates dropped",
            n_in,
            n_in - reviews.len()
        )];
        Dataset {
            reviews,
            provenance,
        }
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    /// Human-readable log of every operation that shaped this dataset.
    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    fn derive(&self, reviews: Vec<Review>, step: String) -> Dataset {
        let mut provenance = self.provenance.clone();
        provenance.push(step);
        Dataset {
            reviews,
            provenance,
        }
    }

    /// Save one JSON review per line.
    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for r in &self.reviews {
            serde_json::to_writer(&mut out, r).expect("review serializes");
            out.push(b'\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Load a JSONL review file written by [`Dataset::save_jsonl`].
    pub fn load_jsonl(path: &Path) -> Result<Dataset> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut reviews = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: Review = serde_json::from_str(line).map_err(|e| {
                Error::Data(format!("{}:{}: bad review record: {e}", path.display(), idx + 1))
            })?;
            reviews.push(r);
        }
        let mut ds = Dataset::from_reviews(reviews);
        ds.provenance = vec![format!("loaded {} reviews from {}", ds.len(), path.display())];
        Ok(ds)
    }
}

/// Repeatedly drop reviews whose user or item has fewer than `k` remaining
/// reviews, until every survivor's user and item both have at least `k`.
pub fn prune_min_ratings(ds: &Dataset, k: usize) -> Dataset {
    let reviews = ds.reviews();
    let mut keep = vec![true; reviews.len()];
    loop {
        let mut user_count: HashMap<&str, usize> = HashMap::new();
        let mut item_count: HashMap<&str, usize> = HashMap::new();
        for (r, _) in reviews.iter().zip(&keep).filter(|(_, k)| **k) {
            *user_count.entry(r.user_id.as_str()).or_insert(0) += 1;
            *item_count.entry(r.item_id.as_str()).or_insert(0) += 1;
        }
        let mut changed = false;
        for (r, flag) in reviews.iter().zip(keep.iter_mut()) {
            if *flag && (user_count[r.user_id.as_str()] < k || item_count[r.item_id.as_str()] < k)
            {
                *flag = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let kept: Vec<Review> = reviews
        .iter()
        .zip(&keep)
        .filter_map(|(r, k)| k.then(|| r.clone()))
        .collect();
    let step = format!("prune(min_ratings={k}): {} -> {} reviews", reviews.len(), kept.len());
    ds.derive(kept, step)
}

/// Draw `n` reviews whose star histogram matches `dist` (proportions for
/// stars 1-5) via largest-remainder apportionment, selecting uniformly
/// without replacement inside each star. Fails if any star lacks enough
/// reviews; the same seed always returns the same subset.
pub fn stratified_sample(ds: &Dataset, n: usize, dist: &[f64; 5], seed: u64) -> Result<Dataset> {
    let sum: f64 = dist.iter().sum();
    if dist.iter().any(|p| *p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "star distribution must be non-negative and sum to 1, got {dist:?}"
        )));
    }

    let mut by_star: [Vec<usize>; 5] = Default::default();
    for (idx, r) in ds.reviews().iter().enumerate() {
        by_star[(r.rating - 1) as usize].push(idx);
    }

    // Integer quotas: floors first, then the remaining few go to the largest
    // fractional parts (ties toward lower stars). The epsilon keeps an
    // exactly-integral quota from drifting across the floor boundary.
    let mut counts = [0usize; 5];
    let mut fracs = [0f64; 5];
    for star in 0..5 {
        let quota = n as f64 * dist[star];
        let need = (quota - 1e-9).ceil().max(0.0) as usize;
        if need > by_star[star].len() {
            return Err(Error::InfeasibleSample {
                star: star as u8 + 1,
                needed: need,
                available: by_star[star].len(),
            });
        }
        counts[star] = (quota + 1e-9).floor() as usize;
        fracs[star] = (quota - counts[star] as f64).max(0.0);
    }
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|a, b| fracs[*b].partial_cmp(&fracs[*a]).unwrap().then(a.cmp(b)));
    let mut remaining = n.saturating_sub(counts.iter().sum::<usize>());
    while remaining > 0 {
        let mut assigned = false;
        for &star in &order {
            if remaining == 0 {
                break;
            }
            if counts[star] < by_star[star].len() {
                counts[star] += 1;
                remaining -= 1;
                assigned = true;
            }
        }
        if !assigned {
            // Total capacity was exhausted; per-star checks make this
            // unreachable, but fail loudly rather than loop.
            return Err(Error::Data(format!(
                "cannot sample {n} reviews from {}",
                ds.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selected = Vec::with_capacity(n);
    for star in 0..5 {
        let pool = &by_star[star];
        for pick in rand::seq::index::sample(&mut rng, pool.len(), counts[star]) {
            selected.push(pool[pick]);
        }
    }
    selected.sort_unstable();
    let reviews: Vec<Review> = selected.iter().map(|&i| ds.reviews()[i].clone()).collect();
    let step = format!(
        "sample(n={n}, seed={seed}): per-star counts {counts:?}"
    );
    Ok(ds.derive(reviews, step))
}

/// Split into train and test by a seeded shuffle. The train side gets
/// `round(fraction * len)` reviews; both sides keep the original order.
pub fn split_train_test(ds: &Dataset, fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let n = ds.len();
    let n_train = ((fraction * n as f64).round() as usize).min(n);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut train_idx = indices[..n_train].to_vec();
    let mut test_idx = indices[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let pick = |idx: &[usize]| -> Vec<Review> {
        idx.iter().map(|&i| ds.reviews()[i].clone()).collect()
    };
    let train = ds.derive(
        pick(&train_idx),
        format!("split(fraction={fraction}, seed={seed}): train side, {n_train} reviews"),
    );
    let test = ds.derive(
        pick(&test_idx),
        format!(
            "split(fraction={fraction}, seed={seed}): test side, {} reviews",
            n - n_train
        ),
    );
    (train, test)
}

/// Corpus summary counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_reviews: usize,
    pub n_users: usize,
    pub n_items: usize,
    /// Counts for stars 1-5.
    pub rating_histogram: [usize; 5],
    /// Lower median of whitespace word counts of review texts (0 if empty).
    pub median_words_per_review: usize,
}

pub fn compute_stats(ds: &Dataset) -> DatasetStats {
    let mut users: HashMap<&str, ()> = HashMap::new();
    let mut items: HashMap<&str, ()> = HashMap::new();
    let mut hist = [0usize; 5];
    let mut words: Vec<usize> = Vec::with_capacity(ds.len());
    for r in ds.reviews() {
        users.insert(&r.user_id, ());
        items.insert(&r.item_id, ());
        hist[(r.rating - 1) as usize] += 1;
        words.push(r.text.split_whitespace().count());
    }
    words.sort_unstable();
    let median = if words.is_empty() {
        0
    } else {
        words[(words.len() - 1) / 2]
    };
    DatasetStats {
        n_reviews: ds.len(),
        n_users: users.len(),
        n_items: items.len(),
        rating_histogram: hist,
        median_words_per_review: median,
    }
}
