//! Rating-bucketed text profiles. A user's (or item's) training reviews are
//! grouped by the star they came with, so "what does this user sound like
//! when they give 4 stars" is a first-class object. Term vectors for buckets
//! are built lazily and cached; profiles can be snapshotted to disk and
//! reloaded as long as the configuration they were built under is unchanged.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::fingerprint;
use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::textnorm::{normalize, NormConfig};
use crate::vectorspace::{build_idf, term_vector, IdfTable, TermVector, Weighting};

/// One normalized review text plus cached term vectors (one slot per
/// weighting scheme). The cache assumes every call passes the same idf
/// table, which holds because a [`ProfileIndex`] owns exactly one.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ReviewText {
    pub tokens: Vec<String>,
    #[serde(skip)]
    tf: OnceLock<TermVector>,
    #[serde(skip)]
    tfidf: OnceLock<TermVector>,
}

impl ReviewText {
    pub fn new(tokens: Vec<String>) -> Self {
        ReviewText {
            tokens,
            tf: OnceLock::new(),
            tfidf: OnceLock::new(),
        }
    }

    /// The term vector under the given weighting, built on first use.
    pub fn vector(&self, idf: Option<&IdfTable>) -> &TermVector {
        match idf {
            None => self.tf.get_or_init(|| term_vector(&self.tokens, None)),
            Some(table) => self
                .tfidf
                .get_or_init(|| term_vector(&self.tokens, Some(table))),
        }
    }
}

/// The reviews of one profile that carry one particular star rating.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Bucket {
    /// Individual review texts, in timestamp order.
    pub reviews: Vec<ReviewText>,
    /// All of the bucket's tokens concatenated in the same order.
    pub concat: ReviewText,
}

impl Bucket {
    fn from_token_lists(lists: Vec<Vec<String>>) -> Bucket {
        let concat: Vec<String> = lists.iter().flatten().cloned().collect();
        Bucket {
            reviews: lists.into_iter().map(ReviewText::new).collect(),
            concat: ReviewText::new(concat),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }
}

/// Five buckets, one per star.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RatingBuckets {
    buckets: [Bucket; 5],
}

impl RatingBuckets {
    /// Bucket for a star in 1-5.
    pub fn get(&self, star: u8) -> &Bucket {
        &self.buckets[(star - 1) as usize]
    }

    /// (star, bucket) pairs in ascending star order.
    pub fn iter(&self) -> impl Iterator<Item = (u8, &Bucket)> {
        self.buckets.iter().enumerate().map(|(i, b)| (i as u8 + 1, b))
    }

    pub fn total_reviews(&self) -> usize {
        self.buckets.iter().map(Bucket::len).sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: String,
    pub mean_rating: f64,
    pub buckets: RatingBuckets,
    /// item -> star given, over the training reviews.
    pub rated: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemProfile {
    pub id: String,
    pub mean_rating: f64,
    pub buckets: RatingBuckets,
}

/// Everything the predictors need, built once from a training set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileIndex {
    pub users: BTreeMap<String, UserProfile>,
    pub items: BTreeMap<String, ItemProfile>,
    pub idf: IdfTable,
    pub global_mean: f64,
    /// item -> (user, star) over training reviews, in timestamp order.
    pub item_raters: BTreeMap<String, Vec<(String, u8)>>,
    /// Fingerprint of the normalization settings the tokens were built with.
    pub config_hash: String,
    pub n_train_reviews: usize,
}

impl ProfileIndex {
    /// The idf table to pass to vector builders under a weighting scheme.
    pub fn idf_for(&self, weighting: Weighting) -> Option<&IdfTable> {
        match weighting {
            Weighting::Tf => None,
            Weighting::TfIdf => Some(&self.idf),
        }
    }
}

/// Normalize every training review, fit idf over those token lists, and
/// assemble user and item profiles.
pub fn build_profiles(train: &Dataset, norm: &NormConfig) -> Result<ProfileIndex> {
    if train.is_empty() {
        return Err(Error::Data(
            "cannot build profiles from an empty training set".into(),
        ));
    }
    let reviews = train.reviews();
    log::info!("building profiles from {} training reviews", reviews.len());

    // Parallel map keeps input order, so the result is run-independent.
    let docs: Vec<Vec<String>> = reviews
        .par_iter()
        .map(|r| normalize(&r.text, norm))
        .collect();
    let idf = build_idf(&docs)?;
    let global_mean =
        reviews.iter().map(|r| r.rating as f64).sum::<f64>() / reviews.len() as f64;

    // Indices per user / per item, each sorted by (timestamp, stream order).
    let mut by_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut by_item: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, r) in reviews.iter().enumerate() {
        by_user.entry(&r.user_id).or_default().push(idx);
        by_item.entry(&r.item_id).or_default().push(idx);
    }
    let sort_ts = |indices: &mut Vec<usize>| {
        indices.sort_by_key(|&i| (reviews[i].timestamp, i));
    };

    let mut users = BTreeMap::new();
    for (id, mut indices) in by_user {
        sort_ts(&mut indices);
        let mean_rating =
            indices.iter().map(|&i| reviews[i].rating as f64).sum::<f64>() / indices.len() as f64;
        let rated: BTreeMap<String, u8> = indices
            .iter()
            .map(|&i| (reviews[i].item_id.clone(), reviews[i].rating))
            .collect();
        users.insert(
            id.to_string(),
            UserProfile {
                id: id.to_string(),
                mean_rating,
                buckets: make_buckets(&indices, reviews, &docs),
                rated,
            },
        );
    }

    let mut items = BTreeMap::new();
    let mut item_raters = BTreeMap::new();
    for (id, mut indices) in by_item {
        sort_ts(&mut indices);
        let mean_rating =
            indices.iter().map(|&i| reviews[i].rating as f64).sum::<f64>() / indices.len() as f64;
        item_raters.insert(
            id.to_string(),
            indices
                .iter()
                .map(|&i| (reviews[i].user_id.clone(), reviews[i].rating))
                .collect::<Vec<_>>(),
        );
        items.insert(
            id.to_string(),
            ItemProfile {
                id: id.to_string(),
                mean_rating,
                buckets: make_buckets(&indices, reviews, &docs),
            },
        );
    }

    Ok(ProfileIndex {
        users,
        items,
        idf,
        global_mean,
        item_raters,
        config_hash: fingerprint(norm),
        n_train_reviews: reviews.len(),
    })
}

fn make_buckets(
    indices: &[usize],
    reviews: &[crate::corpus::Review],
    docs: &[Vec<String>],
) -> RatingBuckets {
    let mut buckets: [Vec<Vec<String>>; 5] = Default::default();
    for &i in indices {
        buckets[(reviews[i].rating - 1) as usize].push(docs[i].clone());
    }
    RatingBuckets {
        buckets: buckets.map(Bucket::from_token_lists),
    }
}

// Snapshot format: magic, then a bincode-encoded envelope. Anything that
// fails to read back (wrong magic, wrong version, stale config hash, decode
// garbage) means "rebuild", not "crash".
const SNAPSHOT_MAGIC: &[u8; 8] = b"RVRPROF\0";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    version: u32,
    index: ProfileIndex,
}

/// Write a profile snapshot.
pub fn save_snapshot(index: &ProfileIndex, path: &Path) -> Result<()> {
    let envelope = Envelope {
        version: SNAPSHOT_VERSION,
        index: index.clone(),
    };
    let body = bincode::serde::encode_to_vec(&envelope, bincode::config::standard())
        .map_err(|e| Error::Data(format!("cannot encode profile snapshot: {e}")))?;
    let mut bytes = SNAPSHOT_MAGIC.to_vec();
    bytes.extend_from_slice(&body);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Read a snapshot back. Returns `Ok(None)` when there is no usable
/// snapshot: missing file, unrecognized or outdated format, or a config
/// fingerprint different from `expected_config_hash`.
pub fn load_snapshot(path: &Path, expected_config_hash: &str) -> Result<Option<ProfileIndex>> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let Some(body) = bytes.strip_prefix(SNAPSHOT_MAGIC.as_slice()) else {
        log::warn!("{}: not a profile snapshot, rebuilding", path.display());
        return Ok(None);
    };
    let envelope: Envelope =
        match bincode::serde::decode_from_slice(body, bincode::config::standard()) {
            Ok((env, _)) => env,
            Err(e) => {
                log::warn!("{}: unreadable snapshot ({e}), rebuilding", path.display());
                return Ok(None);
            }
        };
    if envelope.version != SNAPSHOT_VERSION {
        log::warn!(
            "{}: snapshot version {} != {}, rebuilding",
            path.display(),
            envelope.version,
            SNAPSHOT_VERSION
        );
        return Ok(None);
    }
    if envelope.index.config_hash != expected_config_hash {
        log::info!("{}: snapshot built under a different config, rebuilding", path.display());
        return Ok(None);
    }
    Ok(Some(envelope.index))
}
