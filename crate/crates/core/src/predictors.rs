//! Rating predictors.
//!
//! The bucket predictors (CM, MCM, ACM) compare the target user's and the
//! target item's review texts star by star and answer with the star whose
//! texts agree most. The text-weighted collaborative filters (CF-MCM,
//! CF-ACM) instead use those text similarities as neighbor weights in a
//! classic mean-offset user-based CF. CF-Pearson and CF-Cosine weight
//! neighbors by co-rating similarity, and `base`/`random` are floors.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::profiles::{Bucket, ProfileIndex, UserProfile};
use crate::vectorspace::{cosine, IdfTable, Weighting};

/// How two buckets are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityVariant {
    /// CM: one cosine between the concatenated bucket texts.
    Concat,
    /// MCM: best cosine over all review pairs.
    MaxPairwise,
    /// ACM: mean cosine over all review pairs.
    MeanPairwise,
}

/// Text flavor used for CF neighbor weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfTextVariant {
    Mcm,
    Acm,
}

/// Rating-vector similarity for the non-text CF baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingSim {
    Pearson,
    Cosine,
}

/// Which value filled in when the main formula had nothing to go on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    None,
    UserMean,
    ItemMean,
    GlobalMean,
}

/// A predicted rating plus how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub fallback: Fallback,
    /// Per-star bucket similarities, for the predictors that compute them.
    pub per_rating: Option<[f64; 5]>,
}

/// Tie handling when several stars share the maximum similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Prefer the tied star closest to the user's mean; still-tied goes to
    /// the larger star.
    #[default]
    NearestUserMean,
    LargestStar,
}

impl std::str::FromStr for TieBreak {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_lowercase().replace('_', "-").as_str() {
            "nearest-user-mean" => Ok(TieBreak::NearestUserMean),
            "largest-star" => Ok(TieBreak::LargestStar),
            other => Err(Error::Config(format!(
                "unknown tie break {other:?} (expected nearest-user-mean or largest-star)"
            ))),
        }
    }
}

/// Knobs shared by the predictors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictOpts {
    /// Set from the experiment-level `weighting` key, not from the options
    /// table.
    #[serde(skip)]
    pub weighting: Weighting,
    pub tie_break: TieBreak,
    /// Minimum co-rated items before a rating-vector weight counts.
    pub min_overlap: usize,
    /// Keep only this many neighbors (by weight, descending); all when absent.
    pub top_k: Option<usize>,
    /// Clamp real-valued predictions into [1, 5].
    pub clamp: bool,
    /// CF-ACM: average the per-star similarities over all five stars instead
    /// of only the stars where both users have reviews.
    pub cf_acm_divide_by_five: bool,
    /// CF text weights: compare buckets review-by-review instead of via the
    /// concatenated texts.
    pub cf_text_per_review: bool,
    /// Seed for the `random` baseline.
    pub random_seed: u64,
}

impl Default for PredictOpts {
    fn default() -> Self {
        PredictOpts {
            weighting: Weighting::TfIdf,
            tie_break: TieBreak::NearestUserMean,
            min_overlap: 2,
            top_k: None,
            clamp: true,
            cf_acm_divide_by_five: false,
            cf_text_per_review: false,
            random_seed: 0,
        }
    }
}

/// Every selectable predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    Cm,
    Mcm,
    Acm,
    CfMcm,
    CfAcm,
    CfPearson,
    CfCosine,
    Base,
    Random,
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 9] = [
        PredictorKind::Cm,
        PredictorKind::Mcm,
        PredictorKind::Acm,
        PredictorKind::CfMcm,
        PredictorKind::CfAcm,
        PredictorKind::CfPearson,
        PredictorKind::CfCosine,
        PredictorKind::Base,
        PredictorKind::Random,
    ];
}

impl std::fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PredictorKind::Cm => "CM",
            PredictorKind::Mcm => "MCM",
            PredictorKind::Acm => "ACM",
            PredictorKind::CfMcm => "CF-MCM",
            PredictorKind::CfAcm => "CF-ACM",
            PredictorKind::CfPearson => "CF-Pearson",
            PredictorKind::CfCosine => "CF-Cosine",
            PredictorKind::Base => "base",
            PredictorKind::Random => "random",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for PredictorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_lowercase().replace('_', "-").as_str() {
            "cm" => Ok(PredictorKind::Cm),
            "mcm" => Ok(PredictorKind::Mcm),
            "acm" => Ok(PredictorKind::Acm),
            "cf-mcm" => Ok(PredictorKind::CfMcm),
            "cf-acm" => Ok(PredictorKind::CfAcm),
            "cf-pearson" => Ok(PredictorKind::CfPearson),
            "cf-cosine" => Ok(PredictorKind::CfCosine),
            "base" => Ok(PredictorKind::Base),
            "random" => Ok(PredictorKind::Random),
            other => Err(Error::Config(format!(
                "unknown predictor {other:?} (expected one of CM, MCM, ACM, CF-MCM, CF-ACM, \
                 CF-Pearson, CF-Cosine, base, random)"
            ))),
        }
    }
}

impl Serialize for PredictorKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PredictorKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// Similarity between two same-star buckets. Empty buckets compare as 0.
pub fn bucket_similarity(
    a: &Bucket,
    b: &Bucket,
    variant: SimilarityVariant,
    idf: Option<&IdfTable>,
) -> f64 {
    match variant {
        SimilarityVariant::Concat => cosine(a.concat.vector(idf), b.concat.vector(idf)),
        SimilarityVariant::MaxPairwise | SimilarityVariant::MeanPairwise => {
            if a.reviews.is_empty() || b.reviews.is_empty() {
                return 0.0;
            }
            let mut max = 0.0f64;
            let mut sum = 0.0f64;
            for ra in &a.reviews {
                let va = ra.vector(idf);
                for rb in &b.reviews {
                    let c = cosine(va, rb.vector(idf));
                    max = max.max(c);
                    sum += c;
                }
            }
            match variant {
                SimilarityVariant::MaxPairwise => max,
                _ => sum / (a.reviews.len() * b.reviews.len()) as f64,
            }
        }
    }
}

fn fallback_chain(
    user: Option<&UserProfile>,
    item: Option<&crate::profiles::ItemProfile>,
    index: &ProfileIndex,
) -> (f64, Fallback) {
    if let Some(u) = user {
        (u.mean_rating, Fallback::UserMean)
    } else if let Some(i) = item {
        (i.mean_rating, Fallback::ItemMean)
    } else {
        (index.global_mean, Fallback::GlobalMean)
    }
}

fn clamp_if(value: f64, on: bool) -> f64 {
    if on {
        value.clamp(1.0, 5.0)
    } else {
        value
    }
}

// Round to the nearest whole star (halves round up).
fn round_star(value: f64) -> f64 {
    value.round().clamp(1.0, 5.0)
}

fn argmax_star(sims: &[f64; 5], user_mean: f64, tie: TieBreak) -> u8 {
    let max = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut best = 0u8;
    match tie {
        TieBreak::LargestStar => {
            for (i, s) in sims.iter().enumerate() {
                if *s == max {
                    best = i as u8 + 1;
                }
            }
        }
        TieBreak::NearestUserMean => {
            let mut best_dist = f64::INFINITY;
            for (i, s) in sims.iter().enumerate() {
                if *s == max {
                    let star = i as u8 + 1;
                    let dist = (star as f64 - user_mean).abs();
                    // <= so an equal distance moves to the larger star.
                    if dist <= best_dist {
                        best_dist = dist;
                        best = star;
                    }
                }
            }
        }
    }
    best
}

/// Bucket predictor (CM / MCM / ACM by variant): compare the user's and the
/// item's buckets star by star and answer the most similar star. With no
/// signal (all five similarities zero, or an unseen user or item) the answer
/// falls back to user mean, then item mean, then global mean, rounded to a
/// whole star to stay in the predictor's codomain.
pub fn predict_user_item(
    user_id: &str,
    item_id: &str,
    variant: SimilarityVariant,
    index: &ProfileIndex,
    opts: &PredictOpts,
) -> Prediction {
    let user = index.users.get(user_id);
    let item = index.items.get(item_id);
    let idf = index.idf_for(opts.weighting);
    if let (Some(u), Some(i)) = (user, item) {
        let mut sims = [0.0f64; 5];
        for star in 1..=5u8 {
            sims[(star - 1) as usize] =
                bucket_similarity(u.buckets.get(star), i.buckets.get(star), variant, idf);
        }
        if sims.iter().any(|s| *s > 0.0) {
            let star = argmax_star(&sims, u.mean_rating, opts.tie_break);
            return Prediction {
                value: star as f64,
                fallback: Fallback::None,
                per_rating: Some(sims),
            };
        }
        let (value, fallback) = fallback_chain(user, item, index);
        return Prediction {
            value: round_star(value),
            fallback,
            per_rating: Some(sims),
        };
    }
    let (value, fallback) = fallback_chain(user, item, index);
    Prediction {
        value: round_star(value),
        fallback,
        per_rating: None,
    }
}

/// Text-similarity weight between two users for the CF predictors: the five
/// per-star bucket similarities reduced by max (MCM) or average (ACM). The
/// average runs over the stars where both users actually have reviews,
/// unless `cf_acm_divide_by_five` asks for the blunt version.
pub fn text_cf_weight(
    u: &UserProfile,
    v: &UserProfile,
    variant: CfTextVariant,
    idf: Option<&IdfTable>,
    opts: &PredictOpts,
) -> f64 {
    let star_sim = |star: u8| -> f64 {
        let (a, b) = (u.buckets.get(star), v.buckets.get(star));
        if opts.cf_text_per_review {
            let inner = match variant {
                CfTextVariant::Mcm => SimilarityVariant::MaxPairwise,
                CfTextVariant::Acm => SimilarityVariant::MeanPairwise,
            };
            bucket_similarity(a, b, inner, idf)
        } else {
            cosine(a.concat.vector(idf), b.concat.vector(idf))
        }
    };
    match variant {
        CfTextVariant::Mcm => (1..=5).map(star_sim).fold(0.0, f64::max),
        CfTextVariant::Acm => {
            if opts.cf_acm_divide_by_five {
                (1..=5).map(star_sim).sum::<f64>() / 5.0
            } else {
                let mut sum = 0.0;
                let mut n = 0usize;
                for star in 1..=5u8 {
                    if !u.buckets.get(star).is_empty() && !v.buckets.get(star).is_empty() {
                        sum += star_sim(star);
                        n += 1;
                    }
                }
                if n == 0 {
                    0.0
                } else {
                    sum / n as f64
                }
            }
        }
    }
}

/// Similarity between two users' rating vectors over co-rated items.
/// Fewer than `min_overlap` co-rated items (or degenerate variance for
/// Pearson) weighs 0. Pearson keeps its sign.
pub fn rating_cf_weight(
    u: &UserProfile,
    v: &UserProfile,
    sim: RatingSim,
    min_overlap: usize,
) -> f64 {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (item, ru) in &u.rated {
        if let Some(rv) = v.rated.get(item) {
            xs.push(*ru as f64);
            ys.push(*rv as f64);
        }
    }
    if xs.is_empty() || xs.len() < min_overlap {
        return 0.0;
    }
    match sim {
        RatingSim::Cosine => {
            let dot: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
            let nx = xs.iter().map(|x| x * x).sum::<f64>().sqrt();
            let ny = ys.iter().map(|y| y * y).sum::<f64>().sqrt();
            dot / (nx * ny)
        }
        RatingSim::Pearson => {
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let mut cov = 0.0;
            let mut vx = 0.0;
            let mut vy = 0.0;
            for (x, y) in xs.iter().zip(&ys) {
                cov += (x - mx) * (y - my);
                vx += (x - mx) * (x - mx);
                vy += (y - my) * (y - my);
            }
            if vx == 0.0 || vy == 0.0 {
                0.0
            } else {
                cov / (vx.sqrt() * vy.sqrt())
            }
        }
    }
}

// Mean-offset weighted CF shared by the text-weighted and rating-weighted
// predictors: mean(u) + sum(w * (r_vi - mean(v))) / sum(|w|) over the other
// training raters of the item.
fn weighted_cf<F: Fn(&UserProfile) -> f64>(
    user_id: &str,
    item_id: &str,
    index: &ProfileIndex,
    opts: &PredictOpts,
    weight_of: F,
) -> Prediction {
    let item = index.items.get(item_id);
    let Some(u) = index.users.get(user_id) else {
        let (value, fallback) = fallback_chain(None, item, index);
        return Prediction {
            value: clamp_if(value, opts.clamp),
            fallback,
            per_rating: None,
        };
    };
    // (weight, neighbor id, neighbor's offset from their own mean)
    let mut neighbors: Vec<(f64, &str, f64)> = Vec::new();
    if let Some(raters) = index.item_raters.get(item_id) {
        for (v_id, r_vi) in raters {
            if v_id == user_id {
                continue;
            }
            let v = &index.users[v_id];
            let w = weight_of(v);
            neighbors.push((w, v_id.as_str(), *r_vi as f64 - v.mean_rating));
        }
    }
    if let Some(k) = opts.top_k {
        neighbors.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
        neighbors.truncate(k);
    }
    let den: f64 = neighbors.iter().map(|(w, _, _)| w.abs()).sum();
    if den == 0.0 {
        let (value, fallback) = fallback_chain(Some(u), item, index);
        return Prediction {
            value: clamp_if(value, opts.clamp),
            fallback,
            per_rating: None,
        };
    }
    let num: f64 = neighbors.iter().map(|(w, _, d)| w * d).sum();
    Prediction {
        value: clamp_if(u.mean_rating + num / den, opts.clamp),
        fallback: Fallback::None,
        per_rating: None,
    }
}

/// CF with text-similarity weights (CF-MCM / CF-ACM).
pub fn predict_user_user(
    user_id: &str,
    item_id: &str,
    variant: CfTextVariant,
    index: &ProfileIndex,
    opts: &PredictOpts,
) -> Prediction {
    let idf = index.idf_for(opts.weighting);
    weighted_cf(user_id, item_id, index, opts, |v| {
        let u = &index.users[user_id];
        text_cf_weight(u, v, variant, idf, opts)
    })
}

/// CF with rating-vector weights (CF-Pearson / CF-Cosine).
pub fn predict_cf_ratings(
    user_id: &str,
    item_id: &str,
    sim: RatingSim,
    index: &ProfileIndex,
    opts: &PredictOpts,
) -> Prediction {
    weighted_cf(user_id, item_id, index, opts, |v| {
        let u = &index.users[user_id];
        rating_cf_weight(u, v, sim, opts.min_overlap)
    })
}

/// Global mean plus user and item offsets, clamped into [1, 5]. Unknown
/// sides contribute a zero offset.
pub fn predict_base_model(user_id: &str, item_id: &str, index: &ProfileIndex) -> Prediction {
    let mu = index.global_mean;
    let b_u = index
        .users
        .get(user_id)
        .map_or(0.0, |u| u.mean_rating - mu);
    let b_i = index
        .items
        .get(item_id)
        .map_or(0.0, |i| i.mean_rating - mu);
    Prediction {
        value: (mu + b_u + b_i).clamp(1.0, 5.0),
        fallback: Fallback::None,
        per_rating: None,
    }
}

/// Uniform star keyed on (seed, user, item): deterministic per pair, with no
/// state shared across calls.
pub fn predict_random(user_id: &str, item_id: &str, seed: u64) -> Prediction {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&seed.to_le_bytes());
    eat(user_id.as_bytes());
    eat(&[0xff]);
    eat(item_id.as_bytes());
    // splitmix64 finisher to spread the fnv state.
    let mut z = h;
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    Prediction {
        value: (z % 5) as f64 + 1.0,
        fallback: Fallback::None,
        per_rating: None,
    }
}

/// Dispatch by predictor kind.
pub fn predict(
    kind: PredictorKind,
    user_id: &str,
    item_id: &str,
    index: &ProfileIndex,
    opts: &PredictOpts,
) -> Prediction {
    match kind {
        PredictorKind::Cm => {
            predict_user_item(user_id, item_id, SimilarityVariant::Concat, index, opts)
        }
        PredictorKind::Mcm => {
            predict_user_item(user_id, item_id, SimilarityVariant::MaxPairwise, index, opts)
        }
        PredictorKind::Acm => {
            predict_user_item(user_id, item_id, SimilarityVariant::MeanPairwise, index, opts)
        }
        PredictorKind::CfMcm => {
            predict_user_user(user_id, item_id, CfTextVariant::Mcm, index, opts)
        }
        PredictorKind::CfAcm => {
            predict_user_user(user_id, item_id, CfTextVariant::Acm, index, opts)
        }
        PredictorKind::CfPearson => {
            predict_cf_ratings(user_id, item_id, RatingSim::Pearson, index, opts)
        }
        PredictorKind::CfCosine => {
            predict_cf_ratings(user_id, item_id, RatingSim::Cosine, index, opts)
        }
        PredictorKind::Base => predict_base_model(user_id, item_id, index),
        PredictorKind::Random => predict_random(user_id, item_id, opts.random_seed),
    }
}
