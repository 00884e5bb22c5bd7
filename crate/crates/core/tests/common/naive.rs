//! A deliberately plain, self-contained reimplementation of every predictor,
//! used as the reference the optimized library is checked against. It shares
//! only input/knob types with the library; all bookkeeping and math are
//! written out here from scratch.

use std::collections::{BTreeMap, BTreeSet};

use revrate::corpus::Review;
use revrate::predictors::{Fallback, PredictOpts, PredictorKind, TieBreak};
use revrate::vectorspace::Weighting;

#[derive(Debug, Clone, PartialEq)]
pub struct NaivePrediction {
    pub value: f64,
    pub fallback: Fallback,
    pub per_rating: Option<[f64; 5]>,
}

struct NUser {
    mean: f64,
    // buckets[star - 1] = token lists of this user's star reviews, oldest first.
    buckets: [Vec<Vec<String>>; 5],
    rated: BTreeMap<String, u8>,
}

struct NItem {
    mean: f64,
    buckets: [Vec<Vec<String>>; 5],
}

pub struct NaiveModel {
    users: BTreeMap<String, NUser>,
    items: BTreeMap<String, NItem>,
    // item -> (user, star) in timestamp order.
    raters: BTreeMap<String, Vec<(String, u8)>>,
    global_mean: f64,
    idf: BTreeMap<String, f64>,
    default_idf: f64,
}

impl NaiveModel {
    /// Build from raw reviews (duplicates allowed): keep the latest review
    /// per (user, item) with ties going to the later position, tokenize by
    /// whitespace, fit idf over the kept reviews, group buckets by star.
    pub fn build(raw: &[Review]) -> NaiveModel {
        let mut best: BTreeMap<(String, String), usize> = BTreeMap::new();
        for (i, r) in raw.iter().enumerate() {
            let key = (r.user_id.clone(), r.item_id.clone());
            match best.get(&key) {
                Some(&j) if raw[j].timestamp > r.timestamp => {}
                _ => {
                    best.insert(key, i);
                }
            }
        }
        let mut keep: Vec<usize> = best.into_values().collect();
        keep.sort_unstable();
        let reviews: Vec<&Review> = keep.into_iter().map(|i| &raw[i]).collect();
        assert!(!reviews.is_empty(), "naive model needs at least one review");

        let tokens: Vec<Vec<String>> = reviews
            .iter()
            .map(|r| r.text.split_whitespace().map(str::to_string).collect())
            .collect();

        // Document frequency over the kept reviews, each counted once.
        let n = reviews.len();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for toks in &tokens {
            let uniq: BTreeSet<&str> = toks.iter().map(String::as_str).collect();
            for t in uniq {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let idf: BTreeMap<String, f64> = df
            .into_iter()
            .map(|(t, d)| {
                (
                    t.to_string(),
                    ((1.0 + n as f64) / (1.0 + d as f64)).ln() + 1.0,
                )
            })
            .collect();
        let default_idf = (1.0 + n as f64).ln() + 1.0;

        // Per-user / per-item review order: (timestamp, kept position).
        let mut order: Vec<usize> = (0..reviews.len()).collect();
        order.sort_by_key(|&i| (reviews[i].timestamp, i));

        let mut users: BTreeMap<String, NUser> = BTreeMap::new();
        let mut items: BTreeMap<String, NItem> = BTreeMap::new();
        let mut raters: BTreeMap<String, Vec<(String, u8)>> = BTreeMap::new();
        for &i in &order {
            let r = reviews[i];
            let star = r.rating as usize - 1;
            let u = users.entry(r.user_id.clone()).or_insert_with(|| NUser {
                mean: 0.0,
                buckets: Default::default(),
                rated: BTreeMap::new(),
            });
            u.buckets[star].push(tokens[i].clone());
            u.rated.insert(r.item_id.clone(), r.rating);
            let it = items.entry(r.item_id.clone()).or_insert_with(|| NItem {
                mean: 0.0,
                buckets: Default::default(),
            });
            it.buckets[star].push(tokens[i].clone());
            raters
                .entry(r.item_id.clone())
                .or_default()
                .push((r.user_id.clone(), r.rating));
        }
        for u in users.values_mut() {
            let (sum, count) = u
                .buckets
                .iter()
                .enumerate()
                .fold((0.0, 0usize), |(s, c), (b, revs)| {
                    (s + ((b + 1) * revs.len()) as f64, c + revs.len())
                });
            u.mean = sum / count as f64;
        }
        for it in items.values_mut() {
            let (sum, count) = it
                .buckets
                .iter()
                .enumerate()
                .fold((0.0, 0usize), |(s, c), (b, revs)| {
                    (s + ((b + 1) * revs.len()) as f64, c + revs.len())
                });
            it.mean = sum / count as f64;
        }
        let global_mean =
            reviews.iter().map(|r| r.rating as f64).sum::<f64>() / reviews.len() as f64;

        NaiveModel {
            users,
            items,
            raters,
            global_mean,
            idf,
            default_idf,
        }
    }

    fn weigh(&self, tokens: &[String], weighting: Weighting) -> BTreeMap<String, f64> {
        let mut counts: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        if weighting == Weighting::TfIdf {
            for (t, w) in counts.iter_mut() {
                *w *= self.idf.get(t).copied().unwrap_or(self.default_idf);
            }
        }
        counts
    }

    fn cosine_tokens(&self, a: &[String], b: &[String], weighting: Weighting) -> f64 {
        let wa = self.weigh(a, weighting);
        let wb = self.weigh(b, weighting);
        let na = wa.values().map(|w| w * w).sum::<f64>().sqrt();
        let nb = wb.values().map(|w| w * w).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let mut dot = 0.0;
        for (t, x) in &wa {
            if let Some(y) = wb.get(t) {
                dot += x * y;
            }
        }
        dot / (na * nb)
    }

    fn concat(bucket: &[Vec<String>]) -> Vec<String> {
        bucket.iter().flatten().cloned().collect()
    }

    /// Per-star similarity between a user bucket and an item bucket.
    fn bucket_sim(
        &self,
        a: &[Vec<String>],
        b: &[Vec<String>],
        kind: PredictorKind,
        weighting: Weighting,
    ) -> f64 {
        match kind {
            PredictorKind::Cm => {
                self.cosine_tokens(&Self::concat(a), &Self::concat(b), weighting)
            }
            PredictorKind::Mcm | PredictorKind::Acm => {
                if a.is_empty() || b.is_empty() {
                    return 0.0;
                }
                let mut max = 0.0f64;
                let mut sum = 0.0f64;
                for ra in a {
                    for rb in b {
                        let c = self.cosine_tokens(ra, rb, weighting);
                        if c > max {
                            max = c;
                        }
                        sum += c;
                    }
                }
                if kind == PredictorKind::Mcm {
                    max
                } else {
                    sum / (a.len() * b.len()) as f64
                }
            }
            _ => unreachable!("bucket_sim is only for CM/MCM/ACM"),
        }
    }

    fn round_star(x: f64) -> f64 {
        (x + 0.5).floor().clamp(1.0, 5.0)
    }

    fn clamp_if(x: f64, on: bool) -> f64 {
        if on {
            x.clamp(1.0, 5.0)
        } else {
            x
        }
    }

    fn fallback(&self, user: Option<&NUser>, item: Option<&NItem>) -> (f64, Fallback) {
        if let Some(u) = user {
            (u.mean, Fallback::UserMean)
        } else if let Some(it) = item {
            (it.mean, Fallback::ItemMean)
        } else {
            (self.global_mean, Fallback::GlobalMean)
        }
    }

    fn pick_star(sims: &[f64; 5], mean: f64, tie: TieBreak) -> u8 {
        let top = sims.iter().fold(f64::NEG_INFINITY, |m, &s| if s > m { s } else { m });
        let candidates: Vec<u8> = (1..=5u8)
            .filter(|s| sims[*s as usize - 1] == top)
            .collect();
        match tie {
            TieBreak::LargestStar => *candidates.last().unwrap(),
            TieBreak::NearestUserMean => {
                let mut chosen = candidates[0];
                for &c in &candidates[1..] {
                    let dc = (c as f64 - mean).abs();
                    let db = (chosen as f64 - mean).abs();
                    if dc < db || (dc == db && c > chosen) {
                        chosen = c;
                    }
                }
                chosen
            }
        }
    }

    fn predict_bucket(
        &self,
        user: &str,
        item: &str,
        kind: PredictorKind,
        opts: &PredictOpts,
    ) -> NaivePrediction {
        let u = self.users.get(user);
        let it = self.items.get(item);
        let (Some(u_ref), Some(i_ref)) = (u, it) else {
            let (value, fallback) = self.fallback(u, it);
            return NaivePrediction {
                value: Self::round_star(value),
                fallback,
                per_rating: None,
            };
        };
        let mut sims = [0.0f64; 5];
        for s in 0..5 {
            sims[s] = self.bucket_sim(&u_ref.buckets[s], &i_ref.buckets[s], kind, opts.weighting);
        }
        if sims.iter().any(|&s| s > 0.0) {
            NaivePrediction {
                value: Self::pick_star(&sims, u_ref.mean, opts.tie_break) as f64,
                fallback: Fallback::None,
                per_rating: Some(sims),
            }
        } else {
            NaivePrediction {
                value: Self::round_star(u_ref.mean),
                fallback: Fallback::UserMean,
                per_rating: Some(sims),
            }
        }
    }

    fn text_weight(&self, u: &NUser, v: &NUser, kind: PredictorKind, opts: &PredictOpts) -> f64 {
        let star_sim = |s: usize| -> f64 {
            if opts.cf_text_per_review {
                let inner = if kind == PredictorKind::CfMcm {
                    PredictorKind::Mcm
                } else {
                    PredictorKind::Acm
                };
                self.bucket_sim(&u.buckets[s], &v.buckets[s], inner, opts.weighting)
            } else {
                self.cosine_tokens(
                    &Self::concat(&u.buckets[s]),
                    &Self::concat(&v.buckets[s]),
                    opts.weighting,
                )
            }
        };
        if kind == PredictorKind::CfMcm {
            let mut best = 0.0f64;
            for s in 0..5 {
                let c = star_sim(s);
                if c > best {
                    best = c;
                }
            }
            best
        } else if opts.cf_acm_divide_by_five {
            (0..5).map(star_sim).sum::<f64>() / 5.0
        } else {
            let mut sum = 0.0;
            let mut n = 0;
            for s in 0..5 {
                if !u.buckets[s].is_empty() && !v.buckets[s].is_empty() {
                    sum += star_sim(s);
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

    fn rating_weight(&self, u: &NUser, v: &NUser, kind: PredictorKind, min_overlap: usize) -> f64 {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (item, x) in &u.rated {
            if let Some(y) = v.rated.get(item) {
                xs.push(*x as f64);
                ys.push(*y as f64);
            }
        }
        if xs.is_empty() || xs.len() < min_overlap {
            return 0.0;
        }
        if kind == PredictorKind::CfCosine {
            let dot: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
            let nx = xs.iter().map(|x| x * x).sum::<f64>().sqrt();
            let ny = ys.iter().map(|y| y * y).sum::<f64>().sqrt();
            dot / (nx * ny)
        } else {
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

    fn predict_cf(
        &self,
        user: &str,
        item: &str,
        kind: PredictorKind,
        opts: &PredictOpts,
    ) -> NaivePrediction {
        let it = self.items.get(item);
        let Some(u) = self.users.get(user) else {
            let (value, fallback) = self.fallback(None, it);
            return NaivePrediction {
                value: Self::clamp_if(value, opts.clamp),
                fallback,
                per_rating: None,
            };
        };
        let mut neighbors: Vec<(f64, &str, f64)> = Vec::new();
        if let Some(raters) = self.raters.get(item) {
            for (v_id, r_vi) in raters {
                if v_id == user {
                    continue;
                }
                let v = &self.users[v_id];
                let w = match kind {
                    PredictorKind::CfMcm | PredictorKind::CfAcm => {
                        self.text_weight(u, v, kind, opts)
                    }
                    _ => self.rating_weight(u, v, kind, opts.min_overlap),
                };
                neighbors.push((w, v_id.as_str(), *r_vi as f64 - v.mean));
            }
        }
        if let Some(k) = opts.top_k {
            neighbors.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .unwrap()
                    .then_with(|| a.1.cmp(b.1))
            });
            neighbors.truncate(k);
        }
        let den: f64 = neighbors.iter().map(|(w, _, _)| w.abs()).sum();
        if den == 0.0 {
            let (value, fallback) = self.fallback(Some(u), it);
            return NaivePrediction {
                value: Self::clamp_if(value, opts.clamp),
                fallback,
                per_rating: None,
            };
        }
        let num: f64 = neighbors.iter().map(|(w, _, d)| w * d).sum();
        NaivePrediction {
            value: Self::clamp_if(u.mean + num / den, opts.clamp),
            fallback: Fallback::None,
            per_rating: None,
        }
    }

    fn predict_base(&self, user: &str, item: &str) -> NaivePrediction {
        let mu = self.global_mean;
        let bu = self.users.get(user).map_or(0.0, |u| u.mean - mu);
        let bi = self.items.get(item).map_or(0.0, |i| i.mean - mu);
        NaivePrediction {
            value: (mu + bu + bi).clamp(1.0, 5.0),
            fallback: Fallback::None,
            per_rating: None,
        }
    }

    fn predict_rand(&self, user: &str, item: &str, seed: u64) -> NaivePrediction {
        // Independent copy of the keyed-hash baseline.
        let mut h: u64 = 0xcbf29ce484222325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        feed(&seed.to_le_bytes());
        feed(user.as_bytes());
        feed(&[0xff]);
        feed(item.as_bytes());
        let mut z = h;
        z ^= z >> 30;
        z = z.wrapping_mul(0xbf58476d1ce4e5b9);
        z ^= z >> 27;
        z = z.wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        NaivePrediction {
            value: (z % 5) as f64 + 1.0,
            fallback: Fallback::None,
            per_rating: None,
        }
    }

    pub fn predict(
        &self,
        kind: PredictorKind,
        user: &str,
        item: &str,
        opts: &PredictOpts,
    ) -> NaivePrediction {
        match kind {
            PredictorKind::Cm | PredictorKind::Mcm | PredictorKind::Acm => {
                self.predict_bucket(user, item, kind, opts)
            }
            PredictorKind::CfMcm
            | PredictorKind::CfAcm
            | PredictorKind::CfPearson
            | PredictorKind::CfCosine => self.predict_cf(user, item, kind, opts),
            PredictorKind::Base => self.predict_base(user, item),
            PredictorKind::Random => self.predict_rand(user, item, opts.random_seed),
        }
    }
}
