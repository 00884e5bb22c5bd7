//! Sparse term vectors with raw-count or smoothed tf-idf weights, and the
//! cosine similarity between them. Weights live in ordered maps so every sum
//! runs in the same order on every run (bit-identical results).

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Term weighting scheme for review vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Raw term counts.
    Tf,
    /// Counts scaled by smoothed inverse document frequency.
    #[default]
    TfIdf,
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::Tf => "tf",
            Weighting::TfIdf => "tf-idf",
        })
    }
}

impl std::str::FromStr for Weighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Weighting> {
        match s.to_lowercase().as_str() {
            "tf" => Ok(Weighting::Tf),
            "tf-idf" | "tfidf" | "tf_idf" => Ok(Weighting::TfIdf),
            other => Err(Error::Config(format!(
                "unknown weighting {other:?} (expected tf or tf-idf)"
            ))),
        }
    }
}

/// Sparse non-negative term weights plus a precomputed Euclidean norm.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TermVector {
    weights: BTreeMap<String, f64>,
    norm: f64,
}

impl TermVector {
    /// Build from explicit weights. Zero entries are dropped; negative
    /// weights are a caller bug.
    pub fn from_weights(mut weights: BTreeMap<String, f64>) -> TermVector {
        weights.retain(|_, w| *w != 0.0);
        debug_assert!(weights.values().all(|w| *w > 0.0), "negative term weight");
        let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
        TermVector { weights, norm }
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn get(&self, term: &str) -> f64 {
        self.weights.get(term).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(t, w)| (t.as_str(), *w))
    }
}

/// Smoothed inverse document frequencies fitted on a document collection:
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, which stays positive and gives
/// terms never seen at fit time `ln(1 + N) + 1`. Ordered storage keeps the
/// serialized form reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdfTable {
    n_docs: usize,
    idf: BTreeMap<String, f64>,
    default_idf: f64,
}

impl IdfTable {
    pub fn idf(&self, term: &str) -> f64 {
        self.idf.get(term).copied().unwrap_or(self.default_idf)
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_terms(&self) -> usize {
        self.idf.len()
    }
}

/// Fit an [`IdfTable`] on a non-empty collection of token lists.
pub fn build_idf<D: AsRef<[String]>>(docs: &[D]) -> Result<IdfTable> {
    if docs.is_empty() {
        return Err(Error::Data(
            "cannot fit idf on an empty document collection".into(),
        ));
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.as_ref().iter().map(String::as_str).collect();
        for term in unique {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let n = docs.len();
    let numer = (1 + n) as f64;
    let idf = df
        .into_iter()
        .map(|(t, d)| (t.to_string(), (numer / (1 + d) as f64).ln() + 1.0))
        .collect();
    Ok(IdfTable {
        n_docs: n,
        idf,
        default_idf: numer.ln() + 1.0,
    })
}

/// Turn a token list into a term vector: raw counts, or counts scaled by
/// idf when a table is supplied.
pub fn term_vector(tokens: &[String], idf: Option<&IdfTable>) -> TermVector {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for tok in tokens {
        *counts.entry(tok.as_str()).or_insert(0) += 1;
    }
    let weights = counts
        .into_iter()
        .map(|(t, c)| {
            let w = match idf {
                Some(table) => c as f64 * table.idf(t),
                None => c as f64,
            };
            (t.to_string(), w)
        })
        .collect();
    TermVector::from_weights(weights)
}

/// Cosine similarity. Either vector having zero norm yields 0.
pub fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    if a.norm == 0.0 || b.norm == 0.0 {
        return 0.0;
    }
    let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut dot = 0.0;
    for (term, w) in &small.weights {
        if let Some(w2) = big.weights.get(term) {
            dot += w * w2;
        }
    }
    dot / (a.norm * b.norm)
}
