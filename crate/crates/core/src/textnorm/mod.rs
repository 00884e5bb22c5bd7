//! Review-text normalization: lowercasing, punctuation and digit stripping,
//! stopword removal, slang expansion, and stemming, applied in that order.
//! Every step can be toggled; the output is always a list of tokens.

mod porter;

pub use porter::stem as porter_stem;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default stopword list shipped with the crate.
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
/// Default slang expansions shipped with the crate.
pub const DEFAULT_SLANG: &str = include_str!("../../data/slang.tsv");

// Slang values may themselves be slang keys; expansion is bounded so cyclic
// maps still terminate.
const MAX_SLANG_DEPTH: usize = 8;

/// Which pipeline steps run. Order is fixed; flags only skip steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepFlags {
    pub lowercase: bool,
    pub punctuation: bool,
    pub numbers: bool,
    pub stopwords: bool,
    pub slang: bool,
    pub stemming: bool,
}

impl Default for StepFlags {
    fn default() -> Self {
        StepFlags {
            lowercase: true,
            punctuation: true,
            numbers: true,
            stopwords: true,
            slang: true,
            stemming: true,
        }
    }
}

impl StepFlags {
    /// All steps disabled: `normalize` degenerates to whitespace splitting.
    pub fn none() -> Self {
        StepFlags {
            lowercase: false,
            punctuation: false,
            numbers: false,
            stopwords: false,
            slang: false,
            stemming: false,
        }
    }
}

/// Normalization settings: step toggles plus the word lists they consult.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NormConfig {
    pub steps: StepFlags,
    pub stopwords: BTreeSet<String>,
    pub slang: BTreeMap<String, String>,
}

impl Default for NormConfig {
    /// All steps on, using the built-in word lists.
    fn default() -> Self {
        NormConfig {
            steps: StepFlags::default(),
            stopwords: builtin_stopwords().clone(),
            slang: builtin_slang().clone(),
        }
    }
}

impl NormConfig {
    /// All steps off and no word lists: tokens pass through untouched.
    pub fn disabled() -> Self {
        NormConfig {
            steps: StepFlags::none(),
            stopwords: BTreeSet::new(),
            slang: BTreeMap::new(),
        }
    }
}

pub fn builtin_stopwords() -> &'static BTreeSet<String> {
    static SET: OnceLock<BTreeSet<String>> = OnceLock::new();
    SET.get_or_init(|| parse_stopwords(DEFAULT_STOPWORDS))
}

pub fn builtin_slang() -> &'static BTreeMap<String, String> {
    static MAP: OnceLock<BTreeMap<String, String>> = OnceLock::new();
    MAP.get_or_init(|| {
        parse_slang(DEFAULT_SLANG, Path::new("<builtin>")).expect("built-in slang list is valid")
    })
}

/// Load a stopword file: one word per line, `#` lines are comments, entries
/// are lowercased, duplicates are harmless.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

/// Load a slang file: `key<TAB>replacement phrase` per line, `#` lines are
/// comments, both sides lowercased. A repeated key is an error.
pub fn load_slang(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_slang(&text, path)
}

/// Load both word lists.
pub fn load_wordlists(
    stopword_path: &Path,
    slang_path: &Path,
) -> Result<(BTreeSet<String>, BTreeMap<String, String>)> {
    Ok((load_stopwords(stopword_path)?, load_slang(slang_path)?))
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn parse_slang(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('\t').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: slang line needs a tab between key and replacement",
                path.display(),
                idx + 1
            ))
        })?;
        let key = key.trim().to_lowercase();
        let value = value.trim().to_lowercase();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!(
                "{}:{}: slang key and replacement must be non-empty",
                path.display(),
                idx + 1
            )));
        }
        if map.contains_key(&key) {
            return Err(Error::DuplicateSlangKey {
                key,
                path: path.to_path_buf(),
            });
        }
        map.insert(key, value);
    }
    Ok(map)
}

/// Run the pipeline over one piece of text and return its tokens.
pub fn normalize(text: &str, cfg: &NormConfig) -> Vec<String> {
    let cleaned = clean_chars(text, &cfg.steps);
    let mut out = Vec::new();
    for tok in cleaned.split_whitespace() {
        push_token(tok, cfg, 0, &mut out);
    }
    if cfg.steps.stemming {
        for t in &mut out {
            let stemmed = porter_stem(t);
            if stemmed != *t {
                *t = stemmed;
            }
        }
        // Stemming can recreate a stopword ("likes" -> "like"), so the filter
        // runs once more over the stemmed tokens.
        if cfg.steps.stopwords {
            out.retain(|t| !cfg.stopwords.contains(t));
        }
    }
    out
}

// Character-level steps: case folding, punctuation to spaces, digit removal.
fn clean_chars(text: &str, steps: &StepFlags) -> String {
    let lowered;
    let src = if steps.lowercase {
        lowered = text.to_lowercase();
        &lowered
    } else {
        text
    };
    let mut s = String::with_capacity(src.len());
    for ch in src.chars() {
        if ch.is_numeric() {
            if !steps.numbers {
                s.push(ch);
            }
        } else if ch.is_alphanumeric() || ch.is_whitespace() || !steps.punctuation {
            s.push(ch);
        } else {
            s.push(' ');
        }
    }
    s
}

// Token-level steps 4-5. Slang replacements re-enter the pipeline from the
// character steps so a phrase with punctuation or digits cannot smuggle them
// past the earlier filters.
fn push_token(tok: &str, cfg: &NormConfig, depth: usize, out: &mut Vec<String>) {
    if tok.is_empty() {
        return;
    }
    if cfg.steps.stopwords && cfg.stopwords.contains(tok) {
        return;
    }
    if cfg.steps.slang && depth < MAX_SLANG_DEPTH {
        if let Some(phrase) = cfg.slang.get(tok) {
            let cleaned = clean_chars(phrase, &cfg.steps);
            for piece in cleaned.split_whitespace() {
                push_token(piece, cfg, depth + 1, out);
            }
            return;
        }
    }
    out.push(tok.to_string());
}
