//! Shared fixtures for the integration suites: synthetic review corpora and
//! an independent reference implementation of every predictor.

#![allow(dead_code)]

pub mod naive;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use revrate::corpus::Review;
use std::collections::BTreeSet;

pub fn review(user: &str, item: &str, rating: u8, ts: i64, text: &str) -> Review {
    Review {
        user_id: user.to_string(),
        item_id: item.to_string(),
        rating,
        helpfulness: (0, 0),
        timestamp: ts,
        profile_name: String::new(),
        summary: String::new(),
        text: text.to_string(),
    }
}

/// A tiny random corpus: up to 6 reviews over 3 users and 3 items, texts of
/// 0-5 tokens from an 8-word vocabulary, duplicate (user, item) pairs and
/// timestamp ties allowed.
pub fn micro_corpus(rng: &mut ChaCha8Rng) -> Vec<Review> {
    const VOCAB: [&str; 8] = [
        "alpha", "bravo", "carbon", "delta", "ember", "flint", "grove", "haze",
    ];
    let n = rng.gen_range(1..=6);
    (0..n)
        .map(|_| {
            let user = format!("u{}", rng.gen_range(0..3));
            let item = format!("i{}", rng.gen_range(0..3));
            let rating = rng.gen_range(1..=5) as u8;
            let len = rng.gen_range(0..=5);
            let text = (0..len)
                .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())])
                .collect::<Vec<_>>()
                .join(" ");
            let ts = rng.gen_range(0..50);
            review(&user, &item, rating, ts, &text)
        })
        .collect()
}

const GENRES: [[&str; 12]; 8] = [
    [
        "spaceship",
        "planet",
        "orbit",
        "alien",
        "galaxy",
        "astronaut",
        "rocket",
        "nebula",
        "cosmos",
        "station",
        "gravity",
        "launch",
    ],
    [
        "detective",
        "shadow",
        "crime",
        "alley",
        "smoke",
        "whiskey",
        "betrayal",
        "motive",
        "suspect",
        "trench",
        "neon",
        "heist",
    ],
    [
        "cowboy",
        "desert",
        "saloon",
        "sheriff",
        "horse",
        "frontier",
        "duel",
        "canyon",
        "outlaw",
        "ranch",
        "dust",
        "revolver",
    ],
    [
        "kiss",
        "wedding",
        "letters",
        "paris",
        "dance",
        "flowers",
        "longing",
        "reunion",
        "promise",
        "sunset",
        "serenade",
        "embrace",
    ],
    [
        "ghost",
        "basement",
        "scream",
        "curse",
        "ritual",
        "darkness",
        "haunting",
        "blood",
        "nightmare",
        "cellar",
        "spirits",
        "dread",
    ],
    [
        "pratfall",
        "gag",
        "banter",
        "mixup",
        "sidekick",
        "punchline",
        "farce",
        "slapstick",
        "quip",
        "hijinks",
        "spoof",
        "parody",
    ],
    [
        "trenches",
        "battalion",
        "siege",
        "general",
        "medal",
        "frontline",
        "bunker",
        "convoy",
        "artillery",
        "regiment",
        "valor",
        "armistice",
    ],
    [
        "dragon",
        "wizard",
        "quest",
        "kingdom",
        "sword",
        "prophecy",
        "castle",
        "spell",
        "elf",
        "throne",
        "relic",
        "crown",
    ],
];

const SENTIMENT: [[&str; 9]; 5] = [
    [
        "terrible",
        "awful",
        "horrid",
        "unwatchable",
        "waste",
        "disaster",
        "painful",
        "insult",
        "garbage",
    ],
    [
        "weak",
        "boring",
        "tedious",
        "flat",
        "shallow",
        "disappoint",
        "mediocre",
        "clunky",
        "lifeless",
    ],
    [
        "average",
        "decent",
        "watchable",
        "uneven",
        "passable",
        "middling",
        "fine",
        "okay",
        "serviceable",
    ],
    [
        "good",
        "solid",
        "enjoyable",
        "engaging",
        "charming",
        "effective",
        "sharp",
        "satisfying",
        "strong",
    ],
    [
        "wonderful",
        "great",
        "superb",
        "magnificent",
        "perfect",
        "masterful",
        "brilliant",
        "stunning",
        "flawless",
    ],
];

const FILLER: [&str; 14] = [
    "movie", "film", "watch", "story", "plot", "scene", "acting", "cast", "director", "script",
    "pacing", "ending", "screen", "sound",
];

// All of these are in the default stopword list, so normalization removes
// them while the raw pipeline keeps them as shared cross-star noise.
const PADDING: [&str; 10] = ["the", "a", "and", "of", "to", "it", "was", "i", "this", "that"];

const DIGITS: [&str; 5] = ["10", "2", "7", "1987", "3"];

/// Roughly normal via a sum of uniforms.
fn normalish(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let z: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
    mean + sd * z
}

fn inflect(rng: &mut ChaCha8Rng, lemma: &str) -> String {
    let roll = rng.gen_range(0..100);
    if roll < 50 {
        lemma.to_string()
    } else if roll < 65 {
        format!("{lemma}s")
    } else {
        let stem = lemma.strip_suffix('e').unwrap_or(lemma);
        if roll < 80 {
            format!("{stem}ed")
        } else {
            format!("{stem}ing")
        }
    }
}

fn add_noise(rng: &mut ChaCha8Rng, word: String) -> String {
    let mut word = word;
    let roll = rng.gen_range(0..100);
    if roll < 8 {
        word = word.to_uppercase();
    } else if roll < 28 {
        let mut chars = word.chars();
        if let Some(first) = chars.next() {
            word = first.to_uppercase().collect::<String>() + chars.as_str();
        }
    }
    if rng.gen_bool(0.25) {
        const PUNCT: [&str; 6] = [",", ".", "!", "!!", "?", "..."];
        word.push_str(PUNCT[rng.gen_range(0..PUNCT.len())]);
    }
    word
}

fn review_text(rng: &mut ChaCha8Rng, star: u8, genre: usize) -> String {
    let mut tokens: Vec<String> = Vec::new();
    let n_sent = rng.gen_range(3..=6);
    for _ in 0..n_sent {
        let mut pool = star as i32 - 1;
        if rng.gen_bool(0.25) {
            pool += if rng.gen_bool(0.5) { 1 } else { -1 };
            pool = pool.clamp(0, 4);
        }
        let lemma = SENTIMENT[pool as usize][rng.gen_range(0..9)];
        let word = inflect(rng, lemma);
        tokens.push(add_noise(rng, word));
    }
    let n_topic = rng.gen_range(2..=4);
    for _ in 0..n_topic {
        let lemma = GENRES[genre][rng.gen_range(0..12)];
        let word = inflect(rng, lemma);
        tokens.push(add_noise(rng, word));
    }
    let n_fill = rng.gen_range(1..=3);
    for _ in 0..n_fill {
        let word = inflect(rng, FILLER[rng.gen_range(0..FILLER.len())]);
        tokens.push(add_noise(rng, word));
    }
    let n_pad = rng.gen_range(2..=5);
    for _ in 0..n_pad {
        tokens.push(PADDING[rng.gen_range(0..PADDING.len())].to_string());
    }
    if rng.gen_bool(0.12) {
        tokens.push(DIGITS[rng.gen_range(0..DIGITS.len())].to_string());
    }
    tokens.join(" ")
}

/// A seeded ~10k-review corpus with structure for the directional suites:
/// items carry a latent quality and genre, users carry a bias and two
/// preferred genres, and review texts mix star-keyed sentiment words (with
/// adjacent-star bleed), genre topic words, filler, stopword padding,
/// inflection variants, case noise, punctuation and stray digits.
pub fn big_corpus(seed: u64) -> Vec<Review> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const N_ITEMS: usize = 260;
    const N_USERS: usize = 550;

    struct It {
        genre: usize,
        quality: f64,
    }
    let items: Vec<It> = (0..N_ITEMS)
        .map(|_| It {
            genre: rng.gen_range(0..8),
            quality: normalish(&mut rng, 3.8, 0.9).clamp(1.0, 5.0),
        })
        .collect();
    let by_genre: Vec<Vec<usize>> = (0..8)
        .map(|g| (0..N_ITEMS).filter(|&i| items[i].genre == g).collect())
        .collect();

    let mut reviews = Vec::new();
    let mut ts: i64 = 0;
    for u in 0..N_USERS {
        let bias = normalish(&mut rng, 0.0, 0.5);
        let g1 = rng.gen_range(0..8);
        let mut g2 = rng.gen_range(0..8);
        if g2 == g1 {
            g2 = (g2 + 3) % 8;
        }
        let n_rev = rng.gen_range(16..=24);
        let mut chosen: BTreeSet<usize> = BTreeSet::new();
        for _ in 0..1000 {
            if chosen.len() >= n_rev {
                break;
            }
            let pick = if rng.gen_bool(0.7) {
                let pool = if rng.gen_bool(0.5) { &by_genre[g1] } else { &by_genre[g2] };
                if pool.is_empty() {
                    rng.gen_range(0..N_ITEMS)
                } else {
                    pool[rng.gen_range(0..pool.len())]
                }
            } else {
                rng.gen_range(0..N_ITEMS)
            };
            chosen.insert(pick);
        }
        for item_idx in chosen {
            let it = &items[item_idx];
            let raw = it.quality + bias + normalish(&mut rng, 0.0, 0.45);
            let star = raw.round().clamp(1.0, 5.0) as u8;
            let text = review_text(&mut rng, star, it.genre);
            ts += 1;
            reviews.push(review(
                &format!("user{u:03}"),
                &format!("item{item_idx:03}"),
                star,
                ts,
                &text,
            ));
        }
    }
    reviews
}
