//! Rating prediction from review text.
//!
//! The pipeline: ingest a raw review corpus, normalize review text into
//! tokens, bucket each user's and item's reviews by the star rating they
//! accompany, and compare bucket texts with cosine similarity to predict
//! unseen ratings — either directly (pick the star whose bucket pair agrees
//! most) or as similarity weights inside a user-based collaborative filter.

pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod predictors;
pub mod profiles;
pub mod textnorm;
pub mod vectorspace;

pub use error::{Error, ErrorKind, Result};
