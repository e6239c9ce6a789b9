//! Cold-start recommendation from cross-domain behavior and location traces.
//!
//! The pipeline runs in stages:
//!
//! 1. [`geocode`] turns latitude/longitude pairs into geohash tokens.
//! 2. [`embedding`] builds per-user token sequences, pretrains skip-gram
//!    embeddings and pools them into user vectors.
//! 3. [`relations`] clusters users with k-means and assembles the user groups
//!    and topic-filtered item groups fed to the scorer.
//! 4. [`model`] is the attention twin-tower scorer, its training loop and the
//!    popularity-fused cold-start recommender.
//! 5. [`eval`] computes HR@k / NDCG@k and relevance-conditioned hit rates and
//!    provides the Hot and MaxCov baselines.
//! 6. [`pipeline`] generates synthetic two-domain logs, splits them and
//!    orchestrates the stages end to end.

pub mod embedding;
pub mod error;
pub mod eval;
pub mod geocode;
pub mod ids;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod relations;

pub use error::{Error, Result};
pub use ids::{ItemId, UserId};
