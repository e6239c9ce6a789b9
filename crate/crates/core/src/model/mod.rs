//! Attention twin-tower scorer.
//!
//! Each side pools its group with bilinear attention anchored on the target,
//! appends the encoded attributes and runs an MLP tower; the score is the
//! sigmoid of the two towers' dot product.

mod attrs;
mod checkpoint;
mod network;
mod params;
mod recommend;
mod train;

pub use attrs::{AttrValue, AttributeEncoder, AttributeVector, FieldEncoding, RawAttributes};
pub use checkpoint::Checkpoint;
pub use network::{
    accumulate_gradients, attention, backward, forward, loss, score, sigmoid, tower_output, Attention, ForwardPass,
    TrainingSample, LOGIT_CLIP, PROB_EPS,
};
pub use params::{Dense, Mlp, ModelParams, ModelShape};
pub use recommend::{
    cold_start_recommend, fuse_popularity, CatalogItem, ColdStartRecommender, NewUser, Recommendation, Score,
};
pub use train::{mean_loss, train, EpochStats, Optimizer, TrainConfig, TrainRun};
