//! Synthetic data, dataset splitting, configuration, artifact files and the
//! end-to-end run.

mod config;
mod data;
pub mod io;
mod run;
mod split;
mod synth;

pub use config::RunConfig;
pub use data::{Action, BehaviorEvent, Catalog, Cohort, Domain, ItemCatalogEntry, UserProfile};
pub use run::{
    build_groups, cluster, evaluate, gen_data, pretrain, recommend, run_end_to_end, train_models, Artifacts, ModelKind,
};
pub use split::{split_dataset, target_facets, DatasetSplit, LabeledInteraction};
pub use synth::{generate_synthetic, topic_name, SynthConfig, SyntheticData};
