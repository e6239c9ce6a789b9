//! The `key=value` run configuration shared by every stage.

use std::fmt::Write as _;
use std::path::Path;

use crate::embedding::SkipGramConfig;
use crate::model::{Optimizer, TrainConfig};
use crate::{Error, Result};

use super::synth::SynthConfig;

/// Every tunable of a run. Unset keys keep their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: SynthConfig,
    /// Read `events.tsv`, `catalog.tsv` and `users.tsv` from here instead of
    /// generating them.
    pub data_dir: Option<String>,
    /// Fraction of the event window before the train cutoff.
    pub train_fraction: f64,
    pub geohash_precision: usize,
    pub emb_dim: usize,
    pub sgns_window: usize,
    pub sgns_negatives: usize,
    pub sgns_epochs: usize,
    pub sgns_learning_rate: f64,
    pub sgns_min_count: u64,
    pub clusters: usize,
    pub kmeans_max_iters: usize,
    /// Group length, target included.
    pub group_len: usize,
    pub n_recall: usize,
    pub hidden: Vec<usize>,
    /// One model is trained per entry.
    pub latent_dims: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: String,
    pub eval_ks: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            synth: SynthConfig::default(),
            data_dir: None,
            train_fraction: 0.8,
            geohash_precision: 5,
            emb_dim: 32,
            sgns_window: 5,
            sgns_negatives: 5,
            sgns_epochs: 5,
            sgns_learning_rate: 0.025,
            sgns_min_count: 1,
            clusters: 50,
            kmeans_max_iters: 100,
            group_len: 10,
            n_recall: 20,
            hidden: vec![64, 32],
            latent_dims: vec![32],
            epochs: 8,
            batch_size: 128,
            learning_rate: 1e-3,
            optimizer: "adam".into(),
            eval_ks: vec![30, 50, 100, 200],
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("`{key}` cannot be `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.synth;
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "n_users" => s.n_users = parse_num(key, value)?,
            "n_geo_cells" => s.n_geo_cells = parse_num(key, value)?,
            "n_source_items" => s.n_source_items = parse_num(key, value)?,
            "n_target_items" => s.n_target_items = parse_num(key, value)?,
            "n_topics" => s.n_topics = parse_num(key, value)?,
            "n_destinations" => s.n_destinations = parse_num(key, value)?,
            "n_categories" => s.n_categories = parse_num(key, value)?,
            "preference_strength" => s.preference_strength = parse_num(key, value)?,
            "source_affinity" => s.source_affinity = parse_num(key, value)?,
            "travel_share" => s.travel_share = parse_num(key, value)?,
            "cold_fraction" => s.cold_fraction = parse_num(key, value)?,
            "source_events_per_user" => s.source_events_per_user = parse_num(key, value)?,
            "target_clicks_per_user" => s.target_clicks_per_user = parse_num(key, value)?,
            "cold_clicks_per_user" => s.cold_clicks_per_user = parse_num(key, value)?,
            "popularity_exponent" => s.popularity_exponent = parse_num(key, value)?,
            "train_neg_ratio" => s.train_neg_ratio = parse_num(key, value)?,
            "valid_neg_ratio" => s.valid_neg_ratio = parse_num(key, value)?,
            "window_secs" => s.window_secs = parse_num(key, value)?,
            "data_dir" => self.data_dir = (!value.is_empty()).then(|| value.to_owned()),
            "train_fraction" => self.train_fraction = parse_num(key, value)?,
            "geohash_precision" => self.geohash_precision = parse_num(key, value)?,
            "emb_dim" => self.emb_dim = parse_num(key, value)?,
            "sgns_window" => self.sgns_window = parse_num(key, value)?,
            "sgns_negatives" => self.sgns_negatives = parse_num(key, value)?,
            "sgns_epochs" => self.sgns_epochs = parse_num(key, value)?,
            "sgns_learning_rate" => self.sgns_learning_rate = parse_num(key, value)?,
            "sgns_min_count" => self.sgns_min_count = parse_num(key, value)?,
            "clusters" => self.clusters = parse_num(key, value)?,
            "kmeans_max_iters" => self.kmeans_max_iters = parse_num(key, value)?,
            "group_len" => self.group_len = parse_num(key, value)?,
            "n_recall" => self.n_recall = parse_num(key, value)?,
            "hidden" => self.hidden = parse_list(key, value)?,
            "latent_dims" => self.latent_dims = parse_list(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "batch_size" => self.batch_size = parse_num(key, value)?,
            "learning_rate" => self.learning_rate = parse_num(key, value)?,
            "optimizer" => self.optimizer = value.to_owned(),
            "eval_ks" => self.eval_ks = parse_list(key, value)?,
            other => return Err(Error::Config(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Defaults overridden by the file's `key=value` lines. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", no + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Canonical text form; `parse(to_text())` gives back the same config.
    pub fn to_text(&self) -> String {
        let s = &self.synth;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
        kv("seed", self.seed.to_string());
        kv("n_users", s.n_users.to_string());
        kv("n_geo_cells", s.n_geo_cells.to_string());
        kv("n_source_items", s.n_source_items.to_string());
        kv("n_target_items", s.n_target_items.to_string());
        kv("n_topics", s.n_topics.to_string());
        kv("n_destinations", s.n_destinations.to_string());
        kv("n_categories", s.n_categories.to_string());
        kv("preference_strength", s.preference_strength.to_string());
        kv("source_affinity", s.source_affinity.to_string());
        kv("travel_share", s.travel_share.to_string());
        kv("cold_fraction", s.cold_fraction.to_string());
        kv("source_events_per_user", s.source_events_per_user.to_string());
        kv("target_clicks_per_user", s.target_clicks_per_user.to_string());
        kv("cold_clicks_per_user", s.cold_clicks_per_user.to_string());
        kv("popularity_exponent", s.popularity_exponent.to_string());
        kv("train_neg_ratio", s.train_neg_ratio.to_string());
        kv("valid_neg_ratio", s.valid_neg_ratio.to_string());
        kv("window_secs", s.window_secs.to_string());
        kv("data_dir", self.data_dir.clone().unwrap_or_default());
        kv("train_fraction", self.train_fraction.to_string());
        kv("geohash_precision", self.geohash_precision.to_string());
        kv("emb_dim", self.emb_dim.to_string());
        kv("sgns_window", self.sgns_window.to_string());
        kv("sgns_negatives", self.sgns_negatives.to_string());
        kv("sgns_epochs", self.sgns_epochs.to_string());
        kv("sgns_learning_rate", self.sgns_learning_rate.to_string());
        kv("sgns_min_count", self.sgns_min_count.to_string());
        kv("clusters", self.clusters.to_string());
        kv("kmeans_max_iters", self.kmeans_max_iters.to_string());
        kv("group_len", self.group_len.to_string());
        kv("n_recall", self.n_recall.to_string());
        kv("hidden", join(&self.hidden));
        kv("latent_dims", join(&self.latent_dims));
        kv("epochs", self.epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("learning_rate", self.learning_rate.to_string());
        kv("optimizer", self.optimizer.clone());
        kv("eval_ks", join(&self.eval_ks));
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        let bad = |msg: &str| Err(Error::Config(msg.to_owned()));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie strictly between 0 and 1");
        }
        if !(1..=crate::geocode::MAX_PRECISION).contains(&self.geohash_precision) {
            return bad("geohash_precision must be between 1 and 12");
        }
        if self.emb_dim == 0 || self.sgns_window == 0 || self.sgns_epochs == 0 {
            return bad("emb_dim, sgns_window and sgns_epochs must be positive");
        }
        if self.clusters == 0 || self.kmeans_max_iters == 0 || self.group_len == 0 {
            return bad("clusters, kmeans_max_iters and group_len must be positive");
        }
        if self.hidden.contains(&0) || self.latent_dims.is_empty() || self.latent_dims.contains(&0) {
            return bad("hidden and latent_dims need positive widths");
        }
        let mut dims = self.latent_dims.clone();
        dims.sort_unstable();
        dims.dedup();
        if dims.len() != self.latent_dims.len() {
            return bad("latent_dims has duplicates");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        self.optimizer()?;
        if self.eval_ks.is_empty() || self.eval_ks.contains(&0) {
            return bad("eval_ks needs positive cutoffs");
        }
        Ok(())
    }

    pub fn optimizer(&self) -> Result<Optimizer> {
        match self.optimizer.as_str() {
            "adam" => Ok(Optimizer::adam()),
            "sgd" => Ok(Optimizer::Sgd),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }

    pub fn skipgram(&self, seed: u64) -> SkipGramConfig {
        SkipGramConfig {
            dim: self.emb_dim,
            window: self.sgns_window,
            negatives: self.sgns_negatives,
            epochs: self.sgns_epochs,
            learning_rate: self.sgns_learning_rate,
            min_count: self.sgns_min_count,
            seed,
        }
    }

    pub fn training(&self, seed: u64) -> Result<TrainConfig> {
        Ok(TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer()?,
            seed,
        })
    }

    /// Largest evaluation cutoff; recommendation lists are this long.
    pub fn max_k(&self) -> usize {
        self.eval_ks.iter().copied().max().unwrap_or(0)
    }

    /// Train cutoff in seconds from the start of the window.
    pub fn cutoff(&self) -> u64 {
        (self.synth.window_secs as f64 * self.train_fraction).round() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = RunConfig::parse("# a comment\n\nseed = 7\nlatent_dims=32,64\noptimizer=sgd\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.latent_dims, vec![32, 64]);
        assert_eq!(cfg.optimizer().unwrap(), Optimizer::Sgd);
        let mut changed = cfg.clone();
        changed.set("data_dir", "some/where").unwrap();
        assert_eq!(RunConfig::parse(&changed.to_text()).unwrap(), changed);
    }

    #[test]
    fn bad_settings_are_config_errors() {
        for text in ["nope=1", "seed=x", "seed", "eval_ks=30,,50"] {
            assert!(matches!(RunConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
        for (k, v) in [("train_fraction", "1"), ("latent_dims", "32,32"), ("optimizer", "rmsprop"), ("eval_ks", "0")] {
            let mut cfg = RunConfig::default();
            cfg.set(k, v).unwrap();
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{k}={v}");
        }
    }
}
