//! Stage functions over an output directory. Each stage reads what the
//! previous ones wrote, so any stage can be rerun on its own.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use super::io::{
    catalog_from_text, catalog_to_text, events_from_text, events_to_text, read_text, recs_from_text, recs_to_text,
    users_from_text, users_to_text, write_text, RecLine,
};
use super::split::{split_dataset, target_facets, DatasetSplit, LabeledInteraction};
use super::synth::generate_synthetic;
use super::{Action, BehaviorEvent, Catalog, Cohort, Domain, RunConfig, UserProfile};
use crate::embedding::{build_sequences_at, train_skipgram, user_vector, EmbeddingTable, TokenSequence};
use crate::eval::{baseline_hot, baseline_maxcov, click_counts, ListsByUser, MetricsReport, MetricsRow, RankedList};
use crate::model::{
    train, AttrValue, AttributeEncoder, AttributeVector, CatalogItem, Checkpoint, ColdStartRecommender, ModelParams,
    ModelShape, NewUser, RawAttributes, TrainingSample,
};
use crate::relations::{
    build_user_group, groups_from_text, groups_to_text, i2i_recall, item_group_from_candidates, kmeans,
    user_group_in_cluster, ClusterModel, Group, InteractionMatrix, ItemGroup, UserGroup,
};
use crate::{Error, ItemId, Result, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelKind {
    Hot,
    MaxCov,
    Lhrm,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hot" => Ok(ModelKind::Hot),
            "maxcov" => Ok(ModelKind::MaxCov),
            "lhrm" => Ok(ModelKind::Lhrm),
            other => Err(Error::Validation(format!("unknown model `{other}`"))),
        }
    }
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Hot, ModelKind::MaxCov, ModelKind::Lhrm];

    /// Report row names; one per latent dim for the learned model.
    fn names(&self, cfg: &RunConfig) -> Vec<String> {
        match self {
            ModelKind::Hot => vec!["Hot".into()],
            ModelKind::MaxCov => vec!["MaxCov".into()],
            ModelKind::Lhrm => cfg.latent_dims.iter().map(|d| format!("LHRM-{d}")).collect(),
        }
    }
}

/// File layout of an output directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Artifacts { dir: dir.into() }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn config(&self) -> PathBuf {
        self.file("config.txt")
    }
    pub fn events(&self) -> PathBuf {
        self.file("events.tsv")
    }
    pub fn catalog(&self) -> PathBuf {
        self.file("catalog.tsv")
    }
    pub fn users(&self) -> PathBuf {
        self.file("users.tsv")
    }
    pub fn source_emb(&self) -> PathBuf {
        self.file("source_emb.txt")
    }
    pub fn target_emb(&self) -> PathBuf {
        self.file("target_emb.txt")
    }
    pub fn user_vectors(&self) -> PathBuf {
        self.file("user_vectors.txt")
    }
    pub fn clusters(&self) -> PathBuf {
        self.file("clusters.txt")
    }
    pub fn user_groups(&self) -> PathBuf {
        self.file("user_groups.tsv")
    }
    pub fn item_groups(&self) -> PathBuf {
        self.file("item_groups.tsv")
    }
    pub fn user_encoder(&self) -> PathBuf {
        self.file("user_encoder.txt")
    }
    pub fn item_encoder(&self) -> PathBuf {
        self.file("item_encoder.txt")
    }
    pub fn checkpoint(&self, dim: usize) -> PathBuf {
        self.file(&format!("model_{dim}.ckpt"))
    }
    pub fn train_log(&self, dim: usize) -> PathBuf {
        self.file(&format!("train_log_{dim}.tsv"))
    }
    pub fn recs(&self, model: &str) -> PathBuf {
        self.file(&format!("recs_{}.tsv", model.to_lowercase()))
    }
    pub fn report(&self) -> PathBuf {
        self.file("report.txt")
    }
    pub fn metrics(&self) -> PathBuf {
        self.file("metrics.kv")
    }
}

/// Independent seed for one stage.
fn sub_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stream.wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

struct Data {
    events: Vec<BehaviorEvent>,
    catalog: Catalog,
    users: Vec<UserProfile>,
}

fn load_data(a: &Artifacts) -> Result<Data> {
    let (ev, cat, us) = (a.events(), a.catalog(), a.users());
    Ok(Data {
        events: events_from_text(&read_text(&ev)?, &ev)?,
        catalog: catalog_from_text(&read_text(&cat)?, &cat)?,
        users: users_from_text(&read_text(&us)?, &us)?,
    })
}

fn load_table(path: &Path) -> Result<EmbeddingTable> {
    EmbeddingTable::load(path)
}

fn load_clusters(a: &Artifacts) -> Result<ClusterModel> {
    let p = a.clusters();
    ClusterModel::from_text(&read_text(&p)?, &p)
}

fn vectors_by_user(table: &EmbeddingTable) -> HashMap<UserId, Vec<f64>> {
    table.iter().map(|(u, v)| (UserId::from(u), v.to_vec())).collect()
}

fn cohorts(users: &[UserProfile]) -> HashMap<&UserId, Cohort> {
    users.iter().map(|u| (&u.user, u.cohort)).collect()
}

fn split_of(cfg: &RunConfig, data: &Data) -> Result<DatasetSplit> {
    split_dataset(&data.events, &data.catalog, &data.users, cfg.cutoff())
}

/// Writes the dataset (generated, or read from `data_dir`) and the resolved
/// config.
pub fn gen_data(cfg: &RunConfig, a: &Artifacts) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&a.dir).map_err(|e| Error::io(&a.dir, e))?;
    let data = match &cfg.data_dir {
        Some(dir) => load_data(&Artifacts::new(dir))?,
        None => {
            let d = generate_synthetic(&cfg.synth, cfg.cutoff(), sub_seed(cfg.seed, 1))?;
            Data { events: d.events, catalog: d.catalog, users: d.users }
        }
    };
    log::info!("dataset: {} events, {} users", data.events.len(), data.users.len());
    write_text(&a.config(), &cfg.to_text())?;
    write_text(&a.events(), &events_to_text(&data.events))?;
    write_text(&a.catalog(), &catalog_to_text(&data.catalog))?;
    write_text(&a.users(), &users_to_text(&data.users))
}

fn source_sequences(cfg: &RunConfig, data: &Data) -> Result<Vec<TokenSequence>> {
    let source: Vec<BehaviorEvent> = data.events.iter().filter(|e| e.domain == Domain::Source).cloned().collect();
    build_sequences_at(&source, |i| data.catalog.is_travel_related(i), cfg.geohash_precision)
}

/// Skip-gram tables for both domains and pooled source-domain user vectors.
/// The target table only sees warm users' clicks before the cutoff.
pub fn pretrain(cfg: &RunConfig, a: &Artifacts) -> Result<()> {
    let data = load_data(a)?;
    let cohort = cohorts(&data.users);
    let cutoff = cfg.cutoff();
    let source_seqs = source_sequences(cfg, &data)?;
    let target_events: Vec<BehaviorEvent> = data
        .events
        .iter()
        .filter(|e| {
            e.domain == Domain::Target
                && e.action == Action::Click
                && e.timestamp < cutoff
                && cohort.get(&e.user) == Some(&Cohort::Warm)
        })
        .cloned()
        .collect();
    let target_seqs = build_sequences_at(&target_events, |_| true, cfg.geohash_precision)?;

    let source = train_skipgram(&source_seqs, &cfg.skipgram(sub_seed(cfg.seed, 2)))?;
    let target = train_skipgram(&target_seqs, &cfg.skipgram(sub_seed(cfg.seed, 3)))?;
    log::info!("skip-gram: {} source tokens, {} target items", source.table.len(), target.table.len());
    source.table.save(&a.source_emb())?;
    target.table.save(&a.target_emb())?;

    let rows: Vec<(String, Vec<f64>)> = source_seqs
        .iter()
        .map(|s| user_vector(s, &source.table))
        .filter(|uv| uv.embeddable)
        .map(|uv| (uv.user.0, uv.vec))
        .collect();
    EmbeddingTable::from_rows(cfg.emb_dim, rows)?.save(&a.user_vectors())
}

/// k-means over warm users' vectors.
pub fn cluster(cfg: &RunConfig, a: &Artifacts) -> Result<()> {
    let data = load_data(a)?;
    let cohort = cohorts(&data.users);
    let vectors = load_table(&a.user_vectors())?;
    let warm: Vec<crate::embedding::UserVector> = vectors
        .iter()
        .filter(|(u, _)| cohort.get(&UserId::from(*u)) == Some(&Cohort::Warm))
        .map(|(u, v)| crate::embedding::UserVector { user: u.into(), vec: v.to_vec(), embeddable: true })
        .collect();
    let model = kmeans(&warm, cfg.clusters, cfg.kmeans_max_iters, sub_seed(cfg.seed, 4))?;
    log::info!("k-means: {} users, wcss {:?}", warm.len(), model.wcss_history().last());
    write_text(&a.clusters(), &model.to_text())
}

/// Zero-vector, target-only group for an item the target table never saw.
fn attribute_only_group(item: &ItemId, dim: usize, group_len: usize) -> Result<ItemGroup> {
    Group::new((item.clone(), vec![0.0; dim]), Vec::new(), group_len)
}

/// Item groups for the whole target catalog from i2i recall alone.
fn catalog_item_groups(cfg: &RunConfig, catalog: &Catalog, table: &EmbeddingTable) -> Result<Vec<ItemGroup>> {
    catalog
        .target_items()
        .iter()
        .map(|item| {
            if !table.contains(item.as_str()) {
                return attribute_only_group(item, table.dim(), cfg.group_len);
            }
            let recalled = i2i_recall(item, table, cfg.n_recall)?;
            item_group_from_candidates(item, &recalled, table, |i| catalog.topic_of(i), cfg.group_len)
        })
        .collect()
}

/// User groups for every clustered warm user and every embeddable cold
/// user, plus i2i item groups for the target catalog.
pub fn build_groups(cfg: &RunConfig, a: &Artifacts) -> Result<()> {
    let data = load_data(a)?;
    let clusters = load_clusters(a)?;
    let vectors = vectors_by_user(&load_table(&a.user_vectors())?);
    let target = load_table(&a.target_emb())?;

    let mut groups = Vec::new();
    for u in &data.users {
        let Some(vec) = vectors.get(&u.user) else { continue };
        let group = match clusters.cluster_of(&u.user) {
            Some(_) => build_user_group(&u.user, &clusters, &vectors, cfg.group_len)?,
            None => user_group_in_cluster(&u.user, vec, clusters.nearest(vec), &clusters, &vectors, cfg.group_len)?,
        };
        groups.push(group);
    }
    write_text(&a.user_groups(), &groups_to_text(&groups))?;
    let items = catalog_item_groups(cfg, &data.catalog, &target)?;
    write_text(&a.item_groups(), &groups_to_text(&items))
}

fn user_attributes(u: &UserProfile) -> RawAttributes {
    [("age".to_string(), AttrValue::Num(u.age)), ("gender".to_string(), AttrValue::Cat(u.gender.clone()))].into()
}

fn item_attributes(catalog: &Catalog, item: &ItemId) -> Result<RawAttributes> {
    let e = catalog.get(item).ok_or_else(|| Error::Lookup { kind: "catalog item", id: item.to_string() })?;
    Ok([
        ("category".to_string(), AttrValue::Cat(e.category.clone())),
        ("destination".to_string(), AttrValue::Cat(e.destination.clone().unwrap_or_default())),
        ("topic".to_string(), AttrValue::Cat(e.topic.clone().unwrap_or_default())),
        ("price".to_string(), AttrValue::Num(e.price)),
    ]
    .into())
}

fn load_user_groups(a: &Artifacts, vectors: &HashMap<UserId, Vec<f64>>) -> Result<HashMap<UserId, Arc<UserGroup>>> {
    let p = a.user_groups();
    let groups: Vec<UserGroup> = groups_from_text(&read_text(&p)?, &p, |u| vectors.get(&UserId::from(u)).cloned())?;
    Ok(groups.into_iter().map(|g| (g.target().clone(), Arc::new(g))).collect())
}

/// Encoded attributes of every user and target item, shared between
/// samples.
struct Encoded {
    user_encoder: AttributeEncoder,
    item_encoder: AttributeEncoder,
    users: HashMap<UserId, Arc<AttributeVector>>,
    items: HashMap<ItemId, Arc<AttributeVector>>,
}

fn encode_all(data: &Data, user_encoder: AttributeEncoder, item_encoder: AttributeEncoder) -> Result<Encoded> {
    let users = data
        .users
        .iter()
        .map(|u| Ok((u.user.clone(), Arc::new(user_encoder.encode(&user_attributes(u))?))))
        .collect::<Result<_>>()?;
    let items = data
        .catalog
        .target_items()
        .into_iter()
        .map(|i| {
            let v = item_encoder.encode(&item_attributes(&data.catalog, &i)?)?;
            Ok((i, Arc::new(v)))
        })
        .collect::<Result<_>>()?;
    Ok(Encoded { user_encoder, item_encoder, users, items })
}

fn fit_encoders(data: &Data) -> Result<Encoded> {
    let warm: Vec<RawAttributes> =
        data.users.iter().filter(|u| u.cohort == Cohort::Warm).map(user_attributes).collect();
    let items: Vec<RawAttributes> =
        data.catalog.target_items().iter().map(|i| item_attributes(&data.catalog, i)).collect::<Result<_>>()?;
    encode_all(data, AttributeEncoder::fit(&warm)?, AttributeEncoder::fit(&items)?)
}

fn load_encoders(a: &Artifacts, data: &Data) -> Result<Encoded> {
    let ue = AttributeEncoder::from_text(&read_text(&a.user_encoder())?)?;
    let ie = AttributeEncoder::from_text(&read_text(&a.item_encoder())?)?;
    encode_all(data, ue, ie)
}

/// Labelled samples for `rows`; item groups draw on i2i recall and the
/// training clicks of the user's group.
#[allow(clippy::too_many_arguments)]
fn samples_for(
    cfg: &RunConfig,
    rows: &[LabeledInteraction],
    train_matrix: &InteractionMatrix,
    user_groups: &HashMap<UserId, Arc<UserGroup>>,
    target: &EmbeddingTable,
    catalog: &Catalog,
    enc: &Encoded,
    recall: &HashMap<ItemId, Vec<ItemId>>,
) -> Result<Vec<TrainingSample>> {
    let mut matrix = InteractionMatrix::new();
    for r in rows {
        matrix.insert(r.user.clone(), r.item.clone(), r.clicked);
    }
    let mut samples = Vec::with_capacity(matrix.len());
    let mut skipped = 0usize;
    for (user, item, label) in matrix.iter() {
        let Some(ug) = user_groups.get(user) else {
            skipped += 1;
            continue;
        };
        let ig = match recall.get(item) {
            Some(recalled) => {
                let clicked = ug.members().iter().flat_map(|(u, _)| train_matrix.clicked_by(u));
                item_group_from_candidates(
                    item,
                    recalled.iter().chain(clicked),
                    target,
                    |i| catalog.topic_of(i),
                    cfg.group_len,
                )?
            }
            None => attribute_only_group(item, target.dim(), cfg.group_len)?,
        };
        samples.push(TrainingSample {
            user_group: ug.clone(),
            item_group: Arc::new(ig),
            user_attrs: enc.users[user].clone(),
            item_attrs: enc
                .items
                .get(item)
                .cloned()
                .ok_or_else(|| Error::Lookup { kind: "target item", id: item.to_string() })?,
            label,
        });
    }
    if skipped > 0 {
        log::warn!("{skipped} interactions skipped: their users have no group");
    }
    Ok(samples)
}

/// Fits the attribute encoders and trains one scorer per latent dim.
pub fn train_models(cfg: &RunConfig, a: &Artifacts) -> Result<()> {
    let data = load_data(a)?;
    let split = split_of(cfg, &data)?;
    let target = load_table(&a.target_emb())?;
    let vectors = vectors_by_user(&load_table(&a.user_vectors())?);
    let user_groups = load_user_groups(a, &vectors)?;
    let enc = fit_encoders(&data)?;
    write_text(&a.user_encoder(), &enc.user_encoder.to_text())?;
    write_text(&a.item_encoder(), &enc.item_encoder.to_text())?;

    let mut train_matrix = InteractionMatrix::new();
    for r in &split.train {
        train_matrix.insert(r.user.clone(), r.item.clone(), r.clicked);
    }
    let recall: HashMap<ItemId, Vec<ItemId>> = target
        .tokens()
        .iter()
        .map(|t| {
            let item = ItemId::from(t.as_str());
            let r = i2i_recall(&item, &target, cfg.n_recall)?;
            Ok((item, r))
        })
        .collect::<Result<_>>()?;
    let build = |rows: &[LabeledInteraction]| {
        samples_for(cfg, rows, &train_matrix, &user_groups, &target, &data.catalog, &enc, &recall)
    };
    let train_samples = build(&split.train)?;
    let valid_samples = build(&split.validation)?;
    log::info!("{} training and {} validation samples", train_samples.len(), valid_samples.len());

    for &dim in &cfg.latent_dims {
        let shape = ModelShape {
            emb_dim: cfg.emb_dim,
            user_attr_dim: enc.user_encoder.width(),
            item_attr_dim: enc.item_encoder.width(),
            hidden: cfg.hidden.clone(),
            latent_dim: dim,
        };
        let init = ModelParams::init(&shape, sub_seed(cfg.seed, 100 + dim as u64))?;
        let tcfg = cfg.training(sub_seed(cfg.seed, 200 + dim as u64))?;
        let run = train(&train_samples, &valid_samples, init, &tcfg)?;

        let mut log_text = String::from("epoch\ttrain_loss\tvalid_loss\n");
        for h in &run.history {
            let v = h.valid_loss.map_or(String::new(), |v| v.to_string());
            writeln!(log_text, "{}\t{}\t{v}", h.epoch, h.train_loss).unwrap();
        }
        write_text(&a.train_log(dim), &log_text)?;

        let config: BTreeMap<String, String> = [
            ("seed", cfg.seed.to_string()),
            ("optimizer", cfg.optimizer.clone()),
            ("learning_rate", cfg.learning_rate.to_string()),
            ("epochs", cfg.epochs.to_string()),
            ("batch_size", cfg.batch_size.to_string()),
            ("best_epoch", run.best_epoch.to_string()),
            ("group_len", cfg.group_len.to_string()),
            ("n_recall", cfg.n_recall.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect();
        Checkpoint {
            params: run.params,
            user_schema: enc.user_encoder.schema_hash(),
            item_schema: enc.item_encoder.schema_hash(),
            config,
        }
        .save(&a.checkpoint(dim))?;
    }
    Ok(())
}

fn parse_models(models: &[ModelKind]) -> Vec<ModelKind> {
    let set: BTreeSet<ModelKind> = models.iter().copied().collect();
    if set.is_empty() {
        ModelKind::ALL.to_vec()
    } else {
        set.into_iter().collect()
    }
}

/// Writes one recommendation file per requested model for every test user.
/// An empty `models` means all of them.
pub fn recommend(cfg: &RunConfig, a: &Artifacts, models: &[ModelKind]) -> Result<()> {
    let data = load_data(a)?;
    let split = split_of(cfg, &data)?;
    let catalog_items = data.catalog.target_items();
    let clicks = split.train_clicks();
    let k = cfg.max_k();
    let hot = baseline_hot(&clicks, &catalog_items, k)?;
    let test_users: Vec<&UserId> = split.test.iter().map(|c| &c.user).collect();
    let same_for_all = |list: &RankedList| -> Vec<RecLine> {
        test_users.iter().map(|u| RecLine { list: list.for_user((*u).clone()), fallback: false }).collect()
    };

    for kind in parse_models(models) {
        match kind {
            ModelKind::Hot => write_text(&a.recs("Hot"), &recs_to_text(&same_for_all(&hot)))?,
            ModelKind::MaxCov => {
                let list = baseline_maxcov(&clicks, &catalog_items, k)?;
                write_text(&a.recs("MaxCov"), &recs_to_text(&same_for_all(&list)))?
            }
            ModelKind::Lhrm => recommend_lhrm(cfg, a, &data, &split, &hot)?,
        }
    }
    Ok(())
}

fn recommend_lhrm(cfg: &RunConfig, a: &Artifacts, data: &Data, split: &DatasetSplit, hot: &RankedList) -> Result<()> {
    let source = load_table(&a.source_emb())?;
    let target = load_table(&a.target_emb())?;
    let clusters = load_clusters(a)?;
    let vectors = vectors_by_user(&load_table(&a.user_vectors())?);
    let enc = load_encoders(a, data)?;

    let p = a.item_groups();
    let item_groups: Vec<ItemGroup> = groups_from_text(&read_text(&p)?, &p, |i| {
        target
            .get(i)
            .map(<[f64]>::to_vec)
            .or_else(|| data.catalog.get(&ItemId::from(i)).map(|_| vec![0.0; target.dim()]))
    })?;
    let counts = click_counts(&split.train_clicks());
    let max = counts.values().copied().max().unwrap_or(1).max(1) as f64;
    let catalog: Vec<CatalogItem> = item_groups
        .into_iter()
        .map(|g| {
            let item = g.target().clone();
            Ok(CatalogItem {
                popularity: counts.get(&item).copied().unwrap_or(0) as f64 / max,
                attrs: enc
                    .items
                    .get(&item)
                    .cloned()
                    .ok_or_else(|| Error::Lookup { kind: "target item", id: item.to_string() })?,
                item,
                group: Arc::new(g),
            })
        })
        .collect::<Result<_>>()?;

    let sequences: HashMap<UserId, TokenSequence> =
        source_sequences(cfg, data)?.into_iter().map(|s| (s.owner.clone(), s)).collect();
    let profiles: HashMap<&UserId, &UserProfile> = data.users.iter().map(|u| (&u.user, u)).collect();

    for &dim in &cfg.latent_dims {
        let ck = Checkpoint::load(&a.checkpoint(dim))?;
        if ck.user_schema != enc.user_encoder.schema_hash() || ck.item_schema != enc.item_encoder.schema_hash() {
            return Err(Error::Data(format!("checkpoint for dim {dim} was trained with different encoders")));
        }
        let rec = ColdStartRecommender::new(&ck.params, &catalog, &source, &clusters, &vectors, cfg.group_len, hot)?;
        let mut lines = Vec::with_capacity(split.test.len());
        for case in &split.test {
            let profile = profiles[&case.user];
            let user = NewUser {
                user: case.user.clone(),
                sequence: sequences.get(&case.user).cloned().unwrap_or_else(|| TokenSequence {
                    owner: case.user.clone(),
                    domain: Domain::Source,
                    tokens: Vec::new(),
                }),
                attrs: (*enc.users[&profile.user]).clone(),
            };
            let r = rec.recommend(&user, cfg.max_k())?;
            lines.push(RecLine { list: r.list, fallback: r.fallback });
        }
        let fallbacks = lines.iter().filter(|l| l.fallback).count();
        if fallbacks > 0 {
            log::warn!("LHRM-{dim}: {fallbacks} users fell back to the popularity ranking");
        }
        write_text(&a.recs(&format!("LHRM-{dim}")), &recs_to_text(&lines))?;
    }
    Ok(())
}

/// Scores every requested model's recommendation file and writes the
/// table and key=value reports.
pub fn evaluate(cfg: &RunConfig, a: &Artifacts, models: &[ModelKind]) -> Result<MetricsReport> {
    let data = load_data(a)?;
    let split = split_of(cfg, &data)?;
    let facets = target_facets(&data.catalog);
    let mut report = MetricsReport::new(cfg.eval_ks.clone());
    report.notes.insert("test_users".into(), split.test.len().to_string());
    report.notes.insert("test_targets".into(), split.test.iter().map(|c| c.targets.len()).sum::<usize>().to_string());
    report.notes.insert("excluded_cold_users".into(), split.excluded.len().to_string());
    report.notes.insert("seed".into(), cfg.seed.to_string());

    for kind in parse_models(models) {
        for name in kind.names(cfg) {
            let p = a.recs(&name);
            let recs = recs_from_text(&read_text(&p)?, &p)?;
            let fallbacks = recs.iter().filter(|r| r.fallback).count();
            if kind == ModelKind::Lhrm {
                report.notes.insert(format!("{name}.fallback_users"), fallbacks.to_string());
            }
            let lists: ListsByUser = recs.into_iter().map(|r| (r.list.user.clone(), r.list)).collect();
            report.rows.push(MetricsRow::evaluate(&name, &split.test, &lists, &cfg.eval_ks, &facets)?);
        }
    }
    write_text(&a.report(), &report.to_table())?;
    write_text(&a.metrics(), &report.to_kv())?;
    Ok(report)
}

/// Every stage in order; errors name the stage that failed.
pub fn run_end_to_end(cfg: &RunConfig, out: &Path) -> Result<MetricsReport> {
    let a = Artifacts::new(out);
    gen_data(cfg, &a).map_err(|e| e.in_stage("gen-data"))?;
    pretrain(cfg, &a).map_err(|e| e.in_stage("pretrain"))?;
    cluster(cfg, &a).map_err(|e| e.in_stage("cluster"))?;
    build_groups(cfg, &a).map_err(|e| e.in_stage("build-groups"))?;
    train_models(cfg, &a).map_err(|e| e.in_stage("train"))?;
    recommend(cfg, &a, &[]).map_err(|e| e.in_stage("recommend"))?;
    evaluate(cfg, &a, &[]).map_err(|e| e.in_stage("eval"))
}
