use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use lhrm::embedding::EmbeddingTable;
use lhrm::model::{AttributeEncoder, Checkpoint};
use lhrm::pipeline::io::{
    catalog_from_text, catalog_to_text, events_from_text, events_to_text, recs_from_text, recs_to_text,
    users_from_text, users_to_text,
};
use lhrm::pipeline::{run_end_to_end, Artifacts, RunConfig};
use lhrm::relations::{groups_from_text, groups_to_text, ClusterModel, ItemGroup, UserGroup};
use lhrm::ItemId;

fn small_config() -> RunConfig {
    let mut cfg = RunConfig { latent_dims: vec![16], epochs: 4, clusters: 10, ..RunConfig::default() };
    cfg.synth.n_users = 1000;
    cfg.synth.n_geo_cells = 10;
    cfg.synth.n_source_items = 400;
    cfg.synth.n_target_items = 150;
    cfg.synth.n_topics = 5;
    cfg.synth.n_destinations = 15;
    cfg
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn small_run_writes_every_artifact_and_beats_popularity() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_end_to_end(&small_config(), dir.path()).unwrap();
    let a = Artifacts::new(dir.path());
    for p in [
        a.config(),
        a.events(),
        a.catalog(),
        a.users(),
        a.source_emb(),
        a.target_emb(),
        a.user_vectors(),
        a.clusters(),
        a.user_groups(),
        a.item_groups(),
        a.user_encoder(),
        a.item_encoder(),
        a.checkpoint(16),
        a.train_log(16),
        a.recs("Hot"),
        a.recs("MaxCov"),
        a.recs("LHRM-16"),
        a.report(),
        a.metrics(),
    ] {
        assert!(p.exists(), "{} missing", p.display());
    }
    let names: Vec<&str> = report.rows.iter().map(|r| r.model.as_str()).collect();
    assert_eq!(names, ["Hot", "MaxCov", "LHRM-16"]);
    assert!(report.hr("LHRM-16", 30).unwrap() > report.hr("Hot", 30).unwrap());
    assert_eq!(read(&a.report()), report.to_table());
    assert_eq!(read(&a.config()), small_config().to_text());
}

#[test]
fn intermediate_files_round_trip_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    run_end_to_end(&small_config(), dir.path()).unwrap();
    let a = Artifacts::new(dir.path());

    let text = read(&a.events());
    assert_eq!(events_to_text(&events_from_text(&text, &a.events()).unwrap()), text);
    let text = read(&a.catalog());
    assert_eq!(catalog_to_text(&catalog_from_text(&text, &a.catalog()).unwrap()), text);
    let text = read(&a.users());
    assert_eq!(users_to_text(&users_from_text(&text, &a.users()).unwrap()), text);
    let text = read(&a.config());
    assert_eq!(RunConfig::parse(&text).unwrap().to_text(), text);

    let mut tables = HashMap::new();
    for (name, p) in [("source", a.source_emb()), ("target", a.target_emb()), ("users", a.user_vectors())] {
        let text = read(&p);
        let t = EmbeddingTable::from_text(&text, &p).unwrap();
        assert_eq!(t.to_text(), text, "{name}");
        tables.insert(name, t);
    }
    let text = read(&a.clusters());
    assert_eq!(ClusterModel::from_text(&text, &a.clusters()).unwrap().to_text(), text);

    let users = &tables["users"];
    let text = read(&a.user_groups());
    let groups: Vec<UserGroup> =
        groups_from_text(&text, &a.user_groups(), |u| users.get(u).map(<[f64]>::to_vec)).unwrap();
    assert_eq!(groups_to_text(&groups), text);
    let target = &tables["target"];
    let text = read(&a.item_groups());
    let groups: Vec<ItemGroup> = groups_from_text(&text, &a.item_groups(), |i| {
        Some(target.get(i).map_or_else(|| vec![0.0; target.dim()], <[f64]>::to_vec))
    })
    .unwrap();
    assert_eq!(groups_to_text(&groups), text);

    for p in [a.user_encoder(), a.item_encoder()] {
        let text = read(&p);
        assert_eq!(AttributeEncoder::from_text(&text).unwrap().to_text(), text);
    }
    let text = read(&a.checkpoint(16));
    assert_eq!(Checkpoint::from_text(&text, &a.checkpoint(16)).unwrap().to_text(), text);
    for m in ["Hot", "MaxCov", "LHRM-16"] {
        let text = read(&a.recs(m));
        assert_eq!(recs_to_text(&recs_from_text(&text, &a.recs(m)).unwrap()), text, "{m}");
    }
}

#[test]
fn planted_cell_preference_reaches_the_top_ten() {
    // With strength 1 every cell clicks a single topic, so a cold user's
    // targets share one topic; that topic should appear in their top 10.
    let mut cfg = small_config();
    cfg.synth.preference_strength = 1.0;
    cfg.synth.source_affinity = 1.0;
    let dir = tempfile::tempdir().unwrap();
    run_end_to_end(&cfg, dir.path()).unwrap();
    let a = Artifacts::new(dir.path());
    let catalog = catalog_from_text(&read(&a.catalog()), &a.catalog()).unwrap();
    let topic = |i: &ItemId| catalog.topic_of(i).unwrap().to_owned();
    let events = events_from_text(&read(&a.events()), &a.events()).unwrap();
    let recs = recs_from_text(&read(&a.recs("LHRM-16")), &a.recs("LHRM-16")).unwrap();

    let mut checked = 0;
    let mut hits = 0;
    for rec in &recs {
        let planted: BTreeSet<String> = events
            .iter()
            .filter(|e| {
                e.user == rec.list.user
                    && e.timestamp >= cfg.cutoff()
                    && catalog.get(&e.item).is_some_and(|c| c.topic.is_some())
            })
            .map(|e| topic(&e.item))
            .collect();
        if planted.len() != 1 {
            continue;
        }
        let class = planted.first().unwrap();
        checked += 1;
        if rec.list.top(10).iter().any(|i| &topic(i) == class) {
            hits += 1;
        }
    }
    assert!(checked > 50, "only {checked} single-topic cold users");
    assert_eq!(hits, checked, "{hits} of {checked} cold users got their planted topic in the top 10");
}

#[test]
fn missing_stage_input_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let err = lhrm::pipeline::pretrain(&small_config(), &Artifacts::new(dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("events.tsv"), "{err}");
}

#[test]
fn ingested_dataset_is_rewritten_unchanged() {
    let src = tempfile::tempdir().unwrap();
    let dst = tempfile::tempdir().unwrap();
    lhrm::pipeline::gen_data(&small_config(), &Artifacts::new(src.path())).unwrap();
    let cfg = RunConfig { data_dir: Some(src.path().to_str().unwrap().to_owned()), ..small_config() };
    lhrm::pipeline::gen_data(&cfg, &Artifacts::new(dst.path())).unwrap();
    for name in ["events.tsv", "catalog.tsv", "users.tsv"] {
        assert_eq!(read(&src.path().join(name)), read(&dst.path().join(name)), "{name}");
    }
}
