use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "\
# small enough for a test
n_users = 600
n_geo_cells = 8
n_source_items = 300
n_target_items = 100
n_topics = 4
n_destinations = 10
clusters = 8
epochs = 3
latent_dims = 8
eval_ks = 10,30
";

fn lhrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lhrm")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path) -> String {
    let p = dir.join("small.cfg");
    std::fs::write(&p, CONFIG).unwrap();
    p.to_str().unwrap().to_owned()
}

fn bytes(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn run_all_twice_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = lhrm(&["run-all", "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.contains("LHRM-8") && stdout.contains("HR@30"), "{stdout}");
    }
    for name in ["report.txt", "metrics.kv", "model_8.ckpt", "recs_lhrm-8.tsv"] {
        assert_eq!(bytes(&a, name), bytes(&b, name), "{name}");
    }
    let kv = String::from_utf8(bytes(&a, "metrics.kv")).unwrap();
    assert!(kv.contains("note.seed=7"), "{kv}");
}

#[test]
fn stages_run_one_by_one_match_run_all() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let (staged, whole) = (tmp.path().join("staged"), tmp.path().join("whole"));
    let s = staged.to_str().unwrap();
    let o = lhrm(&["gen-data", "--config", &cfg, "--out", s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // later stages pick up the config saved by gen-data
    for stage in ["pretrain", "cluster", "build-groups", "train", "recommend", "eval"] {
        let o = lhrm(&[stage, "--out", s]);
        assert!(o.status.success(), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = lhrm(&["run-all", "--config", &cfg, "--out", whole.to_str().unwrap()]);
    assert!(o.status.success());
    for name in ["report.txt", "metrics.kv", "model_8.ckpt"] {
        assert_eq!(bytes(&staged, name), bytes(&whole, name), "{name}");
    }
}

#[test]
fn model_and_k_flags_select_rows_and_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("o");
    let o = out.to_str().unwrap();
    for stage in ["gen-data", "pretrain", "cluster", "build-groups", "train"] {
        assert!(lhrm(&[stage, "--config", &cfg, "--out", o]).status.success(), "{stage}");
    }
    assert!(lhrm(&["recommend", "--model", "hot", "--out", o]).status.success());
    assert!(out.join("recs_hot.tsv").exists());
    assert!(!out.join("recs_maxcov.tsv").exists());
    let e = lhrm(&["eval", "--model", "hot", "--k", "5,10", "--out", o]);
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    let table = String::from_utf8(e.stdout).unwrap();
    let header = table.lines().next().unwrap();
    assert!(header.contains("HR@5") && header.contains("NDCG@10") && !header.contains("HR@30"), "{header}");
    assert!(table.contains("Hot") && !table.contains("MaxCov"), "{table}");
    // recommendation lists for lhrm were never written
    assert_eq!(lhrm(&["eval", "--model", "lhrm", "--out", o]).status.code(), Some(2));
}

#[test]
fn exit_codes_follow_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "emb_dim = 0\n").unwrap();
    let o = lhrm(&["gen-data", "--config", bad.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));

    std::fs::write(&bad, "no_such_key = 3\n").unwrap();
    let o = lhrm(&["gen-data", "--config", bad.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(lhrm(&["recommend", "--model", "nope"]).status.code(), Some(1));

    let empty = tmp.path().join("empty");
    let o = lhrm(&["pretrain", "--out", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("events.tsv"));

    assert_eq!(lhrm(&["--help"]).status.code(), Some(0));
}
