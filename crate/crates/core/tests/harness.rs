use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use scalenet_core::error::Error;
use scalenet_core::graph::SelfLoopPolicy;
use scalenet_core::harness::{
    directional_homophily, grid_search, load_dataset, synth_dataset, train, verify, GridSpec,
    NodeDataset, Suite, SynthKind, SynthParams,
};
use scalenet_core::model::ScaleNetConfig;

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy")
}

fn copy_toy(dir: &Path) {
    for f in ["graph.tsv", "features.csv", "labels.csv"] {
        fs::copy(toy_dir().join(f), dir.join(f)).unwrap();
    }
}

fn parse_location(e: Error) -> (String, usize) {
    match e {
        Error::Parse { file, line, .. } => (file, line),
        other => panic!("expected a parse error, got {other}"),
    }
}

#[test]
fn toy_fixture_matches_builtin() {
    let ds = load_dataset(&toy_dir()).unwrap();
    let toy = NodeDataset::toy();
    assert_eq!(ds.graph, toy.graph);
    assert_eq!(ds.features, toy.features);
    assert_eq!(ds.labels, toy.labels);
    assert_eq!(ds.splits, toy.splits);
}

#[test]
fn toy_homophily_counts() {
    let ds = load_dataset(&toy_dir()).unwrap();
    let r = directional_homophily(&ds, "A", SelfLoopPolicy::Keep).unwrap();
    assert_eq!((r.homo, r.hetero, r.no_neigh), (2, 3, 1));
    // in-neighbours: 0<-5, 1<-{0,2}, 2<-{3,4}
    let r = directional_homophily(&ds, "A^T", SelfLoopPolicy::Keep).unwrap();
    assert_eq!((r.homo, r.hetero, r.no_neigh), (1, 2, 3));
}

#[test]
fn bad_feature_value_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    copy_toy(dir.path());
    let text = fs::read_to_string(dir.path().join("features.csv")).unwrap();
    fs::write(
        dir.path().join("features.csv"),
        text.replace("3,0,0,0,1,0,0", "3,0,0,x,1,0,0"),
    )
    .unwrap();
    let e = load_dataset(dir.path()).unwrap_err();
    assert!(e.to_string().contains("features.csv:5"), "{e}");
    assert_eq!(parse_location(e), ("features.csv".into(), 5));
}

#[test]
fn out_of_range_edge_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    copy_toy(dir.path());
    let mut text = fs::read_to_string(dir.path().join("graph.tsv")).unwrap();
    text.push_str("1\t9\n");
    fs::write(dir.path().join("graph.tsv"), text).unwrap();
    assert_eq!(
        parse_location(load_dataset(dir.path()).unwrap_err()),
        ("graph.tsv".into(), 7)
    );
}

#[test]
fn label_errors_are_located() {
    let dir = tempfile::tempdir().unwrap();
    copy_toy(dir.path());
    fs::write(
        dir.path().join("labels.csv"),
        "node_id,label\n0,0\n1,0\n2,zero\n3,1\n4,1\n5,1\n",
    )
    .unwrap();
    assert_eq!(
        parse_location(load_dataset(dir.path()).unwrap_err()),
        ("labels.csv".into(), 4)
    );
    fs::write(
        dir.path().join("labels.csv"),
        "0,0\n1,0\n1,0\n3,1\n4,1\n5,1\n",
    )
    .unwrap();
    assert_eq!(
        parse_location(load_dataset(dir.path()).unwrap_err()),
        ("labels.csv".into(), 3)
    );
}

#[test]
fn ragged_features_rejected() {
    let dir = tempfile::tempdir().unwrap();
    copy_toy(dir.path());
    let text = fs::read_to_string(dir.path().join("features.csv")).unwrap();
    fs::write(
        dir.path().join("features.csv"),
        text.replace("5,0,0,0,0,0,1", "5,0,0,0,0,1"),
    )
    .unwrap();
    assert_eq!(
        parse_location(load_dataset(dir.path()).unwrap_err()),
        ("features.csv".into(), 7)
    );
}

#[test]
fn overlapping_splits_file_rejected() {
    let dir = tempfile::tempdir().unwrap();
    copy_toy(dir.path());
    fs::write(
        dir.path().join("splits.json"),
        r#"{"train":[0,1,3],"val":[3],"test":[5]}"#,
    )
    .unwrap();
    assert!(matches!(
        load_dataset(dir.path()),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::Io { .. })));
}

#[test]
fn save_then_load_round_trips() {
    let ds = synth_dataset(&SynthParams::new(SynthKind::Heterophilic, 90, 3, 4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ds.save(dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn homophily_partitions_nodes_for_every_matrix() {
    let ds = synth_dataset(&SynthParams::new(SynthKind::Homophilic, 120, 4, 2)).unwrap();
    for name in ["A", "A^T", "AA", "AA^T", "A^TA", "A^TA^T"] {
        for policy in [
            SelfLoopPolicy::Keep,
            SelfLoopPolicy::Add,
            SelfLoopPolicy::Remove,
        ] {
            let r = directional_homophily(&ds, name, policy).unwrap();
            assert_eq!(r.total(), ds.n(), "{name} {policy:?}");
        }
    }
}

#[test]
fn grid_rows_are_ranked() {
    let ds = NodeDataset::toy();
    let spec: GridSpec = serde_json::from_str(
        r#"{"base": {"branches":[{"pair":["A","A^T"],"alpha":0.5}],"comb1":"sum","comb2":"last",
            "layers":1,"hidden":8,"agg":"gcn","dropout":0.0,"epochs":30,"seed":0},
            "axes": {"alpha":[0.0, 1.0, 2.0], "self_loops":["add","remove"]}}"#,
    )
    .unwrap();
    let g = grid_search(&ds, &spec, 1).unwrap();
    assert_eq!(g.rows.len(), 6);
    for (k, w) in g.rows.windows(2).enumerate() {
        assert_eq!(w[0].rank, k + 1);
        assert!(w[0].report.val_accuracy >= w[1].report.val_accuracy);
    }
    assert_eq!(g.best.as_ref().unwrap().config_hash, g.rows[0].config_hash);
}

#[test]
fn training_is_seed_deterministic_but_seed_sensitive() {
    let ds = synth_dataset(&SynthParams::new(SynthKind::Homophilic, 80, 3, 9)).unwrap();
    let cfg = ScaleNetConfig {
        dropout: 0.5,
        epochs: 20,
        ..ScaleNetConfig::single_branch("A", "A^T", 0.5, SelfLoopPolicy::Add)
    };
    let a = train(&ds, &cfg, 1).unwrap();
    let json = |r| serde_json::to_string(&r).unwrap();
    assert_eq!(json(&a), json(&train(&ds, &cfg, 1).unwrap()));
    assert_ne!(a.train_loss, train(&ds, &cfg, 2).unwrap().train_loss);
}

#[test]
fn verify_all_passes_quickly() {
    let started = Instant::now();
    let report = verify(Suite::All);
    let failed: Vec<_> = report
        .failures()
        .map(|c| format!("{}/{}: {}", c.suite, c.name, c.detail))
        .collect();
    assert!(report.passed, "{failed:?}");
    assert!(!report.hermitian_rows.is_empty());
    assert!(started.elapsed().as_secs() < 60);
}
