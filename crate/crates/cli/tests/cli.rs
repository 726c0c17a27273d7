use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scalenet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scalenet"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/toy")
}

fn ok(out: &Output) -> String {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

const CONFIG: &str = r#"{"branches":[{"pair":["A","A^T"],"alpha":0.5,"self_loops":"add"}],
    "comb1":"sum","comb2":"last","layers":1,"hidden":8,"agg":"gcn","dropout":0.5,"epochs":40}"#;

const GRID: &str = r#"{"base": {"branches":[{"pair":["AA","A^TA"],"alpha":0.5}],"comb1":"sum","comb2":"last",
    "layers":1,"hidden":8,"agg":"gcn","dropout":0.3,"epochs":30},
    "axes": {"alpha":[0.0, 0.5, 2.0], "batchnorm":[false, true]}}"#;

#[test]
fn stats_on_toy_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = scalenet(
        &[
            "stats",
            "--data",
            toy_dir().to_str().unwrap(),
            "--matrices",
            "A,A^T",
            "--out",
            "s.json",
        ],
        dir.path(),
    );
    let md = ok(&out);
    assert!(md.contains("| A | 2 | 3 | 1 |"), "{md}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(json[1]["matrix"], "A^T");
    assert_eq!(json[1]["no_neigh"], 3);
}

#[test]
fn transform_writes_dumps_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&scalenet(
        &[
            "transform",
            "--data",
            toy_dir().to_str().unwrap(),
            "--scale",
            "2",
            "--policy",
            "remove",
            "--out",
            "t",
        ],
        dir.path(),
    ));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["scale"], 2);
    assert_eq!(manifest["policy"], "remove");
    let names: Vec<&str> = manifest["members"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["AA", "AA^T", "A^TA", "A^TA^T"]);
    // toy edges 0→1, 2→1, 3→2, 4→2, 5→0: AA has 3→1, 4→1, 5→1
    let aa = fs::read_to_string(dir.path().join("t/AA.txt")).unwrap();
    assert_eq!(aa, "6 6 3\n3 1 1\n4 1 1\n5 1 1\n");
    assert_eq!(manifest["members"][0]["nnz"], 3);
}

#[test]
fn train_and_grid_are_reproducible_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&scalenet(
        &[
            "synth",
            "--kind",
            "homophilic",
            "--n",
            "90",
            "--seed",
            "5",
            "--out",
            "ds",
        ],
        p,
    ));
    fs::write(p.join("cfg.json"), CONFIG).unwrap();
    fs::write(p.join("grid.json"), GRID).unwrap();
    for run in ["a", "b"] {
        ok(&scalenet(
            &[
                "train",
                "--data",
                "ds",
                "--config",
                "cfg.json",
                "--seed",
                "3",
                "--out",
                &format!("train_{run}.json"),
            ],
            p,
        ));
        ok(&scalenet(
            &[
                "grid",
                "--data",
                "ds",
                "--config",
                "grid.json",
                "--seed",
                "3",
                "--out",
                &format!("grid_{run}.json"),
            ],
            p,
        ));
    }
    let read = |f: &str| fs::read(p.join(f)).unwrap();
    assert_eq!(read("train_a.json"), read("train_b.json"));
    assert_eq!(read("grid_a.json"), read("grid_b.json"));
    let grid: serde_json::Value = serde_json::from_slice(&read("grid_a.json")).unwrap();
    assert_eq!(grid["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn repeats_report_mean_and_std() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), CONFIG).unwrap();
    let out = scalenet(
        &[
            "train",
            "--data",
            toy_dir().to_str().unwrap(),
            "--config",
            "cfg.json",
            "--repeats",
            "3",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert!(ok(&out).contains("over 3 runs"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(json["runs"].as_array().unwrap().len(), 3);
    assert!(json["std_test_accuracy"].as_f64().unwrap() >= 0.0);
}

#[test]
fn verify_suite_passes_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = scalenet(
        &[
            "verify",
            "--suite",
            "proximity",
            "--csv",
            "h.csv",
            "--out",
            "v.json",
        ],
        dir.path(),
    );
    assert!(ok(&out).contains("PASS"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(
        fs::read_to_string(dir.path().join("h.csv")).unwrap(),
        "seed,n,q,max_dev\n"
    );
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let bad_cfg = scalenet(
        &[
            "train",
            "--data",
            toy_dir().to_str().unwrap(),
            "--config",
            "missing.json",
        ],
        p,
    );
    assert_eq!(bad_cfg.status.code(), Some(1));
    fs::write(p.join("cfg.json"), r#"{"branches":[],"bogus":true}"#).unwrap();
    let unknown_field = scalenet(
        &[
            "train",
            "--data",
            toy_dir().to_str().unwrap(),
            "--config",
            "cfg.json",
        ],
        p,
    );
    assert_eq!(unknown_field.status.code(), Some(1));
    assert_eq!(
        scalenet(&["verify", "--suite", "nonsense"], p)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        scalenet(
            &["synth", "--kind", "homophilic", "--n", "10", "--out", "x"],
            p
        )
        .status
        .code(),
        Some(1)
    );
    assert_eq!(scalenet(&["frobnicate"], p).status.code(), Some(1));

    fs::create_dir(p.join("broken")).unwrap();
    for f in ["graph.tsv", "labels.csv"] {
        fs::copy(toy_dir().join(f), p.join("broken").join(f)).unwrap();
    }
    fs::write(p.join("broken/features.csv"), "0,1\n1,2\n").unwrap();
    let out = scalenet(&["stats", "--data", "broken"], p);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("features.csv:2"));
}
