use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_herdwatch");

const FAST: &[&str] = &[
    "--window",
    "100",
    "--step",
    "50",
    "--set",
    "models=knn,random_forest",
    "--set",
    "grid.knn.n_neighbors=3",
    "--set",
    "grid.knn.p=1",
    "--set",
    "grid.random_forest.n_estimators=10",
    "--set",
    "grid.random_forest.max_depth=None",
    "--set",
    "cv.folds=3",
    "--set",
    "explain.per_class=2",
    "--set",
    "explain.background=5",
    "--set",
    "explain.permutations=1",
    "--set",
    "stability.top_features=5",
];

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stage(cmd: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--seed", "5", "--out", out.to_str().unwrap()];
    args.extend_from_slice(FAST);
    args.extend_from_slice(extra);
    run(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, format: &str) -> PathBuf {
    let path = dir.join(if format == "csv" { "herd.csv" } else { "herd.hwpk" });
    let o = run(&[
        "synth",
        "--seed",
        "5",
        "--format",
        format,
        "--input",
        path.to_str().unwrap(),
        "--set",
        "synth.samples_per_device=30000",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    path
}

#[test]
fn stages_run_in_order_and_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth(dir.path(), "csv");
    let out = dir.path().join("out");
    let input_arg = ["--input", input.to_str().unwrap()];

    assert_eq!(code(&stage("train", &out, &[])), 6, "train before extract");
    for (cmd, extra) in [
        ("ingest", &input_arg[..]),
        ("extract", &[][..]),
        ("train", &[][..]),
        ("evaluate", &[][..]),
        ("explain", &[][..]),
        ("stability", &[][..]),
        ("report", &[][..]),
    ] {
        let o = stage(cmd, &out, extra);
        assert_eq!(code(&o), 0, "{cmd}: {}", stderr(&o));
    }
    for f in [
        "samples.csv",
        "rejects.csv",
        "ingest_report.tsv",
        "distribution.tsv",
        "features_100_50.csv",
        "extract_report.tsv",
        "grid_search.tsv",
        "grid_folds.tsv",
        "model.json",
        "test_metrics.tsv",
        "confusion.tsv",
        "auc.tsv",
        "shap_topk.tsv",
        "shap_pooled.tsv",
        "stability.tsv",
        "summary.txt",
        "manifest.tsv",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let header = fs::read_to_string(out.join("stability.tsv")).unwrap();
    assert!(header.starts_with("# config_hash="));
    assert!(header.contains(" seed=5\n"));
    let stab: Vec<&str> = header.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(stab[0], "feature\tmean_abs_shap\tks_statistic\tcategory\textrapolated");
    assert_eq!(stab.len(), 6);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("Held-out test set"));

    // Different configuration: upstream artifacts belong to another hash.
    let o = stage("train", &out, &["--set", "cv.folds=4"]);
    assert_eq!(code(&o), 7, "{}", stderr(&o));

    // Tampered artifact.
    let model = out.join("model.json");
    let mut bytes = fs::read(&model).unwrap();
    bytes.push(b' ');
    fs::write(&model, bytes).unwrap();
    let o = stage("evaluate", &out, &[]);
    assert_eq!(code(&o), 7, "{}", stderr(&o));
    assert!(stderr(&o).contains("model.json"));
}

#[test]
fn packet_log_and_csv_ingest_agree() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path(), "csv");
    let log = synth(dir.path(), "packets");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&stage("ingest", &a, &["--input", csv.to_str().unwrap()])), 0);
    let o = stage("ingest", &b, &["--input", log.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(a.join("samples.csv")).unwrap(), fs::read(b.join("samples.csv")).unwrap());

    let bytes = fs::read(&log).unwrap();
    let cut = dir.path().join("cut.hwpk");
    fs::write(&cut, &bytes[..bytes.len() - 7]).unwrap();
    let o = stage("ingest", &dir.path().join("c"), &["--input", cut.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn unknown_label_code_is_a_mapping_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("odd.csv");
    let mut text = String::from("device_id,timestamp,acc_x,acc_y,acc_z,label\n");
    for i in 0..20 {
        let label = if i == 7 { "ZZZ" } else { "RES" };
        text.push_str(&format!("cow,{},0.1,0.2,0.9,{label}\n", i * 100));
    }
    fs::write(&input, text).unwrap();
    let out = dir.path().join("out");
    let o = stage("ingest", &out, &["--input", input.to_str().unwrap()]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
    assert!(stderr(&o).contains("ZZZ"));

    // Mapping it through an override file succeeds.
    let map = dir.path().join("map.txt");
    fs::write(&map, "ZZZ=ETC\n").unwrap();
    let o = stage("ingest", &out, &["--input", input.to_str().unwrap(), "--mapping", map.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dist = fs::read_to_string(out.join("distribution.tsv")).unwrap();
    assert!(dist.contains("ETC"));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&["train"])), 2, "missing seed");
    assert_eq!(code(&run(&["extract", "--seed", "1", "--window", "10"])), 2, "window without step");
    assert_eq!(code(&run(&["bogus"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["ingest", "--seed", "1", "--out", out, "--input", "/nonexistent/x.csv"]);
    assert_eq!(code(&o), 3);
    let o = run(&["train", "--seed", "1", "--out", out, "--set", "no.such.key=1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no.such.key"));
}
