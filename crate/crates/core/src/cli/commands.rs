//! Pipeline stages. Each reads its inputs through the [`Store`] and writes
//! its outputs atomically; every TSV report starts with the
//! `# config_hash=… seed=…` line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cli::config::{Partition, RunConfig};
use crate::cli::store::Store;
use crate::dataset::packets::{encode_packet_log, is_packet_log, packetize};
use crate::dataset::{
    clean, grouped_split, map_labels, parse_samples_from_reader, replay_gateway, stratified_split, synth_generate,
    write_rejects, write_samples, Split,
};
use crate::error::{Error, Result};
use crate::explain::{class_shap_summary, sample_background, stability_report};
use crate::features::{build_feature_table, read_feature_table, write_feature_table, FeatureTable};
use crate::models::{
    binary_auc, class_vocabulary, grid_search, CvResult, GridCandidate, ModelArtifact, ModelKind, ModelSpec,
};

pub const SAMPLES: &str = "samples.csv";
pub const MODEL: &str = "model.json";
pub const GRID_REPORT: &str = "grid_search.tsv";
pub const TEST_REPORT: &str = "test_metrics.tsv";
pub const CONFUSION_REPORT: &str = "confusion.tsv";
pub const AUC_REPORT: &str = "auc.tsv";
pub const SHAP_TOPK_REPORT: &str = "shap_topk.tsv";
pub const SHAP_POOLED_REPORT: &str = "shap_pooled.tsv";
pub const STABILITY_REPORT: &str = "stability.tsv";
pub const SUMMARY: &str = "summary.txt";

pub fn features_name(w: usize, s: usize) -> String {
    format!("features_{w}_{s}.csv")
}

fn model_name(kind: ModelKind, w: usize, s: usize) -> String {
    format!("models/{}_{w}_{s}.json", kind.as_str())
}

fn window_of(spec: &ModelSpec) -> Result<(usize, usize)> {
    match (spec.window_length, spec.step_length) {
        (Some(w), Some(s)) => Ok((w, s)),
        _ => Err(Error::Model("model artifact does not record its window/step".into())),
    }
}

fn load_table(store: &Store, w: usize, s: usize) -> Result<FeatureTable> {
    let name = features_name(w, s);
    let bytes = store.get(&name, "extract")?;
    read_feature_table(bytes.as_slice(), &name)
}

fn split_table(cfg: &RunConfig, table: &FeatureTable) -> Result<Split> {
    let ratios = cfg.split_ratios()?;
    if cfg.split_mode()? {
        grouped_split(table, ratios, cfg.seed()?)
    } else {
        stratified_split(table, ratios, cfg.seed()?)
    }
}

/// Table for one window with its split partitions.
struct Partitioned {
    train: FeatureTable,
    validation: FeatureTable,
    test: FeatureTable,
    train_and_validation: FeatureTable,
}

fn partition(cfg: &RunConfig, store: &Store, w: usize, s: usize) -> Result<Partitioned> {
    let table = load_table(store, w, s)?;
    let split = split_table(cfg, &table)?;
    let mut both: Vec<usize> = split.train.iter().chain(&split.validation).copied().collect();
    both.sort_unstable();
    Ok(Partitioned {
        train: table.select_rows(&split.train),
        validation: table.select_rows(&split.validation),
        test: table.select_rows(&split.test),
        train_and_validation: table.select_rows(&both),
    })
}

impl Partitioned {
    fn get(&self, p: Partition) -> &FeatureTable {
        match p {
            Partition::Train => &self.train,
            Partition::Validation => &self.validation,
            Partition::Test => &self.test,
        }
    }
}

fn load_model(store: &Store, name: &str) -> Result<ModelArtifact> {
    let bytes = store.get(name, "train")?;
    ModelArtifact::read_json(bytes.as_slice(), name)
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Data rows of a report, skipping the `#` header and the column line.
fn report_rows(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split('\t').collect())
}

pub fn ingest(cfg: &RunConfig, store: &mut Store, input: &Path) -> Result<()> {
    let bytes = std::fs::read(input).map_err(|e| Error::io(input, e))?;
    let origin = input.display().to_string();
    let mut report: Vec<(&str, String)> = Vec::new();
    let (samples, rejects) = if is_packet_log(&bytes) {
        let (samples, r) = replay_gateway(&bytes)?;
        report.push(("source", "packet_log".into()));
        report.push(("packets", r.packets.to_string()));
        report.push(("samples_read", r.samples_read.to_string()));
        report.push(("replay_duplicates_removed", r.duplicates_removed.to_string()));
        (samples, Vec::new())
    } else {
        let parsed = parse_samples_from_reader(bytes.as_slice(), &origin, &cfg.parse_options()?)?;
        report.push(("source", "csv".into()));
        report.push(("samples_read", parsed.samples.len().to_string()));
        (parsed.samples, parsed.rejects)
    };
    report.push(("rows_rejected", rejects.len().to_string()));
    let (cleaned, c) = clean(&samples, &cfg.cleaning()?);
    let (mapped, distribution) = map_labels(&cleaned, &cfg.mapping()?)?;
    report.push(("duplicates_removed", c.duplicates_removed.to_string()));
    report.push(("rows_dropped", c.rows_dropped.to_string()));
    report.push(("rows_interpolated", c.rows_interpolated.to_string()));
    report.push(("outliers_clamped", c.outliers_clamped.to_string()));
    report.push(("samples_written", mapped.len().to_string()));

    let mut buf = Vec::new();
    write_samples(&mut buf, &mapped)?;
    store.put(SAMPLES, "ingest", &buf)?;
    let mut buf = Vec::new();
    write_rejects(&mut buf, &rejects)?;
    store.put("rejects.csv", "ingest", &buf)?;

    let mut text = store.header();
    text.push_str("metric\tvalue\n");
    for (k, v) in &report {
        let _ = writeln!(text, "{k}\t{v}");
    }
    store.put("ingest_report.tsv", "ingest", text.as_bytes())?;
    let mut text = store.header();
    text.push_str(&distribution.render());
    store.put("distribution.tsv", "ingest", text.as_bytes())?;
    info!("ingested {} samples ({} rejected rows)", mapped.len(), rejects.len());
    Ok(())
}

pub fn extract(cfg: &RunConfig, store: &mut Store, input: Option<&Path>) -> Result<()> {
    let (bytes, origin) = match input {
        Some(p) => (std::fs::read(p).map_err(|e| Error::io(p, e))?, p.display().to_string()),
        None => (store.get(SAMPLES, "ingest")?, SAMPLES.to_string()),
    };
    let parsed = parse_samples_from_reader(bytes.as_slice(), &origin, &cfg.parse_options()?)?;
    if !parsed.rejects.is_empty() {
        warn!("{origin}: skipped {} malformed rows", parsed.rejects.len());
    }
    let mut text = store.header();
    text.push_str("window_length\tstep_length\tmax_lag\trows\tcolumns\tdegenerate_rows\tfile\n");
    for (w, s) in cfg.windows()? {
        let ec = cfg.extract_config((w, s))?;
        let table = build_feature_table(&parsed.samples, &ec)?;
        let mut buf = Vec::new();
        write_feature_table(&mut buf, &table)?;
        let name = features_name(w, s);
        store.put(&name, "extract", &buf)?;
        let degenerate = table.row_meta.iter().filter(|m| m.degenerate).count();
        let _ = writeln!(
            text,
            "{w}\t{s}\t{}\t{}\t{}\t{degenerate}\t{name}",
            ec.window.max_lag,
            table.n_rows(),
            table.n_cols()
        );
        info!("window {w}/{s}: {} rows x {} columns", table.n_rows(), table.n_cols());
    }
    store.put("extract_report.tsv", "extract", text.as_bytes())
}

fn grid_row(text: &mut String, r: &CvResult, best_in_group: bool, selected: bool) {
    let auc: Vec<f64> = r.folds.iter().filter_map(|m| m.auc_ovr_macro).collect();
    let (auc_mean, auc_std) = if auc.len() == r.folds.len() {
        let m = crate::models::MeanStd::of(&auc);
        (num(m.mean), num(m.std))
    } else {
        (String::new(), String::new())
    };
    let (w, s) = (r.spec.window_length.unwrap_or(0), r.spec.step_length.unwrap_or(0));
    let _ = writeln!(
        text,
        "{}\t{}\t{w}\t{s}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{auc_mean}\t{auc_std}\t{}\t{best_in_group}\t{selected}",
        r.spec.label(),
        r.spec.kind,
        r.spec.params_string(),
        r.accuracy,
        r.precision,
        r.recall,
        r.f1,
        num(r.accuracy.mean),
        num(r.accuracy.std),
        num(r.precision.mean),
        num(r.precision.std),
        num(r.recall.mean),
        num(r.recall.std),
        num(r.f1.mean),
        num(r.f1.std),
        r.folds.len(),
    );
}

pub const GRID_COLUMNS: &str = "label\tmodel\twindow\tstep\thyperparameters\taccuracy\tprecision\trecall\tf1\taccuracy_mean\taccuracy_std\tprecision_mean\tprecision_std\trecall_mean\trecall_std\tf1_mean\tf1_std\tauc_mean\tauc_std\tfolds\tbest_in_group\tselected";

pub fn train(cfg: &RunConfig, store: &mut Store) -> Result<()> {
    let seed = cfg.seed()?;
    let windows = cfg.windows()?;
    let mut parts = Vec::new();
    for &(w, s) in &windows {
        parts.push(partition(cfg, store, w, s)?);
    }
    let grid = cfg.grid()?;
    let mut specs = Vec::new();
    for (i, &(w, s)) in windows.iter().enumerate() {
        for spec in &grid {
            specs.push((spec.clone().with_window(w, s), i));
        }
    }
    let candidates: Vec<GridCandidate<'_>> = specs
        .iter()
        .map(|(spec, i)| GridCandidate {
            spec,
            table: &parts[*i].train,
        })
        .collect();
    info!("grid search over {} configurations, {} folds", candidates.len(), cfg.folds()?);
    let gs = grid_search(&candidates, cfg.folds()?, seed)?;

    // Best configuration per (model kind, window).
    let mut group_best: BTreeMap<(ModelKind, usize, usize), usize> = BTreeMap::new();
    for (i, r) in gs.results.iter().enumerate() {
        let (w, s) = window_of(&r.spec)?;
        let e = group_best.entry((r.spec.kind, w, s)).or_insert(i);
        if r.preference(&gs.results[*e]).is_lt() {
            *e = i;
        }
    }
    let winners: Vec<usize> = group_best.values().copied().collect();

    let mut text = store.header();
    text.push_str(GRID_COLUMNS);
    text.push('\n');
    for (i, r) in gs.results.iter().enumerate() {
        grid_row(&mut text, r, winners.contains(&i), i == gs.best);
    }
    store.put(GRID_REPORT, "train", text.as_bytes())?;

    let mut folds = store.header();
    folds.push_str("label\thyperparameters\tfold\taccuracy\tprecision\trecall\tf1\tauc\n");
    for r in &gs.results {
        for (j, m) in r.folds.iter().enumerate() {
            let _ = writeln!(
                folds,
                "{}\t{}\t{j}\t{}\t{}\t{}\t{}\t{}",
                r.spec.label(),
                r.spec.params_string(),
                num(m.accuracy),
                num(m.precision_macro),
                num(m.recall_macro),
                num(m.f1_macro),
                m.auc_ovr_macro.map(num).unwrap_or_default()
            );
        }
    }
    store.put("grid_folds.tsv", "train", folds.as_bytes())?;

    let include_validation = cfg.include_validation()?;
    for &i in &winners {
        let spec = &gs.results[i].spec;
        let (w, s) = window_of(spec)?;
        let part = &parts[windows.iter().position(|x| *x == (w, s)).unwrap()];
        let fit_table = if include_validation {
            &part.train_and_validation
        } else {
            &part.train
        };
        let classes = class_vocabulary(fit_table)?;
        let artifact = ModelArtifact::fit(spec, fit_table, &classes, seed)?;
        let mut buf = Vec::new();
        artifact.write_json(&mut buf)?;
        store.put(&model_name(spec.kind, w, s), "train", &buf)?;
        if i == gs.best {
            store.put(MODEL, "train", &buf)?;
        }
    }
    info!("selected {} with {}", gs.best().spec.label(), gs.best().spec.params_string());
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, store: &mut Store) -> Result<()> {
    let best = load_model(store, MODEL)?;
    let names = store.names_with_prefix("models/");
    let mut cache: BTreeMap<(usize, usize), Partitioned> = BTreeMap::new();
    let mut text = store.header();
    text.push_str("label\tmodel\twindow\tstep\thyperparameters\taccuracy\tprecision\trecall\tf1\tauc\tselected\n");
    let mut selected_test: Option<(ModelArtifact, (usize, usize))> = None;
    for name in &names {
        let m = load_model(store, name)?;
        let (w, s) = window_of(&m.spec)?;
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry((w, s)) {
            e.insert(partition(cfg, store, w, s)?);
        }
        let metrics = m.evaluate(&cache[&(w, s)].test)?;
        let is_best = m.spec == best.spec;
        let _ = writeln!(
            text,
            "{}\t{}\t{w}\t{s}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}\t{is_best}",
            m.spec.label(),
            m.spec.kind,
            m.spec.params_string(),
            metrics.accuracy,
            metrics.precision_macro,
            metrics.recall_macro,
            metrics.f1_macro,
            metrics.auc_ovr_macro.map(|a| format!("{a:.4}")).unwrap_or_default()
        );
        if is_best {
            selected_test = Some((m, (w, s)));
        }
    }
    store.put(TEST_REPORT, "evaluate", text.as_bytes())?;

    let (m, key) = selected_test.ok_or_else(|| Error::MissingArtifact {
        path: store.dir.join("models"),
        command: "train".into(),
    })?;
    let test = &cache[&key].test;
    let metrics = m.evaluate(test)?;
    let mut text = store.header();
    let _ = writeln!(text, "# model={} {}", m.spec.label(), m.spec.params_string());
    text.push_str("truth\\predicted");
    for c in &m.classes {
        let _ = write!(text, "\t{c}");
    }
    text.push('\n');
    for (c, row) in m.classes.iter().zip(&metrics.confusion) {
        text.push_str(c);
        for v in row {
            let _ = write!(text, "\t{v}");
        }
        text.push('\n');
    }
    store.put(CONFUSION_REPORT, "evaluate", text.as_bytes())?;

    let probs = m.predict_table(test)?;
    let truth = crate::models::encode_labels(test, &m.classes)?;
    let mut text = store.header();
    let _ = writeln!(text, "# model={} {}", m.spec.label(), m.spec.params_string());
    text.push_str("class\tauc\n");
    for (c, class) in m.classes.iter().enumerate() {
        let col: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let pos: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let auc = binary_auc(&col, &pos).map(num).unwrap_or_default();
        let _ = writeln!(text, "{class}\t{auc}");
    }
    let _ = writeln!(text, "macro\t{}", metrics.auc_ovr_macro.map(num).unwrap_or_default());
    store.put(AUC_REPORT, "evaluate", text.as_bytes())?;
    info!("test accuracy {:.4}, macro F1 {:.4}", metrics.accuracy, metrics.f1_macro);
    Ok(())
}

pub fn explain(cfg: &RunConfig, store: &mut Store) -> Result<()> {
    let m = load_model(store, MODEL)?;
    let (w, s) = window_of(&m.spec)?;
    let part = partition(cfg, store, w, s)?;
    let attribution = cfg.attribution()?;
    let background = sample_background(&part.train, cfg.background_size()?, cfg.seed()?);
    info!(
        "explaining {} rows per class against {} background rows",
        attribution.per_class,
        background.len()
    );
    let summary = class_shap_summary(&m, &part.test, &background, &attribution)?;

    let mut text = store.header();
    let _ = writeln!(text, "# model={} {}", m.spec.label(), m.spec.params_string());
    text.push_str("class\trank\tfeature\tmean_abs_shap\n");
    for c in &summary.classes {
        for (r, (f, v)) in c.ranking.iter().take(attribution.top_k).enumerate() {
            let _ = writeln!(text, "{}\t{}\t{f}\t{}", c.class, r + 1, num(*v));
        }
    }
    store.put(SHAP_TOPK_REPORT, "explain", text.as_bytes())?;

    let mut text = store.header();
    let _ = writeln!(text, "# model={} {}", m.spec.label(), m.spec.params_string());
    text.push_str("rank\tfeature\tmean_abs_shap\n");
    for (r, (f, v)) in summary.pooled.iter().enumerate() {
        let _ = writeln!(text, "{}\t{f}\t{}", r + 1, num(*v));
    }
    store.put(SHAP_POOLED_REPORT, "explain", text.as_bytes())
}

pub fn stability(cfg: &RunConfig, store: &mut Store) -> Result<()> {
    let pooled = String::from_utf8_lossy(&store.get(SHAP_POOLED_REPORT, "explain")?).into_owned();
    let mut features = Vec::new();
    for row in report_rows(&pooled).take(cfg.stability_top_features()?) {
        let bad = || Error::Format {
            path: SHAP_POOLED_REPORT.into(),
            line: None,
            msg: "expected rank, feature, mean_abs_shap".into(),
        };
        if row.len() != 3 {
            return Err(bad());
        }
        features.push((row[1].to_string(), row[2].parse::<f64>().map_err(|_| bad())?));
    }
    let m = load_model(store, MODEL)?;
    let (w, s) = window_of(&m.spec)?;
    let part = partition(cfg, store, w, s)?;
    let thresholds = cfg.stability_thresholds()?;
    let (a, b) = cfg.stability_compare()?;
    let entries = stability_report(part.get(a), part.get(b), &features, &thresholds)?;
    let mut text = store.header();
    let _ = writeln!(
        text,
        "# KS {} vs {}; Stable: D < {}, Moderate Stability: D <= {}, Instability: D > {}; Stable is an extrapolated band",
        a.as_str(),
        b.as_str(),
        thresholds.stable_below,
        thresholds.unstable_above,
        thresholds.unstable_above
    );
    text.push_str("feature\tmean_abs_shap\tks_statistic\tcategory\textrapolated\n");
    for e in &entries {
        let _ = writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}",
            e.feature,
            num(e.mean_abs_shap),
            num(e.ks_statistic),
            e.category,
            e.category.is_extrapolated()
        );
    }
    store.put(STABILITY_REPORT, "stability", text.as_bytes())
}

fn fixed4(cell: &str) -> String {
    cell.parse::<f64>().map(|v| format!("{v:.4}")).unwrap_or_else(|_| cell.to_string())
}

pub fn report(cfg: &RunConfig, store: &mut Store) -> Result<()> {
    let read = |name: &str, producer: &str| -> Result<String> {
        Ok(String::from_utf8_lossy(&store.get(name, producer)?).into_owned())
    };
    let grid = read(GRID_REPORT, "train")?;
    let test = read(TEST_REPORT, "evaluate")?;
    let auc = read(AUC_REPORT, "evaluate")?;
    let confusion = read(CONFUSION_REPORT, "evaluate")?;
    let topk = read(SHAP_TOPK_REPORT, "explain")?;
    let stab = read(STABILITY_REPORT, "stability")?;

    let mut out = String::new();
    let _ = writeln!(out, "herdwatch run summary");
    let _ = writeln!(out, "config hash: {}", store.config_hash);
    let _ = writeln!(out, "seed: {}", store.seed);
    let _ = writeln!(out);
    let _ = writeln!(out, "Cross-validated grid search (best configuration per model and window)");
    for row in report_rows(&grid) {
        if row.len() > 21 && row[20] == "true" {
            let mark = if row[21] == "true" { " *" } else { "" };
            let _ = writeln!(
                out,
                "  {}{mark}: accuracy {}, precision {}, recall {}, F1 {}",
                row[0], row[5], row[6], row[7], row[8]
            );
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Held-out test set");
    for row in report_rows(&test) {
        let mark = if row.get(10) == Some(&"true") { " *" } else { "" };
        let _ = writeln!(
            out,
            "  {}{mark}: accuracy {}, precision {}, recall {}, F1 {}, AUC {}",
            row[0], row[5], row[6], row[7], row[8], row[9]
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Selected model confusion matrix (rows: truth)");
    for line in confusion.lines().filter(|l| !l.starts_with('#')) {
        let _ = writeln!(out, "  {}", line.replace('\t', "  "));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Selected model one-vs-rest AUC");
    for row in report_rows(&auc) {
        let _ = writeln!(out, "  {}: {}", row[0], fixed4(row[1]));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Top SHAP features per class");
    let mut current = "";
    for row in report_rows(&topk) {
        if row[0] != current {
            current = row[0];
            let _ = writeln!(out, "  {current}");
        }
        let _ = writeln!(out, "    {}. {} ({})", row[1], row[2], fixed4(row[3]));
    }
    let _ = writeln!(out);
    let (a, b) = cfg.stability_compare()?;
    let _ = writeln!(out, "Feature stability (KS {} vs {})", a.as_str(), b.as_str());
    for row in report_rows(&stab) {
        let flag = if row[4] == "true" { " [extrapolated band]" } else { "" };
        let _ = writeln!(
            out,
            "  {}: mean|SHAP| {}, D {} -> {}{flag}",
            row[0],
            fixed4(row[1]),
            fixed4(row[2]),
            row[3]
        );
    }
    store.put(SUMMARY, "report", out.as_bytes())
}

/// Writes a synthetic herd to `path`, as a sample CSV or as a packet log
/// whose packets arrive in shuffled order.
pub fn synth(cfg: &RunConfig, path: &Path, packets: bool) -> Result<()> {
    let samples = synth_generate(&cfg.synth()?, cfg.seed()?)?;
    let bytes = if packets {
        let mut p = packetize(&samples, 50)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed()?);
        p.shuffle(&mut rng);
        encode_packet_log(&p)?
    } else {
        let mut buf = Vec::new();
        write_samples(&mut buf, &samples)?;
        buf
    };
    crate::cli::store::write_atomic(path, &bytes)?;
    info!("wrote {} synthetic samples to {}", samples.len(), path.display());
    Ok(())
}
