use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use flowlens::dataset::io::{read_ground_truth, read_labeled, read_table, write_ground_truth, write_labeled_csv, Table};
use flowlens::dataset::{drop_identifiers, label_flows, LabeledDataset, MinMaxScaler};
use flowlens::evaluation::{
    crossval_evaluate, evaluate_scores, measure_prediction_time, score_rows, CrossvalOptions,
    EvaluationReport,
};
use flowlens::evaluation::output::{
    merge_timing_csv, read_report_csv, write_report_csv, write_report_jsonl, write_timing_csv,
};
use flowlens::explain::{
    explain_rows, global_ranking, read_ranking_csv, sample_indices, write_explanations_jsonl, write_ranking_csv,
    Budget, ExplainOptions, Method,
};
use flowlens::flow_meter::{extract, read_flow_index, read_pcap, write_flow_index, FeatureSchema, FlowMeterConfig, FlowTimeouts, SchemaName, PcapWriter};
use flowlens::models::{ForestParams, MaxFeatures, MlpParams, ModelKind, ModelSpec, SavedModel};
use flowlens::report::{f1_grouped_svg, ranking_svg, render_reports};
use flowlens::synth::{generate, SynthConfig};
use flowlens::util::{mix_seed, sha256_hex};
use flowlens::{Error, Result};
use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use crate::args::{Command, EvalArgs, ExplainArgs, ExtractArgs, LabelArgs, ModelArgs, ReportArgs, SynthArgs, TrainArgs};

/// Hash of the command name, seed and every non-path parameter.
pub fn config_hash<T: Serialize>(command: &str, seed: u64, params: &T) -> Result<String> {
    let text = serde_json::to_string(&json!({ "command": command, "seed": seed, "params": params }))?;
    Ok(sha256_hex(text.as_bytes())[..16].to_string())
}

pub fn run(command: &Command, seed: u64) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a, seed),
        Command::Extract(a) => extract_cmd(a, seed),
        Command::Label(a) => label(a, seed),
        Command::Train(a) => train(a, seed),
        Command::Eval(a) => eval(a, seed),
        Command::Explain(a) => explain(a, seed),
        Command::Report(a) => report(a),
    }
}

/// `dir/stem.csv` -> `dir/stem<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn synth(a: &SynthArgs, seed: u64) -> Result<()> {
    let cfg = SynthConfig {
        seed,
        benign_sessions: a.benign_sessions,
        dns_queries: a.dns_queries,
        ddos_flows: a.ddos_flows,
        dos_flows: a.dos_flows,
        duration_secs: a.duration,
    };
    let scenario = generate(&cfg);
    let mut w = PcapWriter::new(create(&a.pcap)?)?;
    for p in &scenario.packets {
        w.write_packet(p)?;
    }
    w.finish()?.flush()?;
    let mut t = create(&a.truth)?;
    write_ground_truth(&mut t, &scenario.events)?;
    t.flush()?;
    info!("synth: {} packets, {} events", scenario.packets.len(), scenario.events.len());
    Ok(())
}

fn extract_cmd(a: &ExtractArgs, seed: u64) -> Result<()> {
    let name: SchemaName = a.schema.parse()?;
    for (flag, v) in [("idle-timeout", a.idle_timeout), ("active-timeout", a.active_timeout), ("activity-timeout", a.activity_timeout)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParam(format!("--{flag} must be a positive number of seconds")));
        }
    }
    let config = FlowMeterConfig {
        timeouts: FlowTimeouts { idle_timeout: a.idle_timeout, active_timeout: a.active_timeout },
        activity_timeout: a.activity_timeout,
    };
    let hash = config_hash("extract", seed, a)?;
    let capture = read_pcap(&a.pcap)?;
    let schema = FeatureSchema::builtin(name);
    let (table, spans) = extract(&capture.packets, schema, &config)?;

    let mut w = create(&a.out)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&sibling(&a.out, ".flows.csv"))?;
    write_flow_index(&mut w, &spans)?;
    w.flush()?;
    write_json(
        &sibling(&a.out, ".meta.json"),
        &json!({
            "schema": name.as_str(),
            "schema_version": schema.version,
            "schema_fingerprint": schema.fingerprint(),
            "packets": capture.packets.len(),
            "skipped": {
                "truncated": capture.skipped.truncated,
                "non_ipv4": capture.skipped.non_ipv4,
                "unsupported_protocol": capture.skipped.unsupported_protocol,
            },
            "flows": table.rows.len(),
            "idle_timeout": a.idle_timeout,
            "active_timeout": a.active_timeout,
            "activity_timeout": a.activity_timeout,
            "config_hash": hash,
            "seed": seed,
        }),
    )?;
    if capture.skipped.total() > 0 {
        warn!("skipped {} frames ({:?})", capture.skipped.total(), capture.skipped);
    }
    info!("extract: {} packets -> {} flows", capture.packets.len(), table.rows.len());
    Ok(())
}

fn label(a: &LabelArgs, seed: u64) -> Result<()> {
    let hash = config_hash("label", seed, a)?;
    let table = match read_table(open(&a.features)?)? {
        Table::Unlabeled(t) => t,
        Table::Labeled(_) => return Err(Error::InvalidInput(format!("{} is already labelled", a.features.display()))),
    };
    let flows = a.flows.clone().unwrap_or_else(|| sibling(&a.features, ".flows.csv"));
    let spans = read_flow_index(open(&flows)?)?;
    let events = read_ground_truth(open(&a.truth)?)?;
    let labeling = label_flows(table, &spans, &events)?;
    if labeling.conflicts > 0 {
        warn!("{} flows matched events of different categories; the first event was used", labeling.conflicts);
    }
    let ds = if a.keep_identifiers { labeling.dataset } else { drop_identifiers(labeling.dataset) };
    let mut w = create(&a.out)?;
    write_labeled_csv(&mut w, &ds)?;
    w.flush()?;

    let mut categories: Vec<(String, usize)> = Vec::new();
    for c in &ds.categories {
        match categories.iter_mut().find(|(n, _)| n == c) {
            Some((_, k)) => *k += 1,
            None => categories.push((c.clone(), 1)),
        }
    }
    categories.sort();
    let [benign, attack] = ds.class_counts();
    write_json(
        &sibling(&a.out, ".meta.json"),
        &json!({
            "schema": ds.schema.name.as_str(),
            "rows": ds.len(),
            "benign": benign,
            "attack": attack,
            "categories": categories.into_iter().map(|(k, v)| (k, json!(v))).collect::<serde_json::Map<_, _>>(),
            "conflicts": labeling.conflicts,
            "events": events.len(),
            "config_hash": hash,
            "seed": seed,
        }),
    )?;
    info!("label: {} rows, {benign} benign, {attack} attack", ds.len());
    Ok(())
}

fn max_features(s: &str) -> Result<MaxFeatures> {
    match s {
        "sqrt" => Ok(MaxFeatures::Sqrt),
        "all" => Ok(MaxFeatures::All),
        _ => match s.parse::<f64>() {
            Ok(f) if f > 0.0 && f <= 1.0 => Ok(MaxFeatures::Fraction(f)),
            _ => Err(Error::InvalidParam(format!("--max-features '{s}': expected sqrt, all or a fraction in (0,1]"))),
        },
    }
}

pub fn model_spec(kind: ModelKind, m: &ModelArgs, seed: u64) -> Result<ModelSpec> {
    Ok(match kind {
        ModelKind::Rf => ModelSpec::Rf(ForestParams {
            n_trees: m.trees,
            max_depth: m.max_depth,
            min_samples_split: m.min_samples_split,
            max_features: max_features(&m.max_features)?,
            bootstrap: !m.no_bootstrap,
            balanced: m.balanced,
            seed,
        }),
        ModelKind::Dff => ModelSpec::Dff(MlpParams {
            hidden: m.hidden.clone(),
            learning_rate: m.learning_rate,
            epochs: m.epochs,
            batch_size: m.batch_size,
            balanced: m.balanced,
            seed,
        }),
    })
}

fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let ds = drop_identifiers(read_labeled(open(path)?)?);
    if ds.is_empty() {
        return Err(Error::Empty("labelled dataset"));
    }
    Ok(ds)
}

fn train(a: &TrainArgs, seed: u64) -> Result<()> {
    let kind: ModelKind = a.model_kind.parse()?;
    let spec = model_spec(kind, &a.model, seed)?;
    let hash = config_hash("train", seed, a)?;
    let ds = load_dataset(&a.data)?;
    let x = ds.feature_matrix();
    let scaler = MinMaxScaler::fit(&x)?;
    let model = spec.train(&scaler.transform(&x)?, &ds.labels)?;
    let saved = SavedModel::new(&ds.schema, scaler, model, hash, seed)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    saved.save(&a.out)?;
    info!("train: {kind} on {} rows of {}", ds.len(), ds.schema.name);
    Ok(())
}

fn eval(a: &EvalArgs, seed: u64) -> Result<()> {
    let hash = config_hash("eval", seed, a)?;
    let ds = load_dataset(&a.data)?;
    let dataset = a
        .dataset
        .clone()
        .unwrap_or_else(|| a.data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let report = match (&a.model_kind, &a.model) {
        (Some(kind), None) => {
            let kind: ModelKind = kind.parse()?;
            let spec = model_spec(kind, &a.model_params, seed)?;
            let opts = CrossvalOptions { k: a.folds, seed, timing_rows: a.timing_rows, timing_repeats: a.timing_repeats };
            crossval_evaluate(&ds, &spec, &opts, &dataset, &hash)?
        }
        (None, Some(path)) => {
            if !path.exists() {
                return Err(Error::InvalidInput(format!("{}: no such model file", path.display())));
            }
            let saved = SavedModel::load(path)?;
            saved.check_schema(&ds.schema)?;
            let x = ds.feature_matrix();
            let pipeline = saved.pipeline();
            let mut fold = evaluate_scores(0, 0, &ds.labels, &score_rows(&pipeline, &x))?;
            let timing: Vec<Vec<f64>> = x.iter().take(a.timing_rows.max(1)).cloned().collect();
            fold.prediction_time_micros = measure_prediction_time(&pipeline, &timing, a.timing_repeats)?;
            EvaluationReport::new(&dataset, ds.schema.name.as_str(), saved.model.kind().as_str(), seed, &hash, vec![fold])
        }
        _ => return Err(Error::InvalidParam("give exactly one of --model-kind and --model".into())),
    };
    let reports = [report];
    let mut w = create(&a.out)?;
    write_report_csv(&mut w, &reports)?;
    w.flush()?;
    let mut w = create(&sibling(&a.out, ".jsonl"))?;
    write_report_jsonl(&mut w, &reports)?;
    w.flush()?;
    let mut w = create(&sibling(&a.out, ".timing.csv"))?;
    write_timing_csv(&mut w, &reports)?;
    w.flush()?;
    std::fs::write(sibling(&a.out, ".txt"), render_reports(&reports, true))?;
    let m = &reports[0].mean;
    info!("eval: accuracy {:.4} f1 {:.4} auc {:.4} time {:.3}us", m.accuracy, m.f1, m.auc, m.prediction_time_micros);
    Ok(())
}

fn explain(a: &ExplainArgs, seed: u64) -> Result<()> {
    let hash = config_hash("explain", seed, a)?;
    if !a.model.exists() {
        return Err(Error::InvalidInput(format!("{}: no such model file", a.model.display())));
    }
    let saved = SavedModel::load(&a.model)?;
    let ds = load_dataset(&a.data)?;
    saved.check_schema(&ds.schema)?;
    let method = match &a.method {
        Some(m) => m.parse::<Method>()?,
        None => Method::default_for(&saved.model),
    };
    let budget: Budget = a.budget.parse()?;
    if a.background == 0 || a.samples == 0 {
        return Err(Error::InvalidParam("--background and --samples must be positive".into()));
    }

    // Explanations run on scaled inputs; scaling is per feature, so the
    // attributions equal those of the raw-input pipeline.
    let scaled = saved.scaler.transform(&ds.feature_matrix())?;
    let bg_idx = sample_indices(ds.len(), a.background, mix_seed(seed, 0xb6));
    let row_idx = sample_indices(ds.len(), a.samples, mix_seed(seed, 0x5a));
    let background: Vec<Vec<f64>> = bg_idx.iter().map(|&i| scaled[i].clone()).collect();
    let rows: Vec<Vec<f64>> = row_idx.iter().map(|&i| scaled[i].clone()).collect();
    let opts = ExplainOptions { method, budget, seed };
    let explanations = explain_rows(&saved.model, &rows, &background, &opts)?;
    let worst = explanations.iter().map(|e| e.additivity_gap().abs()).fold(0.0, f64::max);
    let ranking = global_ranking(&explanations, &saved.feature_names)?;

    let mut w = create(&a.out)?;
    write_ranking_csv(&mut w, &ranking)?;
    w.flush()?;
    let mut w = create(&sibling(&a.out, ".jsonl"))?;
    write_explanations_jsonl(&mut w, &explanations, &row_idx, &hash)?;
    w.flush()?;
    write_json(
        &sibling(&a.out, ".meta.json"),
        &json!({
            "schema": ds.schema.name.as_str(),
            "model": saved.model.kind().as_str(),
            "model_config_hash": saved.config_hash,
            "method": method.as_str(),
            "budget": if method == Method::Kernel { Some(budget.to_string()) } else { None },
            "background_rows": bg_idx,
            "explained_rows": row_idx.len(),
            "feature_names": saved.feature_names,
            "config_hash": hash,
            "seed": seed,
        }),
    )?;
    info!("explain: {} rows with {}, max additivity gap {worst:.3e}", rows.len(), method.as_str());
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    if a.reports.is_empty() && a.rankings.is_empty() {
        return Err(Error::Empty("--reports and --rankings"));
    }
    std::fs::create_dir_all(&a.out_dir)?;
    if !a.reports.is_empty() {
        let mut reports = Vec::new();
        let mut with_timing = true;
        for path in &a.reports {
            let mut part = read_report_csv(open(path)?)?;
            let timing = sibling(path, ".timing.csv");
            if timing.exists() {
                merge_timing_csv(open(&timing)?, &mut part)?;
            } else {
                with_timing = false;
            }
            reports.extend(part);
        }
        if reports.is_empty() {
            return Err(Error::Empty("report CSVs"));
        }
        std::fs::write(a.out_dir.join("tables.txt"), render_reports(&reports, with_timing))?;
        std::fs::write(a.out_dir.join("f1.svg"), f1_grouped_svg("F1 score by dataset and feature set", &reports))?;
    }
    for path in &a.rankings {
        let ranking = read_ranking_csv(open(path)?)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "ranking".into());
        let title = format!("Top {} features by mean |SHAP|: {stem}", a.top_k.min(ranking.features.len()));
        std::fs::write(a.out_dir.join(format!("{stem}.svg")), ranking_svg(&title, &ranking, a.top_k))?;
    }
    info!("report: written to {}", a.out_dir.display());
    Ok(())
}
