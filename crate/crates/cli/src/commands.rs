use std::path::{Path, PathBuf};

use boostal::data::{
    encode, fit_encoder, gen_blobs, gen_friedman1_with_features, load_csv, load_csv_with_classes, write_csv,
    ColumnSchema, Dataset, Labels,
};
use boostal::gbdt::{fit, Loss, Targets, TrainParams};
use boostal::harness::{aggregate_seeds, run_seeds, write_aggregate_csv, write_curves_csv, ExperimentConfig, Strategy};
use boostal::uncertainty::{score_pool, ve_pool, IbugReference, ScoreKind, ScoringContext};
use boostal::FeatureMatrix;
use serde::{Deserialize, Serialize};

use crate::bundle::{IbugRows, ModelBundle, BUNDLE_FORMAT_VERSION};
use crate::{CliError, SynthKind, SynthParams};

type CliResult<T> = Result<T, CliError>;

/// Fails if any target exists and `overwrite` is off; otherwise creates parent directories.
fn prepare_outputs(paths: &[&Path], overwrite: bool) -> CliResult<()> {
    for p in paths {
        if p.exists() && !overwrite {
            return Err(CliError::new(
                "exists",
                format!("{} already exists (pass --overwrite to replace it)", p.display()),
            ));
        }
    }
    for p in paths {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into());
    csv_path.with_file_name(format!("{stem}.schema.json"))
}

/// Writes the dataset CSV and its schema sidecar; returns both paths.
pub fn cmd_synth(kind: SynthKind, params: &SynthParams, out: &Path, overwrite: bool) -> CliResult<(PathBuf, PathBuf)> {
    let p = params;
    let dataset = match kind {
        SynthKind::Blobs => gen_blobs(p.n, p.d, p.classes, p.separation, p.seed)?,
        SynthKind::Friedman1 => gen_friedman1_with_features(p.n, p.features, p.noise_sd, p.seed)?,
    };
    let schema_path = sidecar_path(out);
    prepare_outputs(&[out, &schema_path], overwrite)?;
    write_csv(&dataset, out)?;
    write_file(&schema_path, dataset.schema().to_json_string().as_bytes())?;
    Ok((out.to_path_buf(), schema_path))
}

/// Everything needed to repeat a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: PathBuf,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug)]
pub struct RunOutputs {
    pub curves: PathBuf,
    pub aggregate: PathBuf,
    pub manifest: PathBuf,
}

/// Reads an experiment config, or the config echoed inside a previous run's manifest.
fn read_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::new("json", format!("{}: {e}", path.display())))?;
    let config_value = match value.get("config") {
        Some(inner) if value.get("tool_version").is_some() => inner.clone(),
        _ => value,
    };
    let config: ExperimentConfig = serde_json::from_value(config_value)
        .map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))?;
    Ok(config)
}

pub fn cmd_run(config_path: &Path, out_dir: &Path, seeds: Option<&[u64]>, overwrite: bool) -> CliResult<RunOutputs> {
    let mut config = read_config(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let base = if base.as_os_str().is_empty() { Path::new(".") } else { base };
    let base = std::fs::canonicalize(base).map_err(|e| CliError::io(base, e))?;
    config.dataset = config.dataset.anchored(&base);
    if let Some(s) = seeds {
        config.seeds = s.to_vec();
    }
    config.validate()?;
    let config = config.resolved();

    let outputs = RunOutputs {
        curves: out_dir.join("curves.csv"),
        aggregate: out_dir.join("aggregate.csv"),
        manifest: out_dir.join("manifest.json"),
    };
    prepare_outputs(&[&outputs.curves, &outputs.aggregate, &outputs.manifest], overwrite)?;

    let dataset = config.dataset.load(&base)?;
    let curves = run_seeds(&config, &dataset)?;
    let points = aggregate_seeds(&curves)?;
    let strategy = config.strategy.name();
    let ceal_mode = config.ceal.mode.name();

    let mut curve_csv = Vec::new();
    write_curves_csv(&mut curve_csv, strategy, ceal_mode, &curves)?;
    let mut aggregate_csv = Vec::new();
    write_aggregate_csv(&mut aggregate_csv, strategy, ceal_mode, &points)?;
    let manifest = RunManifest {
        config_path: config_path.to_path_buf(),
        output_dir: out_dir.to_path_buf(),
        seeds: config.seeds.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");

    write_file(&outputs.curves, &curve_csv)?;
    write_file(&outputs.aggregate, &aggregate_csv)?;
    write_file(&outputs.manifest, manifest_json.as_bytes())?;
    Ok(outputs)
}

fn loss_for(dataset: &Dataset) -> Loss {
    match dataset.class_count() {
        Some(2) => Loss::Logistic,
        Some(_) => Loss::Softmax,
        None => Loss::Squared,
    }
}

pub fn cmd_train(
    data: &Path,
    schema_path: &Path,
    params_path: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    overwrite: bool,
) -> CliResult<()> {
    let schema = ColumnSchema::from_json_file(schema_path)?;
    let dataset = load_csv(data, &schema)?;
    let mut params = match params_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str::<TrainParams>(&text)
                .map_err(|e| CliError::new("config", format!("{}: {e}", p.display())))?
        }
        None => TrainParams::default(),
    };
    if let Some(s) = seed {
        params.seed = s;
    }
    params.validate()?;
    prepare_outputs(&[out], overwrite)?;

    let rows: Vec<usize> = (0..dataset.row_count()).filter(|&r| dataset.is_labelled(r)).collect();
    let encoder = fit_encoder(&dataset, &rows, 1.0)?;
    let x: FeatureMatrix = encode(&dataset, &encoder, &rows)?;
    let (model, ibug) = match dataset.labels() {
        Labels::Class { values, names } => {
            let y: Vec<usize> = rows.iter().map(|&r| values[r].expect("labelled")).collect();
            (fit(&x, Targets::Classes { labels: &y, count: names.len() }, &params, loss_for(&dataset))?, None)
        }
        Labels::Regression(values) => {
            let y: Vec<f64> = rows.iter().map(|&r| values[r].expect("labelled")).collect();
            let model = fit(&x, Targets::Real(&y), &params, Loss::Squared)?;
            (model, Some(IbugRows { x, targets: y }))
        }
    };
    let bundle = ModelBundle {
        format_version: BUNDLE_FORMAT_VERSION,
        schema: dataset.schema().clone(),
        class_names: dataset.class_names().map(<[String]>::to_vec),
        encoder,
        model,
        ibug,
    };
    write_file(out, serde_json::to_string(&bundle).expect("bundle serializes").as_bytes())
}

fn load_for_bundle(bundle: &ModelBundle, data: &Path) -> CliResult<(Dataset, FeatureMatrix)> {
    let dataset = load_csv_with_classes(data, &bundle.schema, bundle.class_names.as_deref())?;
    let rows: Vec<usize> = (0..dataset.row_count()).collect();
    let x = encode(&dataset, &bundle.encoder, &rows)?;
    Ok((dataset, x))
}

fn fmt(v: f64) -> String {
    v.to_string()
}

/// `row_index,prediction` plus `p_<class>` columns for classifiers.
pub fn cmd_predict(model_path: &Path, data: &Path, out: &Path, overwrite: bool) -> CliResult<()> {
    let bundle = ModelBundle::load(model_path)?;
    let (_, x) = load_for_bundle(&bundle, data)?;
    prepare_outputs(&[out], overwrite)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    match &bundle.class_names {
        Some(names) => {
            let mut header = vec!["row_index".to_string(), "prediction".to_string()];
            header.extend(names.iter().map(|n| format!("p_{n}")));
            w.write_record(&header)?;
            for (i, row) in x.iter_rows().enumerate() {
                let p = bundle.model.predict_proba(row, None)?;
                let mut rec = vec![i.to_string(), names[boostal::gbdt::argmax(&p)].clone()];
                rec.extend(p.into_iter().map(fmt));
                w.write_record(&rec)?;
            }
        }
        None => {
            w.write_record(["row_index", "prediction"])?;
            for (i, row) in x.iter_rows().enumerate() {
                w.write_record([i.to_string(), fmt(bundle.model.predict(row)?)])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::new("io", e.to_string()))?;
    write_file(out, &bytes)
}

fn parse_strategy(name: &str) -> CliResult<Strategy> {
    serde_json::from_value(serde_json::Value::String(name.to_string())).map_err(|_| {
        let names: Vec<&str> = Strategy::ALL.iter().map(|s| s.name()).collect();
        CliError::new("config", format!("strategy: unknown value {name:?}; expected one of {}", names.join(", ")))
    })
}

/// `row_index,score`, or `row_index,total,data,knowledge` for virtual-ensemble classifier strategies.
pub fn cmd_score(
    model_path: &Path,
    data: &Path,
    strategy: &str,
    ve_members: usize,
    ibug_k: usize,
    out: &Path,
    overwrite: bool,
) -> CliResult<()> {
    let strategy = parse_strategy(strategy)?;
    let kind = strategy.score_kind().ok_or_else(|| {
        CliError::new(
            "config",
            format!("strategy: {} has no per-row score; choose an uncertainty strategy", strategy.name()),
        )
    })?;
    let bundle = ModelBundle::load(model_path)?;
    match kind.requires_classifier() {
        Some(true) if !bundle.model.is_classifier() => {
            return Err(CliError::new("task_mismatch", format!("{} scores need a classification model", kind.name())));
        }
        Some(false) if bundle.model.is_classifier() => {
            return Err(CliError::new("task_mismatch", format!("{} scores need a regression model", kind.name())));
        }
        _ => {}
    }
    let (_, x) = load_for_bundle(&bundle, data)?;
    prepare_outputs(&[out], overwrite)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    if matches!(kind, ScoreKind::VeTotal | ScoreKind::VeData | ScoreKind::VeKnowledge) {
        w.write_record(["row_index", "total", "data", "knowledge"])?;
        for (i, d) in ve_pool(&bundle.model, &x, ve_members)?.into_iter().enumerate() {
            w.write_record([i.to_string(), fmt(d.total), fmt(d.data), fmt(d.knowledge)])?;
        }
    } else {
        let cache = if kind == ScoreKind::Ibug { bundle.leaf_cache()? } else { None };
        let ibug = match (&cache, &bundle.ibug) {
            (Some(cache), Some(rows)) => Some(IbugReference { cache, targets: &rows.targets }),
            _ => None,
        };
        let ctx = ScoringContext { ve_members, ibug_k, ibug };
        w.write_record(["row_index", "score"])?;
        for (i, s) in score_pool(&bundle.model, &x, kind, &ctx)?.into_iter().enumerate() {
            w.write_record([i.to_string(), fmt(s)])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::new("io", e.to_string()))?;
    write_file(out, &bytes)
}
