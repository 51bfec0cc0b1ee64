use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use taplab_core::classify::{
    lopo_evaluate, nested_cv, permutation_importance, train, Family, Hyperparams, Mode, Model, ModelSpec, Prediction,
    TrainingTable, DEFAULT_BUDGET,
};
use taplab_core::features::{extract_features_with, FEATURE_NAMES};
use taplab_core::ingest::{read_recording, to_csv, to_json, validate_recording, Recording, MIN_DURATION_S};
use taplab_core::linalg::Matrix;
use taplab_core::metrics::{
    baseline_metrics, compute_metrics, confidence_interval, wilcoxon_signed_rank, BaselineKind, MetricSet,
    METRIC_NAMES, NUM_CLASSES,
};
use taplab_core::pca::{
    principal_components, select_components, varimax, FeatureTable, RowKey, Standardizer, VarimaxOptions,
};
use taplab_core::signal::{build_signal, detect_cycles, PeakParams, SignalKind};
use taplab_core::synth::{generate_cohort_recordings, severity_profiles, HandPose};
use taplab_core::tables::{
    cycle_rows, read_features, read_matrix, read_metrics, read_predictions, signal_rows, write_cycles, write_features,
    write_matrix, write_metrics, write_pairs, write_predictions, write_signal, FeatureFile, LabelledMatrix, MetricRow,
    PredictionRow,
};
use taplab_core::{Error, ErrorClass};

use crate::config::{Config, Switch};
use crate::error::CliError;
use crate::plot;
use crate::{
    BaselineArgs, Cli, Command, EvaluateArgs, ModelOpts, PcaArgs, RecordingArgs, ReportArgs, SynthArgs, TrainArgs,
};

struct Ctx {
    cfg: Config,
    seed: u64,
    signal: SignalKind,
    out: PathBuf,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let seed = cfg.resolve_or("seed", cli.seed.as_deref(), 0u64)?;
    let signal = cfg.resolve_or("signal", cli.signal.as_deref(), SignalKind::Distance)?;
    let out: PathBuf = cfg
        .resolve("out", cli.out.as_deref())?
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set `out`".into()))?;
    fs::create_dir_all(&out).map_err(|source| CliError::Io {
        path: out.clone(),
        source,
    })?;
    let ctx = Ctx { cfg, seed, signal, out };
    match &cli.command {
        Command::Synth(a) => synth(&ctx, a),
        Command::Signal(a) => signal_cmd(&ctx, a),
        Command::Features(a) => features(&ctx, a),
        Command::Pca(a) => pca(&ctx, a),
        Command::Train(a) => train_cmd(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Baselines(a) => baselines(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

/// Keeps a video id usable as a file name.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn synth(ctx: &Ctx, a: &SynthArgs) -> Result<(), CliError> {
    let patients: usize = ctx.cfg.resolve_or("patients", a.patients.as_deref(), 4)?;
    let videos: usize = ctx.cfg.resolve_or("videos", a.videos.as_deref(), 2)?;
    let format: String = ctx.cfg.resolve_or("format", a.format.as_deref(), "json".to_string())?;
    let view: String = ctx.cfg.resolve_or("view", a.view.as_deref(), "front".to_string())?;
    let pose = match view.as_str() {
        "front" => HandPose::front(),
        "lateral" => HandPose::lateral(),
        other => return Err(CliError::Config(format!("unknown view `{other}`"))),
    };
    if format != "json" && format != "csv" {
        return Err(CliError::Config(format!("unknown landmark format `{format}`")));
    }
    let recordings = generate_cohort_recordings(&severity_profiles(), patients, videos, ctx.seed, &pose)?;
    for r in &recordings {
        let stem = file_stem(&r.video_id);
        if format == "json" {
            ctx.write(&format!("{stem}.json"), &to_json(r))?;
        } else {
            let (csv, meta) = to_csv(r);
            ctx.write(&format!("{stem}.csv"), &csv)?;
            ctx.write(&format!("{stem}.meta.json"), &meta)?;
        }
    }
    println!("wrote {} recordings to {}", recordings.len(), ctx.out.display());
    Ok(())
}

fn collect_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in paths {
        let meta = fs::metadata(p).map_err(|source| CliError::Io {
            path: p.clone(),
            source,
        })?;
        if meta.is_dir() {
            let entries = fs::read_dir(p).map_err(|source| CliError::Io {
                path: p.clone(),
                source,
            })?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    let name = f.file_name().and_then(|n| n.to_str()).unwrap_or("");
                    (name.ends_with(".json") || name.ends_with(".csv")) && !name.ends_with(".meta.json")
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(Error::InvalidInput("no landmark files found".into()).into());
    }
    Ok(files)
}

fn load_recordings(paths: &[PathBuf]) -> Result<Vec<Recording>, CliError> {
    let files = collect_inputs(paths)?;
    let loaded: Vec<Result<Recording, Error>> = files.par_iter().map(|f| read_recording(f)).collect();
    let mut recordings = Vec::with_capacity(loaded.len());
    for (f, r) in files.iter().zip(loaded) {
        recordings.push(r.map_err(|e| match e {
            Error::Io(source) => CliError::Io {
                path: f.clone(),
                source,
            },
            e => CliError::Core(Error::InvalidInput(format!("{}: {e}", f.display()))),
        })?);
    }
    recordings.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    if let Some(w) = recordings.windows(2).find(|w| w[0].video_id == w[1].video_id) {
        return Err(Error::InvalidInput(format!("duplicate video_id `{}`", w[0].video_id)).into());
    }
    Ok(recordings)
}

fn peak_params(ctx: &Ctx, a: &RecordingArgs) -> Result<PeakParams, CliError> {
    let d = PeakParams::default();
    let p = PeakParams {
        prominence_frac: ctx
            .cfg
            .resolve_or("prominence_frac", a.prominence_frac.as_deref(), d.prominence_frac)?,
        min_separation_s: ctx
            .cfg
            .resolve_or("min_separation_s", a.min_separation_s.as_deref(), d.min_separation_s)?,
    };
    if !(0.0..1.0).contains(&p.prominence_frac) || p.min_separation_s.is_nan() || p.min_separation_s <= 0.0 {
        return Err(CliError::Config(
            "prominence_frac must be in [0, 1) and min_separation_s positive".into(),
        ));
    }
    Ok(p)
}

/// Short code for a per-recording failure that does not stop a batch.
fn failure_code(e: &Error) -> Option<&'static str> {
    match e {
        Error::InsufficientCycles { .. } => Some("insufficient_cycles"),
        Error::DegenerateGeometry { .. } => Some("degenerate_geometry"),
        Error::DegenerateCycles(_) => Some("degenerate_cycles"),
        _ => None,
    }
}

struct SignalOutput {
    signal_csv: String,
    cycles: Result<(String, String), Error>,
}

fn signal_cmd(ctx: &Ctx, a: &RecordingArgs) -> Result<(), CliError> {
    let recordings = load_recordings(&a.inputs)?;
    let params = peak_params(ctx, a)?;
    let outputs: Vec<Result<SignalOutput, Error>> = recordings
        .par_iter()
        .map(|r| {
            let s = build_signal::<f64>(r, ctx.signal)?;
            let first = r.first_index();
            let signal_csv = write_signal(&signal_rows(&s, first));
            let cycles = detect_cycles(&s, &params).map(|c| {
                let pts: Vec<(f64, f64)> = s.samples.iter().enumerate().map(|(i, &v)| (s.time(i), v)).collect();
                let peaks: Vec<(f64, f64)> = c.peak_indices.iter().map(|&i| (s.time(i), s.samples[i])).collect();
                let svg = plot::line_chart(
                    &r.video_id,
                    "time (s)",
                    ctx.signal.as_str(),
                    &[(ctx.signal.as_str(), pts)],
                    &peaks,
                );
                (write_cycles(&cycle_rows(&c, first)), svg)
            });
            Ok(SignalOutput { signal_csv, cycles })
        })
        .collect();
    let mut rejected = Vec::new();
    let mut first_failure = None;
    let mut written = 0;
    for (r, out) in recordings.iter().zip(outputs) {
        let stem = file_stem(&r.video_id);
        let out = match out {
            Ok(o) => o,
            Err(e) => match failure_code(&e) {
                Some(code) => {
                    rejected.push((r.video_id.clone(), code.to_string()));
                    first_failure.get_or_insert(e);
                    continue;
                }
                None => return Err(e.into()),
            },
        };
        ctx.write(&format!("{stem}.signal.csv"), &out.signal_csv)?;
        match out.cycles {
            Ok((cycles, svg)) => {
                ctx.write(&format!("{stem}.cycles.csv"), &cycles)?;
                ctx.write(&format!("{stem}.signal.svg"), &svg)?;
                written += 1;
            }
            Err(e) => match failure_code(&e) {
                Some(code) => {
                    rejected.push((r.video_id.clone(), code.to_string()));
                    first_failure.get_or_insert(e);
                }
                None => return Err(e.into()),
            },
        }
    }
    ctx.write("rejected.csv", &write_pairs(["video_id", "reason"], &rejected))?;
    if written == 0 {
        if let Some(e) = first_failure {
            return Err(e.into());
        }
    }
    println!("{written} of {} recordings segmented into cycles", recordings.len());
    Ok(())
}

fn features(ctx: &Ctx, a: &RecordingArgs) -> Result<(), CliError> {
    let recordings = load_recordings(&a.inputs)?;
    let params = peak_params(ctx, a)?;
    let results: Vec<Result<Option<[f64; 13]>, Error>> = recordings
        .par_iter()
        .map(|r| {
            if !validate_recording(r, MIN_DURATION_S).eligible {
                return Ok(None);
            }
            let s = build_signal::<f64>(r, ctx.signal)?;
            Ok(Some(extract_features_with(&s, &params)?.to_array()))
        })
        .collect();
    let mut keys = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    let mut first_failure = None;
    for (r, res) in recordings.iter().zip(results) {
        match res {
            Ok(Some(v)) => {
                keys.push(RowKey::new(r.video_id.clone(), r.patient_id.clone()));
                labels.push(r.label().ok());
                rows.push(v);
            }
            Ok(None) => {
                let report = validate_recording(r, MIN_DURATION_S);
                let codes: Vec<&str> = report.reasons.iter().map(|c| c.code()).collect();
                rejected.push((r.video_id.clone(), codes.join(";")));
            }
            Err(e) => match failure_code(&e) {
                Some(code) => {
                    rejected.push((r.video_id.clone(), code.to_string()));
                    first_failure.get_or_insert(e);
                }
                None => return Err(e.into()),
            },
        }
    }
    ctx.write("rejected.csv", &write_pairs(["video_id", "reason"], &rejected))?;
    if rows.is_empty() {
        return Err(first_failure
            .unwrap_or_else(|| Error::InvalidInput("no recording is eligible for analysis".into()))
            .into());
    }
    let columns = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let table = FeatureTable::new(columns, keys, Matrix::from_rows(&rows))?;
    ctx.write("features.csv", &write_features(&FeatureFile { table, labels }))?;
    println!("{} feature rows, {} rejected", rows.len(), rejected.len());
    Ok(())
}

fn read_feature_file(path: &Path) -> Result<FeatureFile<f64>, CliError> {
    read_features::<f64>(&read_text(path)?).map_err(|e| match e {
        Error::Parse { record, message } => Error::Parse {
            record: format!("{}: {record}", path.display()),
            message,
        }
        .into(),
        e => e.into(),
    })
}

fn read_training(path: &Path) -> Result<TrainingTable<f64>, CliError> {
    Ok(read_feature_file(path)?.into_training()?)
}

fn pca(ctx: &Ctx, a: &PcaArgs) -> Result<(), CliError> {
    let mut table = read_feature_file(&a.features)?.table;
    let mut excluded = Vec::new();
    let standardizer = loop {
        match Standardizer::fit(&table) {
            Ok(s) => break s,
            Err(Error::ZeroVariance { column }) if table.n_cols() > 1 => {
                let keep: Vec<usize> = (0..table.n_cols()).filter(|&c| table.columns[c] != column).collect();
                table = FeatureTable::new(
                    keep.iter().map(|&c| table.columns[c].clone()).collect(),
                    table.keys.clone(),
                    table.data.select_cols(&keep),
                )?;
                excluded.push((column, "zero_variance".to_string()));
            }
            Err(e) => return Err(e.into()),
        }
    };
    let z = standardizer.apply(&table);
    let lm = principal_components(&z)?;
    let p = lm.eigenvalues.len();
    let k: usize = match ctx.cfg.resolve::<usize>("components", a.components.as_deref())? {
        Some(k) => k,
        None => select_components(&lm.explained_variance_ratio),
    };
    let rot = varimax(&lm, k, &VarimaxOptions::default())?;

    let names = |prefix: &str, n: usize| (1..=n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
    let cum = lm.cumulative_ratio();
    let ev_rows: Vec<[f64; 3]> = (0..p)
        .map(|i| [lm.eigenvalues[i], lm.explained_variance_ratio[i], cum[i]])
        .collect();
    ctx.write(
        "explained_variance.csv",
        &write_matrix(&LabelledMatrix {
            corner: "component".into(),
            row_labels: names("PC", p),
            columns: vec!["eigenvalue".into(), "ratio".into(), "cumulative".into()],
            data: Matrix::from_rows(&ev_rows),
        }),
    )?;
    ctx.write(
        "loadings.csv",
        &write_matrix(&LabelledMatrix {
            corner: "feature".into(),
            row_labels: table.columns.clone(),
            columns: names("PC", p),
            data: lm.loadings.clone(),
        }),
    )?;
    ctx.write(
        "rotated_loadings.csv",
        &write_matrix(&LabelledMatrix {
            corner: "feature".into(),
            row_labels: table.columns.clone(),
            columns: names("RC", k),
            data: rot.loadings.clone(),
        }),
    )?;
    let history: Vec<[f64; 1]> = rot.criterion_history.iter().map(|&v| [v]).collect();
    ctx.write(
        "varimax.csv",
        &write_matrix(&LabelledMatrix {
            corner: "sweep".into(),
            row_labels: (0..history.len()).map(|i| i.to_string()).collect(),
            columns: vec!["criterion".into()],
            data: Matrix::from_rows(&history),
        }),
    )?;
    ctx.write("excluded_features.csv", &write_pairs(["feature", "reason"], &excluded))?;
    ctx.write("scree.svg", &plot::scree(&lm.explained_variance_ratio))?;
    let values: Vec<Vec<f64>> = (0..rot.loadings.rows()).map(|r| rot.loadings.row(r).to_vec()).collect();
    ctx.write(
        "loadings.svg",
        &plot::heatmap("Varimax-rotated loadings", &table.columns, &names("RC", k), &values),
    )?;
    println!(
        "{k} of {p} components retained ({:.2}% variance); varimax {} after {} sweeps",
        100.0 * cum[k - 1],
        if rot.converged { "converged" } else { "stopped" },
        rot.iterations
    );
    Ok(())
}

fn family_mode(ctx: &Ctx, o: &ModelOpts) -> Result<(Family, Mode), CliError> {
    Ok((
        ctx.cfg.resolve_or("family", o.family.as_deref(), Family::Logistic)?,
        ctx.cfg.resolve_or("mode", o.mode.as_deref(), Mode::Multiclass)?,
    ))
}

/// Defaults for the family, overridden by any hyperparameter flags or config keys.
fn hyperparams(ctx: &Ctx, o: &ModelOpts, family: Family, n_features: usize) -> Result<Hyperparams, CliError> {
    let c = &ctx.cfg;
    let mut hp = Hyperparams::default_for(family, n_features);
    match &mut hp {
        Hyperparams::Logistic(p) => {
            p.l2 = c.resolve_or("l2", o.l2.as_deref(), p.l2)?;
            p.class_weight = c
                .resolve_or("class_weight", o.class_weight.as_deref(), Switch(p.class_weight))?
                .0;
        }
        Hyperparams::RandomForest(p) => {
            p.n_trees = c.resolve_or("trees", o.trees.as_deref(), p.n_trees)?;
            p.max_depth = c.resolve_or("depth", o.depth.as_deref(), p.max_depth)?;
            p.min_leaf = c.resolve_or("min_leaf", o.min_leaf.as_deref(), p.min_leaf)?;
            p.max_features = c.resolve_or("max_features", o.max_features.as_deref(), p.max_features)?;
            p.class_weight = c
                .resolve_or("class_weight", o.class_weight.as_deref(), Switch(p.class_weight))?
                .0;
        }
    }
    hp.validate(n_features)?;
    Ok(hp)
}

fn budget(ctx: &Ctx, o: &ModelOpts) -> Result<usize, CliError> {
    ctx.cfg.resolve_or("budget", o.budget.as_deref(), DEFAULT_BUDGET)
}

fn train_cmd(ctx: &Ctx, a: &TrainArgs) -> Result<(), CliError> {
    let t = read_training(&a.features)?;
    let (family, mode) = family_mode(ctx, &a.model)?;
    let hyperparams = if a.tune {
        nested_cv(&t, family, mode, budget(ctx, &a.model)?, ctx.seed)?.best
    } else {
        hyperparams(ctx, &a.model, family, t.features.n_cols())?
    };
    let spec = ModelSpec {
        mode,
        hyperparams,
        seed: ctx.seed,
    };
    let model = train(&spec, &t)?;
    ctx.write("model.json", &model.to_json())?;
    println!("trained {family} {mode} model on {} rows", t.n_rows());
    Ok(())
}

fn metric_values(m: &MetricSet<f64>) -> [f64; 5] {
    m.to_array()
}

fn labels_of(p: &[Prediction<f64>]) -> Vec<u8> {
    p.iter().map(|p| p.label).collect()
}

fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<(), CliError> {
    let t = read_training(&a.features)?;
    let (family, mode) = family_mode(ctx, &a.model)?;
    let cv: String = ctx.cfg.resolve_or("cv", a.cv.as_deref(), "lopo".to_string())?;
    let repeats: usize = ctx.cfg.resolve_or("repeats", a.repeats.as_deref(), 20)?;
    let name = format!("{family}-{mode}");

    let mut predictions: Vec<Option<Prediction<f64>>> = vec![None; t.n_rows()];
    let mut fold_of = vec![String::new(); t.n_rows()];
    let mut fold_metrics: Vec<MetricSet<f64>> = Vec::new();
    let final_hp = match cv.as_str() {
        "lopo" => {
            let hp = hyperparams(ctx, &a.model, family, t.features.n_cols())?;
            let spec = ModelSpec {
                mode,
                hyperparams: hp,
                seed: ctx.seed,
            };
            let res = lopo_evaluate(&t, &spec)?;
            for f in &res.folds {
                let truth: Vec<u8> = f.test_rows.iter().map(|&r| t.labels[r]).collect();
                let pred: Vec<u8> = f.test_rows.iter().map(|&r| res.predictions[r].label).collect();
                fold_metrics.push(compute_metrics(&truth, &pred, NUM_CLASSES)?);
                for &r in &f.test_rows {
                    fold_of[r] = f.patient.clone();
                }
            }
            for (slot, p) in predictions.iter_mut().zip(res.predictions) {
                *slot = Some(p);
            }
            hp
        }
        "nested" => {
            let res = nested_cv(&t, family, mode, budget(ctx, &a.model)?, ctx.seed)?;
            let mut tuning = Vec::new();
            for (i, f) in res.folds.iter().enumerate() {
                fold_metrics.push(f.metrics);
                for (&r, p) in f.test_rows.iter().zip(&f.predictions) {
                    predictions[r] = Some(*p);
                    fold_of[r] = format!("fold{}", i + 1);
                }
                tuning.push((format!("fold{}", i + 1), hp_json(&f.hyperparams)));
            }
            tuning.push(("best".into(), hp_json(&res.best)));
            ctx.write("hyperparams.csv", &write_pairs(["fold", "hyperparams"], &tuning))?;
            res.best
        }
        other => return Err(CliError::Config(format!("unknown cv mode `{other}`"))),
    };
    let predictions: Vec<Prediction<f64>> = predictions
        .into_iter()
        .map(|p| p.expect("every row predicted"))
        .collect();

    let mut order: Vec<usize> = (0..t.n_rows()).collect();
    order.sort_by(|&x, &y| t.features.keys[x].video_id.cmp(&t.features.keys[y].video_id));
    let rows: Vec<PredictionRow<f64>> = order
        .iter()
        .map(|&r| PredictionRow {
            video_id: t.features.keys[r].video_id.clone(),
            truth: t.labels[r],
            prediction: predictions[r],
        })
        .collect();
    ctx.write("predictions.csv", &write_predictions(&rows))?;
    let folds: Vec<(String, String)> = order
        .iter()
        .map(|&r| (t.features.keys[r].video_id.clone(), fold_of[r].clone()))
        .collect();
    ctx.write("folds.csv", &write_pairs(["video_id", "fold"], &folds))?;

    let pooled = compute_metrics::<f64>(&t.labels, &labels_of(&predictions), NUM_CLASSES)?;
    let mut metric_rows = summarize(&name, &fold_metrics)?;
    metric_rows.extend(METRIC_NAMES.iter().zip(metric_values(&pooled)).map(|(m, v)| MetricRow {
        model: format!("{name}-pooled"),
        metric: m.to_string(),
        value: v,
        ci: None,
    }));
    ctx.write("metrics.csv", &write_metrics(&metric_rows))?;
    ctx.write("metrics.svg", &metrics_chart(&metric_rows))?;

    let spec = ModelSpec {
        mode,
        hyperparams: final_hp,
        seed: ctx.seed,
    };
    let model: Model<f64> = train(&spec, &t)?;
    let importance = permutation_importance(&model, &t, repeats, ctx.seed)?;
    let imp_rows: Vec<[f64; 1]> = importance.iter().map(|&v| [v]).collect();
    ctx.write(
        "importance.csv",
        &write_matrix(&LabelledMatrix {
            corner: "feature".into(),
            row_labels: t.features.columns.clone(),
            columns: vec!["importance".into()],
            data: Matrix::from_rows(&imp_rows),
        }),
    )?;
    println!(
        "{name} ({cv}): accuracy {:.2}, balanced {:.2}, acceptable {:.2}",
        pooled.accuracy, pooled.balanced_accuracy, pooled.acceptable_accuracy
    );
    Ok(())
}

fn hp_json(h: &Hyperparams) -> String {
    serde_json::to_string(h).expect("hyperparameters serialize")
}

/// Mean of each metric over folds with its 95% interval (when there are 2+ folds).
fn summarize(name: &str, folds: &[MetricSet<f64>]) -> Result<Vec<MetricRow>, CliError> {
    let mut rows = Vec::new();
    for (i, m) in METRIC_NAMES.iter().enumerate() {
        let values: Vec<f64> = folds.iter().map(|f| metric_values(f)[i]).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let ci = if values.len() >= 2 {
            Some(confidence_interval(&values)?)
        } else {
            None
        };
        rows.push(MetricRow {
            model: name.to_string(),
            metric: m.to_string(),
            value: mean,
            ci,
        });
    }
    Ok(rows)
}

fn metrics_chart(rows: &[MetricRow]) -> String {
    let mut models: Vec<&str> = Vec::new();
    for r in rows {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let series: Vec<plot::BarSeries> = models
        .iter()
        .map(|m| {
            let find = |metric: &str| rows.iter().find(|r| r.model == *m && r.metric == metric);
            plot::BarSeries {
                name: m.to_string(),
                values: METRIC_NAMES.iter().map(|n| find(n).map_or(0.0, |r| r.value)).collect(),
                ci: METRIC_NAMES.iter().map(|n| find(n).and_then(|r| r.ci)).collect(),
            }
        })
        .collect();
    let groups = ["accuracy", "balanced", "acceptable", "precision", "F1"];
    plot::grouped_bars("Classification metrics", &groups, &series)
}

fn baseline_rows(counts: &[usize]) -> Result<Vec<MetricRow>, CliError> {
    let mut rows = Vec::new();
    for (name, kind) in [
        ("majority", BaselineKind::Majority),
        ("random_guess", BaselineKind::RandomGuess),
    ] {
        let m = baseline_metrics::<f64>(counts, kind)?;
        rows.extend(
            METRIC_NAMES
                .iter()
                .zip(metric_values(&m))
                .map(|(metric, value)| MetricRow {
                    model: name.into(),
                    metric: metric.to_string(),
                    value,
                    ci: None,
                }),
        );
    }
    Ok(rows)
}

fn label_counts(f: &FeatureFile<f64>) -> Vec<usize> {
    let mut counts = vec![0; NUM_CLASSES];
    for l in f.labels.iter().flatten() {
        counts[usize::from(*l)] += 1;
    }
    counts
}

fn baselines(ctx: &Ctx, a: &BaselineArgs) -> Result<(), CliError> {
    let counts: Vec<usize> = match (ctx.cfg.resolve::<String>("counts", a.counts.as_deref())?, &a.features) {
        (Some(raw), _) => {
            let parsed: Result<Vec<usize>, _> = raw.split(',').map(|s| s.trim().parse::<usize>()).collect();
            match parsed {
                Ok(c) if c.len() == NUM_CLASSES => c,
                _ => {
                    return Err(CliError::Config(format!(
                        "counts must be {NUM_CLASSES} comma-separated integers"
                    )))
                }
            }
        }
        (None, Some(path)) => label_counts(&read_feature_file(path)?),
        (None, None) => return Err(CliError::Config("pass --counts or a feature table".into())),
    };
    let rows = baseline_rows(&counts)?;
    ctx.write("baselines.csv", &write_metrics(&rows))?;
    println!(
        "{:<14}{:>10}{:>10}{:>12}{:>11}{:>10}",
        "baseline", "accuracy", "balanced", "acceptable", "precision", "F1"
    );
    for chunk in rows.chunks(METRIC_NAMES.len()) {
        print!("{:<14}", chunk[0].model);
        for (r, w) in chunk.iter().zip([10, 10, 12, 11, 10]) {
            print!("{:>w$.2}", r.value);
        }
        println!();
    }
    Ok(())
}

fn per_patient_accuracy(
    preds: &[PredictionRow<f64>],
    patient_of: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, f64>, CliError> {
    let mut tally: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for p in preds {
        let patient = patient_of
            .get(&p.video_id)
            .ok_or_else(|| Error::InvalidInput(format!("prediction for unknown video `{}`", p.video_id)))?;
        let e = tally.entry(patient.clone()).or_default();
        e.0 += usize::from(p.truth == p.prediction.label);
        e.1 += 1;
    }
    Ok(tally
        .into_iter()
        .map(|(k, (hit, n))| (k, 100.0 * hit as f64 / n as f64))
        .collect())
}

fn fmt_metric(r: &MetricRow) -> String {
    match r.ci {
        Some((lo, hi)) => format!("{:.2} [{lo:.2}, {hi:.2}]", r.value),
        None => format!("{:.2}", r.value),
    }
}

fn report(ctx: &Ctx, a: &ReportArgs) -> Result<(), CliError> {
    let features = read_feature_file(&a.features)?;
    let eval_metrics = read_metrics(&read_text(&a.eval.join("metrics.csv"))?)?;
    let counts = label_counts(&features);
    let mut summary: Vec<MetricRow> = eval_metrics
        .iter()
        .filter(|r| !r.model.ends_with("-pooled"))
        .cloned()
        .collect();
    summary.extend(baseline_rows(&counts)?);
    ctx.write("summary.csv", &write_metrics(&summary))?;
    ctx.write("metrics.svg", &metrics_chart(&summary))?;

    let mut md = String::new();
    writeln!(md, "# Finger-tapping analysis report\n").unwrap();
    writeln!(md, "## Data\n").unwrap();
    writeln!(md, "{} recordings from {} patients.\n", features.table.n_rows(), {
        let mut p: Vec<&str> = features.table.keys.iter().map(|k| k.patient_id.as_str()).collect();
        p.sort_unstable();
        p.dedup();
        p.len()
    })
    .unwrap();
    writeln!(md, "| score | 0 | 1 | 2 | 3 | 4 |\n|---|---|---|---|---|---|").unwrap();
    writeln!(
        md,
        "| videos | {} |\n",
        counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" | ")
    )
    .unwrap();

    writeln!(md, "## Classification\n").unwrap();
    writeln!(
        md,
        "Fold means with 95% confidence intervals; baselines are computed from the label distribution.\n"
    )
    .unwrap();
    writeln!(
        md,
        "| model | accuracy | balanced accuracy | acceptable accuracy | macro precision | macro F1 |"
    )
    .unwrap();
    writeln!(md, "|---|---|---|---|---|---|").unwrap();
    let mut models: Vec<&str> = Vec::new();
    for r in &summary {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    for m in &models {
        let cells: Vec<String> = METRIC_NAMES
            .iter()
            .map(|n| {
                summary
                    .iter()
                    .find(|r| r.model == *m && r.metric == *n)
                    .map(fmt_metric)
                    .unwrap_or_default()
            })
            .collect();
        writeln!(md, "| {m} | {} |", cells.join(" | ")).unwrap();
    }
    writeln!(md).unwrap();

    if let Some(dir) = &a.pca {
        let ev = read_matrix::<f64>(&read_text(&dir.join("explained_variance.csv"))?)?;
        let rotated = read_matrix::<f64>(&read_text(&dir.join("rotated_loadings.csv"))?)?;
        writeln!(md, "## Principal components\n").unwrap();
        writeln!(
            md,
            "{} components retained, explaining {:.2}% of the variance.\n",
            rotated.columns.len(),
            100.0 * ev.data[(rotated.columns.len() - 1, 2)]
        )
        .unwrap();
        writeln!(md, "| component | eigenvalue | ratio | cumulative |\n|---|---|---|---|").unwrap();
        for (i, label) in ev.row_labels.iter().enumerate() {
            writeln!(
                md,
                "| {label} | {:.4} | {:.4} | {:.4} |",
                ev.data[(i, 0)],
                ev.data[(i, 1)],
                ev.data[(i, 2)]
            )
            .unwrap();
        }
        writeln!(md).unwrap();
        let ratios: Vec<f64> = (0..ev.data.rows()).map(|i| ev.data[(i, 1)]).collect();
        ctx.write("scree.svg", &plot::scree(&ratios))?;
    }

    if let Some(other) = &a.compare {
        let patient_of: BTreeMap<String, String> = features
            .table
            .keys
            .iter()
            .map(|k| (k.video_id.clone(), k.patient_id.clone()))
            .collect();
        let mine = per_patient_accuracy(
            &read_predictions(&read_text(&a.eval.join("predictions.csv"))?)?,
            &patient_of,
        )?;
        let theirs = per_patient_accuracy(
            &read_predictions(&read_text(&other.join("predictions.csv"))?)?,
            &patient_of,
        )?;
        let shared: Vec<&String> = mine.keys().filter(|k| theirs.contains_key(*k)).collect();
        let x: Vec<f64> = shared.iter().map(|k| mine[*k]).collect();
        let y: Vec<f64> = shared.iter().map(|k| theirs[*k]).collect();
        writeln!(md, "## Paired comparison\n").unwrap();
        writeln!(
            md,
            "Per-patient accuracy of `{}` against `{}` over {} patients.\n",
            a.eval.display(),
            other.display(),
            shared.len()
        )
        .unwrap();
        match wilcoxon_signed_rank(&x, &y) {
            Ok(w) => writeln!(
                md,
                "Wilcoxon signed-rank: W+ = {:.1}, n = {}, p = {:.4} ({}).\n",
                w.statistic,
                w.n,
                w.p_value,
                if w.exact { "exact" } else { "normal approximation" }
            )
            .unwrap(),
            Err(e) if e.class() != ErrorClass::Config => {
                writeln!(md, "Wilcoxon signed-rank not computed: {e}.\n").unwrap()
            }
            Err(e) => return Err(e.into()),
        }
    }
    ctx.write("report.md", &md)?;
    println!("report written to {}", ctx.out.join("report.md").display());
    Ok(())
}
