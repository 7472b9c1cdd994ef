use std::path::{Path, PathBuf};

use bloomtrack::estimators::EstimatorRegistry;
use bloomtrack::field::{load_grid, save_grid, GridField, GridFormat, SyntheticField};
use bloomtrack::gp::{fit_hyperparameters, FittedHyperparams, TrainingSet};
use bloomtrack::mission::{
    metrics_from_records, run_resolved, MetricsOptions, MissionConfig, MissionOutcome,
    ResolvedMission,
};
use bloomtrack::sweep::{export, run_sweep_with, ExportFormat, SweepConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde_json::{json, Map, Value};

use crate::config::{FitSection, RunConfigFile};
use crate::rundir::{config_hash, run_dir, write_atomic, write_json, DirCache};
use crate::{CliError, FitArgs, GenFieldArgs, GlobalArgs, SimulateArgs, SweepArgs, ValidateArgs};

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn apply_seed(m: &mut MissionConfig, seed: u64) {
    m.sensor.seed = seed;
    m.position_noise.seed = seed.wrapping_add(1);
}

/// Loads the field and kernel and builds the estimator once, so that every
/// setup problem is reported as a config error before anything runs.
fn prepare(m: &MissionConfig, registry: &EstimatorRegistry) -> Result<ResolvedMission, CliError> {
    let resolved = m.resolve().map_err(config_err)?;
    registry
        .build(&m.estimator, &m.estimator_settings(resolved.kernel))
        .map_err(config_err)?;
    Ok(resolved)
}

pub fn simulate(g: &GlobalArgs, a: &SimulateArgs) -> Result<(), CliError> {
    let file = RunConfigFile::load(g.config.as_deref())?;
    let mut m = file.mission()?.clone();
    if let Some(e) = &a.estimator {
        m.estimator = e.clone();
    }
    if let Some(d) = a.duration {
        m.duration = d;
    }
    if let Some(s) = a.sigma {
        m.sensor.sigma = s;
    }
    if let Some(s) = g.seed {
        apply_seed(&mut m, s);
    }
    let registry = EstimatorRegistry::with_builtins();
    let resolved = prepare(&m, &registry)?;
    let effective = json!({ "mission": m, "metrics": file.metrics });
    let hash = config_hash("simulate", &effective);
    if g.dry_run {
        println!(
            "dry run: simulate {} for {} s on a {} field (config {hash})",
            m.estimator,
            m.duration,
            match &m.field {
                bloomtrack::mission::FieldSource::Synthetic(f) => f.kind(),
                bloomtrack::mission::FieldSource::Grid(_) => "grid",
            }
        );
        return Ok(());
    }

    let dir = run_dir(&g.out_dir, "simulate", &hash, g.resume)?;
    write_json(&dir.join("config.json"), &effective)?;
    let log = run_resolved(&resolved, &registry).map_err(runtime_err)?;

    let mut csv = Vec::new();
    log.write_csv(&mut csv).map_err(runtime_err)?;
    write_atomic(&dir.join("log.csv"), &csv)?;
    let mut jsonl = Vec::new();
    log.write_jsonl(&mut jsonl).map_err(runtime_err)?;
    write_atomic(&dir.join("log.jsonl"), &jsonl)?;

    let opts = MetricsOptions {
        delta_ref: m.control.delta_ref,
        settle_time: file.metrics.settle_time,
    };
    let report = metrics_from_records(&log.records, &opts);
    let summary = json!({
        "outcome": log.outcome,
        "ticks": log.records.len(),
        "tracking_start": log.tracking_started_at(),
        "noise_checksum": log.noise_checksum,
        "metrics": report.as_ref().ok(),
        "metrics_error": report.as_ref().err().map(|e| e.to_string()),
    });
    write_json(&dir.join("metrics.json"), &summary)?;

    println!("run directory: {}", dir.display());
    println!("ticks: {}  outcome: {:?}", log.records.len(), log.outcome);
    match &report {
        Ok(r) => {
            println!(
                "tracking error mg/m3: mean {:.4} rms {:.4} max {:.4}",
                r.tracking_error.mean, r.tracking_error.rms, r.tracking_error.max
            );
            if let Some(a) = &r.angle_error {
                println!(
                    "gradient angle error rad: mean {:.4} p95 {:.4} max {:.4}",
                    a.mean, a.p95, a.max
                );
            }
        }
        Err(e) => println!("no metrics: {e}"),
    }
    if let MissionOutcome::Aborted { t, reason } = &log.outcome {
        return Err(CliError::Runtime(format!(
            "mission aborted at t={t}: {reason} (partial log in {})",
            dir.display()
        )));
    }
    Ok(())
}

pub fn sweep(g: &GlobalArgs, a: &SweepArgs) -> Result<(), CliError> {
    let file = RunConfigFile::load(g.config.as_deref())?;
    let mut cfg: SweepConfig = file.sweep_config()?;
    if let Some(e) = &a.estimator {
        cfg.estimators = e.clone();
    }
    if let Some(s) = &a.sigma {
        cfg.sigma_grid = s.clone();
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if let Some(d) = a.duration {
        cfg.base.duration = d;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(config_err)?;
    let registry = EstimatorRegistry::with_builtins();
    for name in &cfg.estimators {
        let mut m = cfg.base.clone();
        m.estimator = name.clone();
        prepare(&m, &registry)?;
    }
    let hash = config_hash("sweep", &cfg);
    if g.dry_run {
        println!(
            "dry run: {} missions ({} sigma x {} estimators x {} replicates), config {hash}",
            cfg.missions(),
            cfg.sigma_grid.len(),
            cfg.estimators.len(),
            cfg.replicates
        );
        return Ok(());
    }

    let dir = run_dir(&g.out_dir, "sweep", &hash, g.resume)?;
    write_json(&dir.join("config.json"), &cfg)?;
    let cache = DirCache::new(&dir, a.keep_logs)?;
    let result = run_sweep_with(&cfg, &registry, &cache).map_err(runtime_err)?;
    export(&result, &dir.join("sweep.csv"), ExportFormat::Csv).map_err(runtime_err)?;
    export(&result, &dir.join("sweep.json"), ExportFormat::Json).map_err(runtime_err)?;

    println!("run directory: {}", dir.display());
    println!(
        "{:>10} {:>6} {:>4} {:>12} {:>12}",
        "sigma", "est", "ok", "rms_track", "angle_err"
    );
    for c in &result.cells {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5}"));
        println!(
            "{:>10.3e} {:>6} {:>4} {:>12} {:>12}",
            c.sigma,
            c.estimator,
            c.succeeded,
            f(c.rms_tracking_mean),
            f(c.angle_error_mean)
        );
    }
    let errors = cache.take_errors();
    if !errors.is_empty() {
        return Err(CliError::Runtime(format!(
            "could not write replicate files: {}",
            errors.join("; ")
        )));
    }
    Ok(())
}

fn load_day(path: &Path) -> Result<GridField, CliError> {
    load_grid(path, GridFormat::from_path(path)).map_err(config_err)
}

/// Disjoint random subsets: each day contributes up to `per_day` distinct
/// valid nodes, drawn with a per-day stream.
fn sample_days(
    grids: &[(PathBuf, GridField)],
    per_day: usize,
    seed: u64,
) -> Result<(Vec<TrainingSet>, f64), CliError> {
    let mut raw = Vec::new();
    for (k, (path, grid)) in grids.iter().enumerate() {
        let mut nodes: Vec<_> = grid.valid_nodes().collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        nodes.shuffle(&mut rng);
        nodes.truncate(per_day);
        if nodes.len() < 2 {
            return Err(CliError::Config(format!(
                "{}: fewer than 2 valid nodes",
                path.display()
            )));
        }
        raw.push(nodes);
    }
    let n: usize = raw.iter().map(Vec::len).sum();
    let mean = raw.iter().flatten().map(|(_, v)| v).sum::<f64>() / n as f64;
    let days = raw
        .into_iter()
        .map(|nodes| {
            let (ps, vs): (Vec<_>, Vec<_>) = nodes.into_iter().map(|(p, v)| (p, v - mean)).unzip();
            TrainingSet::new(ps, vs).map_err(config_err)
        })
        .collect::<Result<_, _>>()?;
    Ok((days, mean))
}

pub fn fit(g: &GlobalArgs, a: &FitArgs) -> Result<(), CliError> {
    let file = match &g.config {
        Some(p) => RunConfigFile::load(Some(p))?,
        None => RunConfigFile::parse("{}", "<empty>", None)?,
    };
    let mut fit: FitSection = file.fit.unwrap_or_default();
    fit.grids.extend(a.grids.iter().cloned());
    if let Some(n) = a.per_day {
        fit.per_day = n;
    }
    if let Some(b) = a.budget {
        fit.options.budget = b;
    }
    if let Some(s) = a.starts {
        fit.options.starts = s;
    }
    if let Some(s) = a.noise {
        fit.noise.sigma = s;
    }
    if let Some(s) = g.seed {
        fit.options.seed = s;
    }
    if fit.grids.is_empty() {
        return Err(CliError::Config("no training grid files given".into()));
    }
    if fit.per_day < 2 {
        return Err(CliError::Config("per_day must be >= 2".into()));
    }
    fit.init.validate().map_err(config_err)?;
    if !(fit.noise.sigma.is_finite() && fit.noise.sigma >= 0.0) {
        return Err(CliError::Config("noise must be >= 0".into()));
    }
    let grids = fit
        .grids
        .iter()
        .map(|p| Ok((p.clone(), load_day(p)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let (days, mean) = sample_days(&grids, fit.per_day, fit.options.seed)?;
    let n_train: usize = days.iter().map(TrainingSet::len).sum();
    let hash = config_hash("fit", &fit);
    if g.dry_run {
        println!(
            "dry run: fit on {} days, {n_train} points (mean {mean:.4} removed), config {hash}",
            days.len()
        );
        return Ok(());
    }

    let report = fit_hyperparameters(&days, &fit.noise, &fit.init, &fit.options)
        .map_err(|e| CliError::Runtime(format!("fit failed: {e}")))?;
    let dir = run_dir(&g.out_dir, "fit", &hash, g.resume)?;
    write_json(&dir.join("config.json"), &fit)?;
    let fitted = FittedHyperparams {
        sigma2_k: report.params.sigma2_k,
        l0: report.params.l0,
        l1: report.params.l1,
        noise_sigma: fit.noise.sigma,
        lml: report.lml,
        n_train,
    };
    write_json(&dir.join("hyperparams.json"), &fitted)?;
    write_json(&dir.join("fit_report.json"), &report)?;

    println!("run directory: {}", dir.display());
    println!(
        "training: {} days, {n_train} points, mean {mean:.4} removed",
        days.len()
    );
    for (k, s) in report.starts.iter().enumerate() {
        let first = s.trajectory.first().copied().unwrap_or(f64::NAN);
        println!(
            "start {k:>2}: lml {first:>14.4} -> {:>14.4} in {} steps, {} evaluations",
            s.lml, s.iterations, s.evaluations
        );
    }
    println!(
        "best: sigma2_k {:.6} l0 {:.6} l1 {:.6} lml {:.4} (init {})",
        fitted.sigma2_k,
        fitted.l0,
        fitted.l1,
        fitted.lml,
        report
            .init_lml
            .map_or("ill-conditioned".to_string(), |v| format!("{v:.4}"))
    );
    Ok(())
}

fn param_value(raw: &str) -> Result<Value, CliError> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("`{t}` is not a number")))
            .map(|v| json!(v))
    };
    if raw.contains(',') {
        raw.split(',')
            .map(num)
            .collect::<Result<Vec<_>, _>>()
            .map(Value::Array)
    } else {
        num(raw)
    }
}

pub fn gen_field(g: &GlobalArgs, a: &GenFieldArgs) -> Result<(), CliError> {
    let mut obj = Map::new();
    obj.insert("kind".into(), json!(a.kind));
    for p in &a.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--param `{p}` is not name=value")))?;
        obj.insert(k.trim().to_string(), param_value(v)?);
    }
    if a.domain.len() != 4 {
        return Err(CliError::Config(
            "--domain needs xmin,ymin,xmax,ymax".into(),
        ));
    }
    obj.insert(
        "domain".into(),
        json!({ "min": [a.domain[0], a.domain[1]], "max": [a.domain[2], a.domain[3]] }),
    );
    let field: SyntheticField = serde_json::from_value(Value::Object(obj)).map_err(config_err)?;
    let [ny, nx] = a.shape[..] else {
        return Err(CliError::Config("--shape needs ny,nx".into()));
    };
    let grid = field.rasterize(ny, nx).map_err(config_err)?;
    let format = match &a.format {
        Some(f) => f.parse::<GridFormat>().map_err(config_err)?,
        None => a
            .output
            .as_deref()
            .map_or(GridFormat::CsvGrid, GridFormat::from_path),
    };
    let hash = config_hash("gen-field", &json!({ "field": field, "shape": [ny, nx] }));
    if g.dry_run {
        println!(
            "dry run: {} raster {ny}x{nx} ({format}), config {hash}",
            field.kind()
        );
        return Ok(());
    }
    let path = match &a.output {
        Some(p) => p.clone(),
        None => {
            let ext = if format == GridFormat::JsonGrid {
                "json"
            } else {
                "csv"
            };
            run_dir(&g.out_dir, "gen-field", &hash, g.resume)?.join(format!("field.{ext}"))
        }
    };
    save_grid(&grid, &path, format).map_err(runtime_err)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn validate_config(path: &Path) -> Result<String, CliError> {
    let file = RunConfigFile::load(Some(path))?;
    let mut parts = Vec::new();
    if let Some(m) = &file.mission {
        prepare(m, &EstimatorRegistry::with_builtins())?;
        parts.push("mission");
    }
    if file.sweep.is_some() {
        file.sweep_config()?.validate().map_err(config_err)?;
        parts.push("sweep");
    }
    if let Some(f) = &file.fit {
        for grid in &f.grids {
            load_day(grid)?;
        }
        f.init.validate().map_err(config_err)?;
        parts.push("fit");
    }
    Ok(format!("config ({})", parts.join(", ")))
}

fn is_run_config(path: &Path) -> bool {
    if GridFormat::from_path(path) != GridFormat::JsonGrid {
        return false;
    }
    let Ok(text) = std::fs::read_to_string(path) else {
        return false;
    };
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(o)) => ["mission", "sweep", "fit", "metrics"]
            .iter()
            .any(|k| o.contains_key(*k)),
        _ => false,
    }
}

pub fn validate(_g: &GlobalArgs, a: &ValidateArgs) -> Result<(), CliError> {
    let mut failed = 0;
    for path in &a.files {
        let outcome = if is_run_config(path) {
            validate_config(path)
        } else {
            load_day(path).map(|g| {
                let (ny, nx) = g.shape();
                format!("grid {ny}x{nx}, {} masked", g.masked_count())
            })
        };
        match outcome {
            Ok(what) => println!("ok    {}: {what}", path.display()),
            Err(e) => {
                failed += 1;
                println!("error {}: {e}", path.display());
            }
        }
    }
    if failed > 0 {
        return Err(CliError::Config(format!(
            "{failed} of {} files failed validation",
            a.files.len()
        )));
    }
    Ok(())
}
