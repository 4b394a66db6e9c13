//! The four subcommands: chart verification, sampling, log-density
//! evaluation, and fitting.

use std::fs;
use std::path::Path;

use manifold_density::charts::AmbientPoint;
use manifold_density::estimation::{data_log_likelihood, fit, fit_from_chain, Dataset, FitConfig};
use manifold_density::flows::{FlowChain, LayerKind};
use manifold_density::mc_verify::{chunk_rng, chunk_sizes, curve_triple, projected_uniform_profile};
use manifold_density::{Error as CoreError, ManifoldDensity64};
use serde::Serialize;

use crate::config::{kind_name, ModelConfig};
use crate::manifest::{FileStamp, FitSettings, RunManifest};
use crate::output::{ambient_header, atomic_write, csv_row, read_points_csv};
use crate::Failure;

/// Fixed verification thresholds.
const L1_ANALYTIC_MAX: f64 = 0.05;
const NAIVE_RATIO_MIN: f64 = 3.0;
/// Radial histogram range.
const RADIAL_RANGE_MAX: f64 = 5.0;

fn load_config(path: &Path) -> Result<(ModelConfig, FileStamp), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    let config = ModelConfig::from_json(&text).map_err(Failure::Config)?;
    Ok((config, FileStamp::new(path, text.as_bytes())))
}

fn build_model(config: &ModelConfig) -> Result<ManifoldDensity64, Failure> {
    config.build().map_err(Failure::Config)
}

/// Classifies a core error from the computation phase, after config and
/// data validation have both passed.
fn compute_failure(e: CoreError) -> Failure {
    match e {
        CoreError::InvalidArgument(_)
        | CoreError::EmptyInput(_)
        | CoreError::DimensionMismatch { .. }
        | CoreError::NonInvertibleFlow => Failure::Config(e.to_string()),
        CoreError::DataValidation { .. } => Failure::Data(e.to_string()),
        _ => Failure::Numerical(e.to_string()),
    }
}

fn resolve_chunks(flag: Option<usize>) -> Result<usize, Failure> {
    let chunks = match flag {
        Some(chunks) => chunks,
        None => match std::env::var("MANIFOLD_FLOW_CHUNKS") {
            Ok(text) => text.trim().parse::<usize>().map_err(|_| {
                Failure::Config(format!("MANIFOLD_FLOW_CHUNKS must be an integer, got {text:?}"))
            })?,
            Err(std::env::VarError::NotPresent) => 1,
            Err(e) => return Err(Failure::Config(format!("MANIFOLD_FLOW_CHUNKS: {e}"))),
        },
    };
    if chunks == 0 {
        return Err(Failure::Config("chunk count must be at least 1".into()));
    }
    Ok(chunks)
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    atomic_write(path, bytes)
        .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_manifest(manifest: &RunManifest, out: &Path) -> Result<(), Failure> {
    write_output(&RunManifest::path_for(out), manifest.to_json().as_bytes())
}

fn read_data(path: &Path, m: usize) -> Result<(Vec<Vec<f64>>, FileStamp), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("cannot read data {}: {e}", path.display())))?;
    let rows = read_points_csv(&text, m).map_err(Failure::Data)?;
    Ok((rows, FileStamp::new(path, text.as_bytes())))
}

#[derive(Serialize)]
struct VerifyThresholds {
    l1_analytic_max: f64,
    naive_ratio_min: f64,
}

#[derive(Serialize)]
struct VerifySummary {
    l1_analytic: f64,
    l1_naive: f64,
    thresholds: VerifyThresholds,
    sample_count: usize,
    bins: usize,
    rejected_draws: u64,
    pass: bool,
}

pub fn cmd_verify(
    config_path: &Path,
    seed: u64,
    count: usize,
    bins: usize,
    chunks: Option<usize>,
    out: &Path,
) -> Result<u8, Failure> {
    let (config, config_stamp) = load_config(config_path)?;
    let model = build_model(&config)?;
    if count < 1000 {
        return Err(Failure::Config("verify needs --count of at least 1000".into()));
    }
    if bins == 0 {
        return Err(Failure::Config("--bins must be at least 1".into()));
    }
    let chunks = resolve_chunks(chunks)?;

    let edges: Vec<f64> =
        (0..=bins).map(|i| RADIAL_RANGE_MAX * i as f64 / bins as f64).collect();
    let (profile, rejected) =
        projected_uniform_profile(model.chart(), seed, count, chunks, &edges)
            .map_err(compute_failure)?;
    let triple = curve_triple(&profile);

    let mut csv = String::from("r,empirical,analytic,naive\n");
    for i in 0..triple.radii.len() {
        csv.push_str(&csv_row(&[
            triple.radii[i],
            triple.empirical[i],
            triple.analytic[i],
            triple.naive[i],
        ]));
    }

    let l1_analytic = triple.l1_analytic();
    let l1_naive = triple.l1_naive();
    let pass = l1_analytic <= L1_ANALYTIC_MAX && l1_naive >= NAIVE_RATIO_MIN * l1_analytic;
    let summary = VerifySummary {
        l1_analytic,
        l1_naive,
        thresholds: VerifyThresholds {
            l1_analytic_max: L1_ANALYTIC_MAX,
            naive_ratio_min: NAIVE_RATIO_MIN,
        },
        sample_count: count,
        bins,
        rejected_draws: rejected,
        pass,
    };
    let summary_path = out.with_extension("summary.json");
    let mut summary_json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    summary_json.push('\n');

    write_output(out, csv.as_bytes())?;
    write_output(&summary_path, summary_json.as_bytes())?;
    write_manifest(
        &RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: "verify".into(),
            config: config_stamp,
            input: None,
            seed: Some(seed),
            chunk_count: chunks,
            count: Some(count),
            bins: Some(bins),
            fit: None,
            outputs: vec![out.display().to_string(), summary_path.display().to_string()],
        },
        out,
    )?;
    Ok(u8::from(!pass))
}

pub fn cmd_sample(
    config_path: &Path,
    seed: u64,
    count: usize,
    chunks: Option<usize>,
    out: &Path,
) -> Result<u8, Failure> {
    let (config, config_stamp) = load_config(config_path)?;
    let model = build_model(&config)?;
    if count == 0 {
        return Err(Failure::Config("--count must be at least 1".into()));
    }
    let chunks = resolve_chunks(chunks)?;
    let sizes = chunk_sizes(count, chunks).map_err(compute_failure)?;

    let m = model.ambient_dim();
    let mut csv = ambient_header(m);
    csv.push_str(",log_density\n");
    let mut row = Vec::with_capacity(m + 1);
    for (index, size) in sizes.iter().enumerate() {
        if *size == 0 {
            continue;
        }
        let mut rng = chunk_rng(seed, index as u64);
        for sample in model.sample_with_rng(&mut rng, *size).map_err(compute_failure)? {
            row.clear();
            row.extend_from_slice(sample.x.coords());
            row.push(sample.log_density);
            csv.push_str(&csv_row(&row));
        }
    }

    write_output(out, csv.as_bytes())?;
    write_manifest(
        &RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: "sample".into(),
            config: config_stamp,
            input: None,
            seed: Some(seed),
            chunk_count: chunks,
            count: Some(count),
            bins: None,
            fit: None,
            outputs: vec![out.display().to_string()],
        },
        out,
    )?;
    Ok(0)
}

pub fn cmd_logprob(config_path: &Path, input: &Path, out: &Path) -> Result<u8, Failure> {
    let (config, config_stamp) = load_config(config_path)?;
    let model = build_model(&config)?;
    if !model.chain().is_empty() {
        return Err(Failure::Config(CoreError::NonInvertibleFlow.to_string()));
    }
    let m = model.ambient_dim();
    let (rows, input_stamp) = read_data(input, m)?;

    let mut bad = Vec::new();
    let mut reason = String::new();
    let mut values = Vec::with_capacity(rows.len());
    for (i, coords) in rows.iter().enumerate() {
        match AmbientPoint::new(coords.clone()).and_then(|x| model.log_prob(&x)) {
            Ok(value) => values.push(value),
            Err(e) => {
                if bad.is_empty() {
                    reason = e.to_string();
                }
                bad.push(i + 1);
            }
        }
    }
    if !bad.is_empty() {
        return Err(Failure::Data(format!(
            "invalid data rows {bad:?} (1-based, header excluded): {reason}"
        )));
    }

    let mut csv = ambient_header(m);
    csv.push_str(",log_density\n");
    let mut row = Vec::with_capacity(m + 1);
    for (coords, value) in rows.iter().zip(&values) {
        row.clear();
        row.extend_from_slice(coords);
        row.push(*value);
        csv.push_str(&csv_row(&row));
    }

    write_output(out, csv.as_bytes())?;
    write_manifest(
        &RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: "logprob".into(),
            config: config_stamp,
            input: Some(input_stamp),
            seed: None,
            chunk_count: 1,
            count: None,
            bins: None,
            fit: None,
            outputs: vec![out.display().to_string()],
        },
        out,
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct FitReportJson {
    layer_count: usize,
    layer_kind: String,
    /// Mean log-likelihood of the flowless model on the same data.
    baseline_mean_log_likelihood: f64,
    initial_mean_log_likelihood: f64,
    final_mean_log_likelihood: f64,
    improvement_nats: f64,
    /// Mean negative log-likelihood after 0, 1, 2, … accepted steps.
    objective_trace: Vec<f64>,
    grad_norm_final: f64,
    iterations_used: usize,
    converged: bool,
}

pub struct FitArgs<'a> {
    pub config: &'a Path,
    pub seed: u64,
    pub data: &'a Path,
    pub layers: Option<usize>,
    pub kind: Option<LayerKind>,
    pub max_iters: usize,
    pub step_size: f64,
    pub tol: f64,
    pub fd_step: f64,
    pub out: &'a Path,
    pub model_out: &'a Path,
}

pub fn cmd_fit(args: FitArgs<'_>) -> Result<u8, Failure> {
    let (config, config_stamp) = load_config(args.config)?;
    let model = build_model(&config)?;
    let m = model.ambient_dim();
    let (rows, input_stamp) = read_data(args.data, m)?;

    let mut bad = Vec::new();
    let mut reason = String::new();
    let mut points = Vec::with_capacity(rows.len());
    for (i, coords) in rows.iter().enumerate() {
        match AmbientPoint::new(coords.clone()) {
            Ok(x) => points.push(x),
            Err(e) => {
                if bad.is_empty() {
                    reason = e.to_string();
                }
                bad.push(i + 1);
            }
        }
    }
    if !bad.is_empty() {
        return Err(Failure::Data(format!(
            "invalid data rows {bad:?} (1-based, header excluded): {reason}"
        )));
    }
    let dataset = Dataset::from_points(model.chart(), points).map_err(|e| match e {
        CoreError::DataValidation { rows, reason } => Failure::Data(format!(
            "invalid data rows {:?} (1-based, header excluded): {reason}",
            rows.iter().map(|r| r + 1).collect::<Vec<_>>()
        )),
        other => compute_failure(other),
    })?;

    // Non-empty configured flows are refined in place; the command flags
    // must not contradict them.
    let chain = model.chain();
    let (layer_count, layer_kind) = if chain.is_empty() {
        (args.layers.unwrap_or(0), args.kind.unwrap_or(LayerKind::Planar))
    } else {
        let kind = chain.layers()[0].kind();
        if chain.layers().iter().any(|layer| layer.kind() != kind) {
            return Err(Failure::Config(
                "fit needs a flow with a single layer kind; the config mixes kinds".into(),
            ));
        }
        if args.layers.is_some_and(|l| l != chain.len()) {
            return Err(Failure::Config(format!(
                "--layers {} contradicts the config's {}-layer flow",
                args.layers.unwrap(),
                chain.len()
            )));
        }
        if args.kind.is_some_and(|k| k != kind) {
            return Err(Failure::Config(format!(
                "--kind contradicts the config's {} flow",
                kind_name(kind)
            )));
        }
        (chain.len(), kind)
    };
    let fit_config = FitConfig {
        layer_count,
        layer_kind,
        step_size: args.step_size,
        max_iters: args.max_iters,
        grad_tolerance: args.tol,
        fd_step: args.fd_step,
        rng_seed: args.seed,
    };

    let baseline =
        data_log_likelihood(model.chart(), &FlowChain::identity(), model.base(), &dataset)
            .map_err(compute_failure)?;
    let report = if chain.is_empty() {
        fit(model.chart(), model.base(), &dataset, &fit_config)
    } else {
        fit_from_chain(model.chart(), model.base(), &dataset, &fit_config, chain.clone())
    }
    .map_err(compute_failure)?;

    let report_json = FitReportJson {
        layer_count,
        layer_kind: kind_name(layer_kind).to_string(),
        baseline_mean_log_likelihood: baseline,
        initial_mean_log_likelihood: report.initial_mean_log_likelihood(),
        final_mean_log_likelihood: report.final_mean_log_likelihood(),
        improvement_nats: report.improvement_nats(),
        objective_trace: report.objective_trace.clone(),
        grad_norm_final: report.grad_norm_final,
        iterations_used: report.iterations_used,
        converged: report.converged,
    };
    let mut report_text =
        serde_json::to_string_pretty(&report_json).expect("fit report serializes");
    report_text.push('\n');
    let fitted = config.with_explicit_flow(&report.final_chain);

    write_output(args.out, report_text.as_bytes())?;
    write_output(args.model_out, fitted.to_json().as_bytes())?;
    write_manifest(
        &RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: "fit".into(),
            config: config_stamp,
            input: Some(input_stamp),
            seed: Some(args.seed),
            chunk_count: 1,
            count: None,
            bins: None,
            fit: Some(FitSettings {
                layer_count,
                layer_kind: kind_name(layer_kind).to_string(),
                step_size: args.step_size,
                max_iters: args.max_iters,
                grad_tolerance: args.tol,
                fd_step: args.fd_step,
            }),
            outputs: vec![args.out.display().to_string(), args.model_out.display().to_string()],
        },
        args.out,
    )?;
    Ok(0)
}
