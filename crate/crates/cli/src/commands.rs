use std::fs;
use std::path::{Path, PathBuf};

use gossip_core::bounds::{BoundMeasure, RateBounds, ThresholdReport};
use gossip_core::graph::{build_cycle, build_random_geometric, default_rgg_radius};
use gossip_core::protocols::run;
use gossip_core::{Graph, Protocol, RunOptions, Trace};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig, SCHEMA_VERSION};
use crate::error::HarnessError;
use crate::output::{fmt_f64, write_atomic, write_trace_csv, write_trajectory_csv};
use crate::stats::{column_stats, running_min};

pub const TRACE_FILE: &str = "trace.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Rounding allowance in the bound comparison; at `t = 0` the bound equals
/// the measured gap up to the last few bits.
pub const BOUND_REL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Cycle,
    Rgg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Text,
    Json,
}

#[derive(Debug, Clone)]
pub struct GraphArgs {
    pub kind: GraphKind,
    pub n: usize,
    pub r: Option<f64>,
    pub seed: u64,
    pub format: GraphFormat,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphInfo {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub d_min: usize,
    pub d_max: usize,
    /// Radius used for random geometric graphs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl GraphInfo {
    pub fn of(g: &Graph) -> Result<Self, HarnessError> {
        let s = g.spectral_summary()?;
        Ok(GraphInfo {
            n: g.n(),
            m: g.m(),
            alpha: s.alpha,
            beta: s.beta,
            d_min: g.d_min(),
            d_max: g.d_max(),
            radius: None,
        })
    }
}

pub struct GraphOutput {
    pub info: GraphInfo,
    /// Serialized graph in the requested format.
    pub document: String,
}

/// Builds a graph, serializes it, and writes it to `args.out` when given.
pub fn cmd_graph(args: &GraphArgs) -> Result<GraphOutput, HarnessError> {
    let (g, radius) = match args.kind {
        GraphKind::Cycle => (build_cycle(args.n)?, None),
        GraphKind::Rgg => {
            let r = args.r.unwrap_or_else(|| default_rgg_radius(args.n));
            (build_random_geometric(args.n, r, args.seed)?, Some(r))
        }
    };
    let mut info = GraphInfo::of(&g)?;
    info.radius = radius;
    let document = match args.format {
        GraphFormat::Text => g.to_edge_list(),
        GraphFormat::Json => {
            let mut s = serde_json::to_string_pretty(&g).expect("graph serializes");
            s.push('\n');
            s
        }
    };
    if let Some(path) = &args.out {
        write_atomic(path, document.as_bytes())?;
    }
    Ok(GraphOutput { info, document })
}

/// Runs every seed of the experiment in parallel; traces come back sorted by seed.
pub fn run_experiment(exp: &Experiment) -> Result<Vec<Trace>, HarnessError> {
    let opts = RunOptions {
        iterations: exp.iterations,
        stride: exp.stride,
        eps_metric: exp.eps_metric,
        track_dual: exp.track_dual,
        record_trajectory: exp.dump_trajectory,
    };
    let traces: Result<Vec<Trace>, _> = exp
        .seeds
        .par_iter()
        .map(|&seed| run(&exp.problem, &exp.protocol, seed, &opts))
        .collect();
    let mut traces = traces?;
    traces.sort_by_key(|t| t.seed);
    Ok(traces)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curves {
    pub iter: Vec<u64>,
    pub dual_subopt_mean: Vec<f64>,
    pub dual_subopt_se: Vec<f64>,
    pub rel_error_mean: Vec<f64>,
    pub rel_error_se: Vec<f64>,
    #[serde(rename = "L_t_mean")]
    pub l_t_mean: Vec<f64>,
    #[serde(rename = "L_t_se")]
    pub l_t_se: Vec<f64>,
    #[serde(rename = "Delta_t_mean", skip_serializing_if = "Option::is_none")]
    pub delta_t_mean: Option<Vec<f64>>,
    #[serde(rename = "Delta_t_se", skip_serializing_if = "Option::is_none")]
    pub delta_t_se: Option<Vec<f64>>,
    pub mean_drift_mean: Vec<f64>,
}

/// Empirical counterpart of the theoretical bound on the record grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub measure: BoundMeasure,
    pub rho: f64,
    pub bound: Vec<Option<f64>>,
    pub empirical: Vec<Option<f64>>,
    pub empirical_se: Vec<Option<f64>>,
    /// `empirical <= bound + 3 se` wherever both are defined (up to rounding).
    pub holds_within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalValues {
    pub dual_subopt_mean: f64,
    pub dual_subopt_se: f64,
    pub rel_error_mean: f64,
    #[serde(rename = "L_t_mean")]
    pub l_t_mean: f64,
    /// `min over recorded t of mean_seeds L^t` (average, then minimum).
    #[serde(rename = "min_t_mean_L")]
    pub min_t_mean_l: f64,
    /// `mean_seeds (min over recorded t of L^t)` (per-seed running minimum).
    #[serde(rename = "mean_running_min_L")]
    pub mean_running_min_l: f64,
    /// `(1/k) sum_{t<k} mean_seeds Delta^t`, from the recorded iterations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_avg: Option<f64>,
    pub stepsize_sum_mean: f64,
    pub stepsize_sq_sum_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub protocol: String,
    pub protocol_params: Protocol,
    pub graph: GraphInfo,
    pub c_bar: f64,
    pub d_gap: f64,
    pub already_optimal: bool,
    pub iterations: u64,
    pub stride: u64,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_metric: Option<f64>,
    pub curves: Curves,
    pub bound: BoundCheck,
    #[serde(rename = "final")]
    pub final_values: FinalValues,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_threshold: Option<ThresholdReport>,
}

/// Seed-averaged curves, bound overlay and final values.
pub fn summarize(exp: &Experiment, traces: &[Trace]) -> Result<Summary, HarnessError> {
    let iter: Vec<u64> = traces
        .first()
        .map(|t| t.records.iter().map(|r| r.iter).collect())
        .unwrap_or_default();
    let dual = column_stats(traces, |r| r.dual_subopt);
    let rel = column_stats(traces, |r| r.rel_error.unwrap_or(0.0));
    let lt = column_stats(traces, |r| r.l_t);
    let delta = exp
        .eps_metric
        .map(|_| column_stats(traces, |r| r.delta_t.unwrap_or(0.0)));
    let drift = column_stats(traces, |r| r.mean_drift);

    let bounds = RateBounds::new(&exp.problem)?;
    let report = bounds.report(&exp.protocol, &iter)?;

    let (empirical, empirical_se): (Vec<Option<f64>>, Vec<Option<f64>>) = match report.measure {
        BoundMeasure::DualSubopt => (
            dual.mean.iter().map(|&v| Some(v)).collect(),
            dual.se.iter().map(|&v| Some(v)).collect(),
        ),
        BoundMeasure::SqDist => (
            dual.mean.iter().map(|&v| Some(2.0 * v)).collect(),
            dual.se.iter().map(|&v| Some(2.0 * v)).collect(),
        ),
        BoundMeasure::MinMeanEdgeGap => (
            running_min(&lt.mean).into_iter().map(Some).collect(),
            vec![None; iter.len()],
        ),
        BoundMeasure::MeanGapFraction => {
            let d = delta
                .as_ref()
                .expect("eps-gap protocol always records Delta_t");
            (prefix_time_average(&iter, &d.mean), vec![None; iter.len()])
        }
    };
    let holds =
        empirical
            .iter()
            .zip(&empirical_se)
            .zip(&report.values)
            .all(|((emp, se), bound)| match (emp, bound) {
                (Some(e), Some(b)) => *e <= b + 3.0 * se.unwrap_or(0.0) + BOUND_REL_SLACK * b.abs(),
                _ => true,
            });

    let last = iter.len().saturating_sub(1);
    let k = exp.iterations;
    let n_traces = traces.len() as f64;
    let final_values = FinalValues {
        dual_subopt_mean: dual.mean[last],
        dual_subopt_se: dual.se[last],
        rel_error_mean: rel.mean[last],
        l_t_mean: lt.mean[last],
        min_t_mean_l: lt.mean.iter().copied().fold(f64::INFINITY, f64::min),
        mean_running_min_l: traces
            .iter()
            .map(|t| {
                t.records
                    .iter()
                    .map(|r| r.l_t)
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / n_traces,
        delta_avg: delta
            .as_ref()
            .and_then(|d| prefix_time_average(&iter, &d.mean)[last].filter(|_| k > 0)),
        stepsize_sum_mean: traces.iter().map(|t| t.stepsize_sum).sum::<f64>() / n_traces,
        stepsize_sq_sum_mean: traces.iter().map(|t| t.stepsize_sq_sum).sum::<f64>() / n_traces,
    };

    let noise_threshold = match &exp.protocol {
        Protocol::Noise(params) => Some(bounds.noise_threshold_check(params)?),
        _ => None,
    };

    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        protocol: exp.protocol.name().to_string(),
        protocol_params: exp.protocol.clone(),
        graph: GraphInfo::of(exp.problem.graph())?,
        c_bar: exp.problem.c_bar(),
        d_gap: exp.problem.initial_dual_gap(),
        already_optimal: exp.problem.initial_dual_gap() == 0.0,
        iterations: k,
        stride: exp.stride,
        seeds: exp.seeds.clone(),
        eps_metric: exp.eps_metric,
        curves: Curves {
            iter,
            dual_subopt_mean: dual.mean,
            dual_subopt_se: dual.se,
            rel_error_mean: rel.mean,
            rel_error_se: rel.se,
            l_t_mean: lt.mean,
            l_t_se: lt.se,
            delta_t_se: delta.as_ref().map(|d| d.se.clone()),
            delta_t_mean: delta.map(|d| d.mean),
            mean_drift_mean: drift.mean,
        },
        bound: BoundCheck {
            measure: report.measure,
            rho: report.rho,
            bound: report.values,
            empirical,
            empirical_se,
            holds_within_3se: holds,
        },
        final_values,
        noise_threshold,
    })
}

/// At each recorded `t`, the average of `values` over recorded iterations `< t`.
/// Exact `(1/t) sum_{s<t}` when every iteration is recorded.
fn prefix_time_average(iter: &[u64], values: &[f64]) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(iter.len());
    let mut sum = 0.0;
    for (i, _) in iter.iter().enumerate() {
        out.push((i > 0).then(|| sum / i as f64));
        sum += values[i];
    }
    out
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub trajectory_path: Option<PathBuf>,
    pub summary: Summary,
}

/// Loads, validates and runs a configuration, then writes the trace CSV and
/// summary into `out_dir` (or the config's `output_dir`).
///
/// Nothing is written unless every run succeeds; the summary is written last.
pub fn cmd_run(config_path: &Path, out_dir: Option<&Path>) -> Result<RunOutput, HarnessError> {
    let config = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let exp = config.instantiate(base)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| exp.output_dir.clone())
        .ok_or_else(|| {
            HarnessError::config("no output directory (set output_dir or pass --out)")
        })?;

    let traces = run_experiment(&exp)?;
    let summary = summarize(&exp, &traces)?;

    let mut trace_bytes = Vec::new();
    write_trace_csv(&mut trace_bytes, &traces, exp.eps_metric.is_some())
        .map_err(|e| HarnessError::io(&dir.join(TRACE_FILE), e.into()))?;
    let trajectory_bytes = if exp.dump_trajectory {
        let mut bytes = Vec::new();
        write_trajectory_csv(&mut bytes, &traces)
            .map_err(|e| HarnessError::io(&dir.join(TRAJECTORY_FILE), e.into()))?;
        Some(bytes)
    } else {
        None
    };
    let mut summary_bytes = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    summary_bytes.push(b'\n');

    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let trace_path = dir.join(TRACE_FILE);
    write_atomic(&trace_path, &trace_bytes)?;
    let trajectory_path = match trajectory_bytes {
        Some(bytes) => {
            let p = dir.join(TRAJECTORY_FILE);
            write_atomic(&p, &bytes)?;
            Some(p)
        }
        None => None,
    };
    let summary_path = dir.join(SUMMARY_FILE);
    write_atomic(&summary_path, &summary_bytes)?;

    Ok(RunOutput {
        trace_path,
        summary_path,
        trajectory_path,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable {
    pub protocol: String,
    pub measure: BoundMeasure,
    pub d_gap: f64,
    pub alpha: f64,
    pub rho: f64,
    pub iterations: Vec<u64>,
    pub values: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_threshold: Option<ThresholdReport>,
}

impl BoundTable {
    /// `iter,bound` CSV; undefined bounds are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,bound\n");
        for (k, v) in self.iterations.iter().zip(&self.values) {
            out.push_str(&k.to_string());
            out.push(',');
            if let Some(v) = v {
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates the protocol's bound at the configured iterations without simulating.
pub fn cmd_bounds(config_path: &Path, out: Option<&Path>) -> Result<BoundTable, HarnessError> {
    let config = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let exp = config.instantiate(base)?;
    let table = bound_table(&exp)?;
    if let Some(path) = out {
        write_atomic(path, table.to_csv().as_bytes())?;
    }
    Ok(table)
}

pub fn bound_table(exp: &Experiment) -> Result<BoundTable, HarnessError> {
    let bounds = RateBounds::new(&exp.problem)?;
    let report = bounds.report(&exp.protocol, &exp.bound_iterations)?;
    let noise_threshold = match &exp.protocol {
        Protocol::Noise(params) => Some(bounds.noise_threshold_check(params)?),
        _ => None,
    };
    Ok(BoundTable {
        protocol: report.protocol,
        measure: report.measure,
        d_gap: bounds.d_gap,
        alpha: bounds.alpha,
        rho: report.rho,
        iterations: report.iterations,
        values: report.values,
        noise_threshold,
    })
}
