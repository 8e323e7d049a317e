//! Seed aggregation helpers.

use gossip_core::{Trace, TraceRecord};

/// Per-iteration mean and standard error across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

/// Sample mean and standard error of the mean (`sd / sqrt(N)`, unbiased sd).
pub fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates one column over traces that share a record grid.
///
/// Traces are visited in the given order; callers pass them sorted by seed.
pub fn column_stats(traces: &[Trace], column: impl Fn(&TraceRecord) -> f64) -> SeriesStats {
    let len = traces.first().map_or(0, |t| t.records.len());
    let mut mean = Vec::with_capacity(len);
    let mut se = Vec::with_capacity(len);
    let mut samples = Vec::with_capacity(traces.len());
    for i in 0..len {
        samples.clear();
        samples.extend(traces.iter().map(|t| column(&t.records[i])));
        let (m, s) = mean_se(&samples);
        mean.push(m);
        se.push(s);
    }
    SeriesStats { mean, se }
}

pub fn running_min(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(f64::INFINITY, |acc, &v| {
            *acc = acc.min(v);
            Some(*acc)
        })
        .collect()
}

/// Least-squares slope of `ln(value)` against iteration.
pub fn log_linear_slope(iters: &[u64], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = iters
        .iter()
        .zip(values)
        .map(|(&t, &v)| (t as f64, v.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
