//! Trace CSV and summary document writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use gossip_core::Trace;

use crate::error::HarnessError;

/// 17 significant digits, `.` decimal separator.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_header(with_delta: bool) -> Vec<&'static str> {
    let mut h = vec!["seed", "iter", "dual_subopt", "rel_error", "L_t"];
    if with_delta {
        h.push("Delta_t");
    }
    h.push("mean_drift");
    h
}

/// Long-format trace: one row per (seed, recorded iteration), seeds in the
/// order given.
pub fn write_trace_csv<W: Write>(out: W, traces: &[Trace], with_delta: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(with_delta))?;
    let mut row: Vec<String> = Vec::with_capacity(7);
    for trace in traces {
        for r in &trace.records {
            row.clear();
            row.push(trace.seed.to_string());
            row.push(r.iter.to_string());
            row.push(fmt_f64(r.dual_subopt));
            // already-optimal start: report zero relative error
            row.push(fmt_f64(r.rel_error.unwrap_or(0.0)));
            row.push(fmt_f64(r.l_t));
            if with_delta {
                row.push(fmt_f64(r.delta_t.unwrap_or(0.0)));
            }
            row.push(fmt_f64(r.mean_drift));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-node values: `seed,iter,node,value`.
pub fn write_trajectory_csv<W: Write>(out: W, traces: &[Trace]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "iter", "node", "value"])?;
    for trace in traces {
        for (iter, x) in &trace.trajectory {
            for (node, v) in x.iter().enumerate() {
                w.write_record([
                    trace.seed.to_string(),
                    iter.to_string(),
                    node.to_string(),
                    fmt_f64(*v),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        HarnessError::io(path, e)
    })
}
