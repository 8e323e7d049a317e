use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Stepsize rule `lambda^t` for the binary-oracle protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepsizeSchedule {
    /// `lambda^t = lambda0`.
    Constant { lambda0: f64 },
    /// `lambda^t = a / (t + 1)`.
    InverseT { a: f64 },
    /// `lambda^t = a / sqrt(t + 1)`.
    InverseSqrtT { a: f64 },
    /// `lambda^t = sqrt(r / (horizon + 1))`, the minimizer of the binary
    /// bound for a known horizon.
    FixedHorizonOptimal { r: f64, horizon: u64 },
    /// `lambda^t = scale * sum over edges of |x_i - x_j|`.
    Adaptive { scale: f64 },
}

impl StepsizeSchedule {
    /// Adaptive rule with scale `1/(2m)`, the constant of the linear-rate result.
    pub fn adaptive_default(g: &Graph) -> Self {
        StepsizeSchedule::Adaptive {
            scale: 1.0 / (2.0 * g.m() as f64),
        }
    }

    /// Adaptive rule with the smaller scale `1/(4m)`.
    pub fn adaptive_experimental(g: &Graph) -> Self {
        StepsizeSchedule::Adaptive {
            scale: 1.0 / (4.0 * g.m() as f64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(
                    name,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        match *self {
            StepsizeSchedule::Constant { lambda0 } => positive("lambda0", lambda0),
            StepsizeSchedule::InverseT { a } | StepsizeSchedule::InverseSqrtT { a } => {
                positive("a", a)
            }
            StepsizeSchedule::FixedHorizonOptimal { r, .. } => positive("r", r),
            StepsizeSchedule::Adaptive { scale } => positive("scale", scale),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, StepsizeSchedule::Adaptive { .. })
    }

    /// Stepsize at iteration `t` for schedules that do not look at `x`.
    pub fn predetermined(&self, t: u64) -> Option<f64> {
        let t1 = (t + 1) as f64;
        match *self {
            StepsizeSchedule::Constant { lambda0 } => Some(lambda0),
            StepsizeSchedule::InverseT { a } => Some(a / t1),
            StepsizeSchedule::InverseSqrtT { a } => Some(a / t1.sqrt()),
            StepsizeSchedule::FixedHorizonOptimal { r, horizon } => {
                Some((r / (horizon + 1) as f64).sqrt())
            }
            StepsizeSchedule::Adaptive { .. } => None,
        }
    }

    /// Stepsize at iteration `t` given the current primal iterate.
    pub fn stepsize(&self, t: u64, g: &Graph, x: &[f64]) -> f64 {
        match *self {
            StepsizeSchedule::Adaptive { scale } => scale * g.total_edge_gap(x),
            _ => self.predetermined(t).expect("non-adaptive schedule"),
        }
    }
}
