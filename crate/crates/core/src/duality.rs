//! Primal/dual objective pair for average consensus and the convergence
//! measures shared by protocols, bounds and the harness.
//!
//! The dual of the consensus problem over incidence matrix `A` is
//! `D(y) = -(Ac)^T y - 1/2 ||A^T y||^2`, and a dual point maps to the primal
//! point `x(y) = c + A^T y`. Every measure here is a function of the primal
//! vector alone so it applies equally to protocols that keep no dual iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Dual iterate, one entry per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint(pub Vec<f64>);

/// Primal iterate, one entry per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalPoint(pub Vec<f64>);

impl DualPoint {
    pub fn zeros(m: usize) -> Self {
        DualPoint(vec![0.0; m])
    }
}

impl PrimalPoint {
    pub fn mean(&self) -> f64 {
        mean(&self.0)
    }
}

impl AsRef<[f64]> for PrimalPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Result of [`ConsensusProblem::relative_error`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelativeError {
    Value(f64),
    /// `c` is already the consensus vector; `q` has no denominator.
    AlreadyOptimal,
}

impl RelativeError {
    pub fn value(self) -> Option<f64> {
        match self {
            RelativeError::Value(q) => Some(q),
            RelativeError::AlreadyOptimal => None,
        }
    }
}

/// A network plus the private node values whose mean is sought.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusProblem {
    graph: Graph,
    c: Vec<f64>,
    c_bar: f64,
}

impl ConsensusProblem {
    pub fn new(graph: Graph, c: Vec<f64>) -> Result<Self> {
        check_len("initial values", graph.n(), c.len())?;
        if let Some(bad) = c.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("c", format!("non-finite value {bad}")));
        }
        let c_bar = mean(&c);
        Ok(ConsensusProblem { graph, c, c_bar })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn initial_values(&self) -> &[f64] {
        &self.c
    }

    pub fn c_bar(&self) -> f64 {
        self.c_bar
    }

    /// The primal optimum `c_bar * 1`.
    pub fn optimum(&self) -> PrimalPoint {
        PrimalPoint(vec![self.c_bar; self.graph.n()])
    }

    /// `D(y*) - D(0) = 1/2 ||c_bar 1 - c||^2`, the initial dual gap with `y^0 = 0`.
    pub fn initial_dual_gap(&self) -> f64 {
        half_sq_dist(self.c_bar, &self.c)
    }

    /// `D(y*)`. Equal to [`Self::initial_dual_gap`] because `D(0) = 0`.
    pub fn optimal_dual_value(&self) -> f64 {
        self.initial_dual_gap()
    }

    /// Dual objective `D(y) = -(Ac)^T y - 1/2 ||A^T y||^2`.
    pub fn dual_value(&self, y: &DualPoint) -> Result<f64> {
        check_len("dual point", self.graph.m(), y.0.len())?;
        let mut linear = 0.0;
        for (&(i, j), &ye) in self.graph.edges().iter().zip(&y.0) {
            linear += (self.c[i] - self.c[j]) * ye;
        }
        let aty = self.at_y(&y.0);
        let sq: f64 = aty.iter().map(|v| v * v).sum();
        Ok(-linear - 0.5 * sq)
    }

    /// `x(y) = c + A^T y`.
    pub fn map_to_primal(&self, y: &DualPoint) -> Result<PrimalPoint> {
        check_len("dual point", self.graph.m(), y.0.len())?;
        let mut x = self.at_y(&y.0);
        for (xi, ci) in x.iter_mut().zip(&self.c) {
            *xi += ci;
        }
        Ok(PrimalPoint(x))
    }

    fn at_y(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.graph.n()];
        for (&(i, j), &ye) in self.graph.edges().iter().zip(y) {
            out[i] += ye;
            out[j] -= ye;
        }
        out
    }

    /// `D(y*) - D(y) = 1/2 ||c_bar 1 - x||^2`.
    pub fn dual_suboptimality(&self, x: &PrimalPoint) -> Result<f64> {
        check_len("primal point", self.graph.n(), x.0.len())?;
        Ok(half_sq_dist(self.c_bar, &x.0))
    }

    /// `||x - x*||^2 / ||c - x*||^2`.
    pub fn relative_error(&self, x: &PrimalPoint) -> Result<RelativeError> {
        check_len("primal point", self.graph.n(), x.0.len())?;
        let denom = half_sq_dist(self.c_bar, &self.c);
        if denom == 0.0 {
            return Ok(RelativeError::AlreadyOptimal);
        }
        Ok(RelativeError::Value(half_sq_dist(self.c_bar, &x.0) / denom))
    }

    /// Closed-form `D(y + lambda f_e) - D(y) = -lambda (x_i - x_j) - lambda^2`
    /// where `x = x(y)` and `e = (i, j)`.
    pub fn dual_increment(&self, x: &PrimalPoint, e: usize, lambda: f64) -> Result<f64> {
        check_len("primal point", self.graph.n(), x.0.len())?;
        let row = self.graph.incidence_row(e)?;
        Ok(-lambda * row.dot(&x.0) - lambda * lambda)
    }
}

/// `L = (1/m) sum over edges of |x_i - x_j|`.
pub fn edge_gap_measure(g: &Graph, x: &PrimalPoint) -> f64 {
    g.total_edge_gap(&x.0) / g.m() as f64
}

/// Fraction of edges whose endpoint gap is at least `eps`.
pub fn gap_fraction(g: &Graph, x: &PrimalPoint, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    let count = g
        .edges()
        .iter()
        .filter(|&&(i, j)| (x.0[i] - x.0[j]).abs() >= eps)
        .count();
    Ok(count as f64 / g.m() as f64)
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn half_sq_dist(center: f64, x: &[f64]) -> f64 {
    0.5 * x.iter().map(|v| (center - v).powi(2)).sum::<f64>()
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}
