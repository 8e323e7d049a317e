//! Undirected consensus networks: construction, incidence rows and the
//! Laplacian spectrum that enters every rate bound.
//!
//! Edges are stored as `(i, j)` with `i < j`. The incidence row of an edge
//! carries `+1` at the lower endpoint and `-1` at the higher one.

use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of fresh point sets drawn for a random geometric graph
/// before giving up on connectivity.
pub const RGG_MAX_ATTEMPTS: usize = 100;

/// Eigenvalues below this are treated as zero when deciding connectivity.
pub const CONNECTIVITY_TOL: f64 = 1e-9;

/// Connected, simple, undirected graph with an indexed edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDocument", into = "GraphDocument")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    coords: Option<Vec<[f64; 2]>>,
}

/// Structured-document form of a [`Graph`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<[f64; 2]>>,
}

impl TryFrom<GraphDocument> for Graph {
    type Error = Error;

    fn try_from(doc: GraphDocument) -> Result<Self> {
        let edges = doc.edges.iter().map(|&[i, j]| (i, j)).collect();
        let mut g = Graph::from_edges(doc.n, edges)?;
        if let Some(coords) = doc.coords {
            if coords.len() != doc.n {
                return Err(Error::LengthMismatch {
                    what: "node coordinates",
                    expected: doc.n,
                    actual: coords.len(),
                });
            }
            g.coords = Some(coords);
        }
        Ok(g)
    }
}

impl From<Graph> for GraphDocument {
    fn from(g: Graph) -> Self {
        GraphDocument {
            n: g.n,
            edges: g.edges.iter().map(|&(i, j)| [i, j]).collect(),
            coords: g.coords,
        }
    }
}

/// The two nonzeros of an incidence-matrix row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IncidenceRow {
    /// Lower endpoint, coefficient `+1`.
    pub plus: usize,
    /// Higher endpoint, coefficient `-1`.
    pub minus: usize,
}

impl IncidenceRow {
    pub fn to_dense(self, n: usize) -> Vec<f64> {
        let mut row = vec![0.0; n];
        row[self.plus] = 1.0;
        row[self.minus] = -1.0;
        row
    }

    /// Row dotted with `x`, i.e. `x_plus - x_minus`.
    pub fn dot(self, x: &[f64]) -> f64 {
        x[self.plus] - x[self.minus]
    }
}

/// Laplacian spectrum summary of a connected graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    /// Algebraic connectivity (second smallest Laplacian eigenvalue).
    pub alpha: f64,
    /// `n / alpha`.
    pub beta: f64,
    /// All Laplacian eigenvalues, sorted in decreasing order.
    pub laplacian_eigenvalues: Vec<f64>,
}

impl Graph {
    /// Builds a graph from an edge list, normalizing each pair to `(low, high)`.
    ///
    /// Rejects self-loops, duplicate edges, out-of-range endpoints and
    /// disconnected graphs.
    pub fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidTopology(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut degrees = vec![0usize; n];
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidTopology(format!(
                    "edge ({a}, {b}) has an endpoint outside [0, {n})"
                )));
            }
            if a == b {
                return Err(Error::InvalidTopology(format!("self-loop at node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidTopology(format!(
                    "duplicate edge ({}, {})",
                    e.0, e.1
                )));
            }
            degrees[e.0] += 1;
            degrees[e.1] += 1;
            normalized.push(e);
        }
        if !is_connected(n, &normalized) {
            return Err(Error::InvalidTopology("graph is not connected".to_string()));
        }
        Ok(Graph {
            n,
            edges: normalized,
            degrees,
            coords: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Result<(usize, usize)> {
        self.edges.get(e).copied().ok_or(Error::EdgeOutOfRange {
            index: e,
            edges: self.edges.len(),
        })
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn d_min(&self) -> usize {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    pub fn d_max(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Node positions, present for random geometric graphs.
    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    pub fn incidence_row(&self, e: usize) -> Result<IncidenceRow> {
        let (plus, minus) = self.edge(e)?;
        Ok(IncidenceRow { plus, minus })
    }

    /// Dense `L = A^T A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
            l[(i, j)] -= 1.0;
            l[(j, i)] -= 1.0;
        }
        l
    }

    /// `sum over edges of (x_i - x_j)^2`, equal to `x^T L x`.
    pub fn laplacian_quadratic_form(&self, x: &[f64]) -> f64 {
        self.edges.iter().map(|&(i, j)| (x[i] - x[j]).powi(2)).sum()
    }

    /// `sum over edges of |x_i - x_j|`.
    pub fn total_edge_gap(&self, x: &[f64]) -> f64 {
        self.edges.iter().map(|&(i, j)| (x[i] - x[j]).abs()).sum()
    }

    pub fn spectral_summary(&self) -> Result<SpectralSummary> {
        let eig = SymmetricEigen::new(self.laplacian());
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let alpha = values[self.n - 2];
        if alpha < CONNECTIVITY_TOL {
            return Err(Error::Disconnected { alpha });
        }
        Ok(SpectralSummary {
            alpha,
            beta: self.n as f64 / alpha,
            laplacian_eigenvalues: values,
        })
    }

    /// Serializes to the line format: `n m` header, then one `i j` per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(8 * (self.edges.len() + 1));
        let _ = writeln!(out, "{} {}", self.n, self.edges.len());
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    /// Parses the line format written by [`Graph::to_edge_list`].
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            reason: "missing `n m` header".to_string(),
        })?;
        let [n, m] = parse_pair(hline, header)?;

        let mut edges = Vec::with_capacity(m);
        for (line, l) in lines {
            let [i, j] = parse_pair(line, l)?;
            edges.push((i, j));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: hline,
                reason: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::from_edges(n, edges)
    }
}

fn parse_pair(line: usize, text: &str) -> Result<[usize; 2]> {
    let mut it = text.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok([a, b]),
        _ => Err(Error::Parse {
            line,
            reason: format!("expected two non-negative integers, got `{text}`"),
        }),
    }
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut visited = vec![false; n];
    let mut stack = vec![0];
    visited[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !visited[v] {
                visited[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Cycle graph `C(n)` with edges `(i, i+1 mod n)`.
pub fn build_cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidTopology(format!(
            "cycle needs at least 3 nodes, got {n}"
        )));
    }
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
}

/// Complete graph `K_n`.
pub fn build_complete(n: usize) -> Result<Graph> {
    let edges = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    Graph::from_edges(n, edges)
}

/// Connectivity radius `sqrt(ln n / n)`.
pub fn default_rgg_radius(n: usize) -> f64 {
    ((n as f64).ln() / n as f64).sqrt()
}

/// Random geometric graph on the unit square.
///
/// Points are drawn uniformly; `(i, j)` is an edge iff their Euclidean
/// distance is strictly below `r`. Disconnected draws are discarded and a
/// fresh point set is drawn from the same stream, up to
/// [`RGG_MAX_ATTEMPTS`] times.
pub fn build_random_geometric(n: usize, r: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidTopology(format!(
            "random geometric graph needs at least 2 nodes, got {n}"
        )));
    }
    if !(r > 0.0 && r <= std::f64::consts::SQRT_2) {
        return Err(Error::InvalidTopology(format!(
            "radius must lie in (0, sqrt 2], got {r}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RGG_MAX_ATTEMPTS {
        let coords: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let dx = coords[i][0] - coords[j][0];
                let dy = coords[i][1] - coords[j][1];
                if dx.hypot(dy) < r {
                    edges.push((i, j));
                }
            }
        }
        if let Ok(mut g) = Graph::from_edges(n, edges) {
            g.coords = Some(coords);
            return Ok(g);
        }
    }
    Err(Error::Unconnected {
        attempts: RGG_MAX_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_of_ten() {
        let g = build_cycle(10).unwrap();
        assert_eq!(g.n(), 10);
        assert_eq!(g.m(), 10);
        assert!(g.degrees().iter().all(|&d| d == 2));
    }

    #[test]
    fn cycle_smallest_and_enumerated() {
        assert_eq!(build_cycle(3).unwrap().m(), 3);
        let g = build_cycle(4).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2), (2, 3), (0, 3)]);
    }

    #[test]
    fn cycle_too_small() {
        assert!(matches!(build_cycle(2), Err(Error::InvalidTopology(_))));
    }

    #[test]
    fn from_edges_rejects_bad_lists() {
        assert!(Graph::from_edges(3, vec![(0, 1), (1, 1)]).is_err());
        assert!(Graph::from_edges(3, vec![(0, 1), (1, 0), (1, 2)]).is_err());
        assert!(Graph::from_edges(3, vec![(0, 1), (1, 3)]).is_err());
        assert!(Graph::from_edges(4, vec![(0, 1), (2, 3)]).is_err());
    }

    #[test]
    fn degree_sum_is_twice_edges() {
        let g = build_random_geometric(40, 0.4, 3).unwrap();
        assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.m());
    }

    #[test]
    fn default_radius_for_hundred_nodes() {
        // sqrt(ln(100) / 100) = sqrt(0.046051701859880914)
        assert!((default_rgg_radius(100) - 0.214597).abs() < 1e-6);
    }

    #[test]
    fn rgg_max_radius_two_nodes() {
        let g = build_random_geometric(2, std::f64::consts::SQRT_2, 11).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.coords().unwrap().len(), 2);
    }

    #[test]
    fn rgg_tiny_radius_fails() {
        assert_eq!(
            build_random_geometric(5, 1e-9, 0),
            Err(Error::Unconnected { attempts: 100 })
        );
    }

    #[test]
    fn rgg_is_deterministic_per_seed() {
        let r = default_rgg_radius(100);
        let a = build_random_geometric(100, r, 7).unwrap();
        let b = build_random_geometric(100, r, 7).unwrap();
        assert_eq!(a.edges(), b.edges());
        let coords_a: Vec<u64> = a
            .coords()
            .unwrap()
            .iter()
            .flatten()
            .map(|v| v.to_bits())
            .collect();
        let coords_b: Vec<u64> = b
            .coords()
            .unwrap()
            .iter()
            .flatten()
            .map(|v| v.to_bits())
            .collect();
        assert_eq!(coords_a, coords_b);
    }

    #[test]
    fn incidence_rows() {
        let g = Graph::from_edges(2, vec![(0, 1)]).unwrap();
        assert_eq!(g.incidence_row(0).unwrap().to_dense(2), vec![1.0, -1.0]);
        let c3 = build_cycle(3).unwrap();
        assert_eq!(c3.edge(1).unwrap(), (1, 2));
        assert_eq!(
            c3.incidence_row(1).unwrap().to_dense(3),
            vec![0.0, 1.0, -1.0]
        );
        for e in 0..c3.m() {
            let row = c3.incidence_row(e).unwrap().to_dense(3);
            assert_eq!(row.iter().sum::<f64>(), 0.0);
        }
        assert_eq!(
            c3.incidence_row(3),
            Err(Error::EdgeOutOfRange { index: 3, edges: 3 })
        );
    }

    #[test]
    fn complete_graph_spectrum() {
        let s = build_complete(3).unwrap().spectral_summary().unwrap();
        assert!((s.alpha - 3.0).abs() < 1e-12);
        for (got, want) in s.laplacian_eigenvalues.iter().zip([3.0, 3.0, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cycle_ten_spectrum() {
        // 2 - 2 cos(2 pi / 10), from dense eigendecomposition of the cycle Laplacian.
        let s = build_cycle(10).unwrap().spectral_summary().unwrap();
        assert!((s.alpha - 0.381_966_011_250_105_1).abs() < 1e-12);
        assert!((s.beta - 26.180_339_887_498_95).abs() < 1e-9);
        assert!(s.laplacian_eigenvalues[9].abs() < 1e-12);
        assert!(((s.alpha * s.beta) / 10.0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn edge_list_round_trip_and_errors() {
        let g = build_cycle(5).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("5 5\n0 1\n"));
        assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
        assert!(Graph::parse_edge_list("3 2\n0 1\n").is_err());
        assert!(Graph::parse_edge_list("").is_err());
        assert!(Graph::parse_edge_list("3 3\n0 1\n1 x\n0 2\n").is_err());
    }

    #[test]
    fn json_document_validates() {
        let g = build_random_geometric(10, 0.8, 1).unwrap();
        let back = Graph::try_from(GraphDocument::from(g.clone())).unwrap();
        assert_eq!(back, g);
        let bad = GraphDocument {
            n: 3,
            edges: vec![[0, 1]],
            coords: None,
        };
        assert!(Graph::try_from(bad).is_err());
    }
}
