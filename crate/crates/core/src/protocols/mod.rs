//! Pairwise gossip protocols as single-step transitions on [`ProtocolState`].
//!
//! Four protocols share the same tick: one edge `e = (i, j)` is drawn
//! uniformly at random and only its endpoints change.
//!
//! * standard: both endpoints move to their average.
//! * binary oracle: the smaller endpoint gains `lambda^t`, the other loses it.
//! * eps-gap oracle: if the gap is at least `eps`, the endpoints move `eps/2`
//!   toward each other.
//! * controlled noise insertion: each endpoint adds fresh decaying Gaussian
//!   noise, withdraws the noise it inserted at its previous activation, and
//!   then both endpoints average.

mod runner;
mod schedule;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::duality::ConsensusProblem;
use crate::error::{Error, Result};
use crate::graph::Graph;

pub use runner::{default_stride, run, RunOptions, Simulation, Trace, TraceRecord};
pub use schedule::StepsizeSchedule;

/// Per-node Gaussian noise magnitudes and decay rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    sigma: Vec<f64>,
    phi: Vec<f64>,
}

impl NoiseParams {
    pub fn new(sigma: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if sigma.len() != phi.len() {
            return Err(Error::LengthMismatch {
                what: "noise decay rates",
                expected: sigma.len(),
                actual: phi.len(),
            });
        }
        if let Some(s) = sigma.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::param(
                "sigma",
                format!("must be finite and >= 0, got {s}"),
            ));
        }
        if let Some(p) = phi.iter().find(|p| !(**p >= 0.0 && **p < 1.0)) {
            return Err(Error::param("phi", format!("must lie in [0, 1), got {p}")));
        }
        Ok(NoiseParams { sigma, phi })
    }

    /// Same `sigma` and `phi` on every node.
    pub fn uniform(n: usize, sigma: f64, phi: f64) -> Result<Self> {
        Self::new(vec![sigma; n], vec![phi; n])
    }

    /// `sigma` on every node with decay rates from [`phi_from_gamma`].
    pub fn with_gamma(g: &Graph, sigma: f64, gamma: f64) -> Result<Self> {
        Self::new(vec![sigma; g.n()], phi_from_gamma(g, gamma)?)
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// `phi_i = sqrt(1 - gamma / d_i)` for every node. Requires `0 < gamma <= d_min`.
pub fn phi_from_gamma(g: &Graph, gamma: f64) -> Result<Vec<f64>> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::param(
            "gamma",
            format!("must be positive, got {gamma}"),
        ));
    }
    let d_min = g.d_min() as f64;
    if gamma > d_min {
        return Err(Error::param(
            "gamma",
            format!("{gamma} exceeds the minimum degree {d_min}"),
        ));
    }
    Ok(g.degrees()
        .iter()
        .map(|&d| (1.0 - gamma / d as f64).max(0.0).sqrt())
        .collect())
}

/// Protocol selection with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Protocol {
    Standard,
    Binary(StepsizeSchedule),
    EpsGap { eps: f64 },
    Noise(NoiseParams),
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Standard => "standard",
            Protocol::Binary(_) => "binary",
            Protocol::EpsGap { .. } => "eps_gap",
            Protocol::Noise(_) => "noise",
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Protocol::Standard => Ok(()),
            Protocol::Binary(s) => s.validate(),
            Protocol::EpsGap { eps } => check_eps(*eps),
            Protocol::Noise(params) if params.len() != n => Err(Error::LengthMismatch {
                what: "noise parameters",
                expected: n,
                actual: params.len(),
            }),
            Protocol::Noise(_) => Ok(()),
        }
    }

    /// Whether a dual iterate can be carried alongside `x`.
    pub fn supports_dual(&self) -> bool {
        !matches!(self, Protocol::Noise(_))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "eps",
            format!("must be positive and finite, got {eps}"),
        ))
    }
}

/// Draws an edge index uniformly from `[0, m)` using exactly one `u64`.
pub fn sample_edge<R: RngCore + ?Sized>(m: usize, rng: &mut R) -> usize {
    debug_assert!(m >= 1);
    ((u128::from(rng.next_u64()) * m as u128) >> 64) as usize
}

/// What a single step did to the sampled edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEffect {
    pub edge: usize,
    /// `x_i - x_j` before the step, with `i < j`.
    pub gap_before: f64,
    /// Signed dual move `y_e += dual_step`; zero when nothing moved. `None`
    /// for the noise protocol, which has no dual iterate.
    pub dual_step: Option<f64>,
}

/// Mutable iterate of a protocol run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolState {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub t: u64,
    /// Activations per node (noise protocol only).
    pub noise_counters: Vec<u64>,
    /// Noise inserted at each node's last activation and not yet withdrawn.
    pub outstanding_noise: Vec<f64>,
}

impl ProtocolState {
    /// `x^0 = c`, `y^0 = 0` when `track_dual` is set.
    pub fn new(p: &ConsensusProblem, track_dual: bool) -> Self {
        let n = p.graph().n();
        ProtocolState {
            x: p.initial_values().to_vec(),
            y: track_dual.then(|| vec![0.0; p.graph().m()]),
            t: 0,
            noise_counters: vec![0; n],
            outstanding_noise: vec![0.0; n],
        }
    }

    fn move_along(&mut self, e: usize, i: usize, j: usize, step: f64) {
        self.x[i] += step;
        self.x[j] -= step;
        if let Some(y) = self.y.as_mut() {
            y[e] += step;
        }
    }

    /// Standard gossip: average the endpoints of `e`.
    pub fn step_standard(&mut self, g: &Graph, e: usize) -> Result<StepEffect> {
        let (i, j) = g.edge(e)?;
        let gap = self.x[i] - self.x[j];
        let avg = (self.x[i] + self.x[j]) / 2.0;
        self.x[i] = avg;
        self.x[j] = avg;
        // exact line search on the dual coordinate
        let step = -gap / 2.0;
        if let Some(y) = self.y.as_mut() {
            y[e] += step;
        }
        self.t += 1;
        Ok(StepEffect {
            edge: e,
            gap_before: gap,
            dual_step: Some(step),
        })
    }

    /// Binary oracle step. Ties take the `x_i >= x_j` branch, which moves
    /// `x_i` down and `x_j` up.
    pub fn step_binary(&mut self, g: &Graph, e: usize, lambda: f64) -> Result<StepEffect> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param(
                "lambda",
                format!("must be positive and finite, got {lambda}"),
            ));
        }
        let (i, j) = g.edge(e)?;
        let gap = self.x[i] - self.x[j];
        let step = if self.x[i] < self.x[j] {
            lambda
        } else {
            -lambda
        };
        self.move_along(e, i, j, step);
        self.t += 1;
        Ok(StepEffect {
            edge: e,
            gap_before: gap,
            dual_step: Some(step),
        })
    }

    /// eps-gap oracle step. Moves only when `|x_i - x_j| >= eps`.
    pub fn step_eps_gap(&mut self, g: &Graph, e: usize, eps: f64) -> Result<StepEffect> {
        check_eps(eps)?;
        let (i, j) = g.edge(e)?;
        let gap = self.x[i] - self.x[j];
        let half = eps / 2.0;
        // same test as the gap-fraction count, |x_i - x_j| >= eps
        let step = if gap <= -eps {
            half
        } else if gap >= eps {
            -half
        } else {
            0.0
        };
        if step != 0.0 {
            self.move_along(e, i, j, step);
        }
        self.t += 1;
        Ok(StepEffect {
            edge: e,
            gap_before: gap,
            dual_step: Some(step),
        })
    }

    /// Controlled noise insertion step. Draws the low endpoint's noise first.
    pub fn step_noise<R: RngCore + ?Sized>(
        &mut self,
        g: &Graph,
        e: usize,
        params: &NoiseParams,
        rng: &mut R,
    ) -> Result<StepEffect> {
        let (i, j) = g.edge(e)?;
        let gap = self.x[i] - self.x[j];
        let wi = self.refresh_noise(i, params, rng);
        let wj = self.refresh_noise(j, params, rng);
        let avg = (self.x[i] + wi + self.x[j] + wj) / 2.0;
        self.x[i] = avg;
        self.x[j] = avg;
        self.t += 1;
        Ok(StepEffect {
            edge: e,
            gap_before: gap,
            dual_step: None,
        })
    }

    /// Returns `w = phi^{t_i} v - (previous residual)` and stores the new residual.
    fn refresh_noise<R: RngCore + ?Sized>(
        &mut self,
        node: usize,
        params: &NoiseParams,
        rng: &mut R,
    ) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        let v = params.sigma[node] * z;
        let decay = params.phi[node].powf(self.noise_counters[node] as f64);
        let fresh = decay * v;
        let w = fresh - self.outstanding_noise[node];
        self.outstanding_noise[node] = fresh;
        self.noise_counters[node] += 1;
        w
    }
}
