use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{sample_edge, Protocol, ProtocolState, StepEffect};
use crate::duality::{edge_gap_measure, gap_fraction, mean, ConsensusProblem, PrimalPoint};
use crate::error::{Error, Result};

/// Largest iteration count recorded at every step by default.
pub const FULL_RECORD_LIMIT: u64 = 10_000;

/// Every iteration up to [`FULL_RECORD_LIMIT`], otherwise `ceil(k / 1e4)`.
pub fn default_stride(iterations: u64) -> u64 {
    if iterations <= FULL_RECORD_LIMIT {
        1
    } else {
        iterations.div_ceil(FULL_RECORD_LIMIT)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub iterations: u64,
    /// Record every `stride`-th iteration; `t = 0` and `t = k` are always recorded.
    pub stride: u64,
    /// Tolerance for the gap-fraction column; `None` omits it.
    pub eps_metric: Option<f64>,
    pub track_dual: bool,
    pub record_trajectory: bool,
}

impl RunOptions {
    pub fn new(iterations: u64) -> Self {
        RunOptions {
            iterations,
            stride: default_stride(iterations),
            eps_metric: None,
            track_dual: false,
            record_trajectory: false,
        }
    }
}

/// Metrics of one recorded iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: u64,
    pub dual_subopt: f64,
    /// `None` when the initial vector is already the consensus vector.
    pub rel_error: Option<f64>,
    pub l_t: f64,
    pub delta_t: Option<f64>,
    /// `mean(x^t) - c_bar`.
    pub mean_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub seed: u64,
    pub records: Vec<TraceRecord>,
    /// `(iteration, x)` snapshots at recorded iterations, when requested.
    pub trajectory: Vec<(u64, Vec<f64>)>,
    pub final_state: ProtocolState,
    /// Sum of the stepsizes applied by the binary protocol.
    pub stepsize_sum: f64,
    pub stepsize_sq_sum: f64,
}

/// One seeded protocol run that can be advanced step by step.
///
/// Edge sampling and Gaussian noise use two independent ChaCha8 streams of the
/// same seed, so the edge sequence does not depend on whether noise is drawn.
pub struct Simulation<'a> {
    problem: &'a ConsensusProblem,
    protocol: &'a Protocol,
    state: ProtocolState,
    edge_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    stepsize_sum: f64,
    stepsize_sq_sum: f64,
}

impl<'a> Simulation<'a> {
    pub fn new(
        problem: &'a ConsensusProblem,
        protocol: &'a Protocol,
        seed: u64,
        track_dual: bool,
    ) -> Result<Self> {
        protocol.validate(problem.graph().n())?;
        if track_dual && !protocol.supports_dual() {
            return Err(Error::param(
                "track_dual",
                "the noise protocol keeps no dual iterate",
            ));
        }
        let edge_rng = ChaCha8Rng::seed_from_u64(seed);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
        noise_rng.set_stream(1);
        Ok(Simulation {
            problem,
            protocol,
            state: ProtocolState::new(problem, track_dual),
            edge_rng,
            noise_rng,
            stepsize_sum: 0.0,
            stepsize_sq_sum: 0.0,
        })
    }

    pub fn state(&self) -> &ProtocolState {
        &self.state
    }

    pub fn into_state(self) -> ProtocolState {
        self.state
    }

    pub fn step(&mut self) -> Result<StepEffect> {
        let g = self.problem.graph();
        let e = sample_edge(g.m(), &mut self.edge_rng);
        match self.protocol {
            Protocol::Standard => self.state.step_standard(g, e),
            Protocol::Binary(schedule) => {
                let lambda = schedule.stepsize(self.state.t, g, &self.state.x);
                self.stepsize_sum += lambda;
                self.stepsize_sq_sum += lambda * lambda;
                if lambda == 0.0 {
                    // adaptive rule at exact consensus: nothing left to move
                    self.state.t += 1;
                    let (i, j) = g.edge(e)?;
                    return Ok(StepEffect {
                        edge: e,
                        gap_before: self.state.x[i] - self.state.x[j],
                        dual_step: Some(0.0),
                    });
                }
                self.state.step_binary(g, e, lambda)
            }
            Protocol::EpsGap { eps } => self.state.step_eps_gap(g, e, *eps),
            Protocol::Noise(params) => self.state.step_noise(g, e, params, &mut self.noise_rng),
        }
    }

    fn record(&self, eps: Option<f64>) -> Result<TraceRecord> {
        let g = self.problem.graph();
        let x = PrimalPoint(self.state.x.clone());
        Ok(TraceRecord {
            iter: self.state.t,
            dual_subopt: self.problem.dual_suboptimality(&x)?,
            rel_error: self.problem.relative_error(&x)?.value(),
            l_t: edge_gap_measure(g, &x),
            delta_t: eps.map(|eps| gap_fraction(g, &x, eps)).transpose()?,
            mean_drift: mean(&x.0) - self.problem.c_bar(),
        })
    }
}

/// Runs `opts.iterations` steps and records metrics along the way.
///
/// Bit-identical for equal `(problem, protocol, seed, opts)`.
pub fn run(
    problem: &ConsensusProblem,
    protocol: &Protocol,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trace> {
    if opts.stride == 0 {
        return Err(Error::param("stride", "must be at least 1"));
    }
    let eps = match (opts.eps_metric, protocol) {
        (Some(eps), _) => Some(eps),
        (None, Protocol::EpsGap { eps }) => Some(*eps),
        _ => None,
    };
    let mut sim = Simulation::new(problem, protocol, seed, opts.track_dual)?;
    let mut records = Vec::new();
    let mut trajectory = Vec::new();
    let k = opts.iterations;
    for t in 0..=k {
        if t > 0 {
            sim.step()?;
        }
        if t == 0 || t == k || t % opts.stride == 0 {
            records.push(sim.record(eps)?);
            if opts.record_trajectory {
                trajectory.push((t, sim.state.x.clone()));
            }
        }
    }
    Ok(Trace {
        seed,
        records,
        trajectory,
        stepsize_sum: sim.stepsize_sum,
        stepsize_sq_sum: sim.stepsize_sq_sum,
        final_state: sim.into_state(),
    })
}
