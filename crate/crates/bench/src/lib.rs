//! Shared fixtures for the criterion benches.

use gossip_core::graph::{build_cycle, build_random_geometric, default_rgg_radius};
use gossip_core::{ConsensusProblem, Graph, NoiseParams, Protocol, StepsizeSchedule};

/// Deterministic, well-spread initial values in `[0, 1)`.
pub fn initial_values(n: usize) -> Vec<f64> {
    const GOLDEN: f64 = 0.618_033_988_749_895;
    (0..n).map(|i| (i as f64 * GOLDEN).fract()).collect()
}

pub fn problem_on(g: Graph) -> ConsensusProblem {
    let c = initial_values(g.n());
    ConsensusProblem::new(g, c).expect("fixture problem")
}

pub fn cycle_problem(n: usize) -> ConsensusProblem {
    problem_on(build_cycle(n).expect("cycle"))
}

pub fn rgg(n: usize, seed: u64) -> Graph {
    build_random_geometric(n, default_rgg_radius(n), seed).expect("connected rgg")
}

/// One instance of each protocol, labelled for bench ids.
pub fn protocols(p: &ConsensusProblem) -> Vec<(&'static str, Protocol)> {
    let g = p.graph();
    vec![
        ("standard", Protocol::Standard),
        (
            "binary_fixed",
            Protocol::Binary(StepsizeSchedule::FixedHorizonOptimal {
                r: p.initial_dual_gap(),
                horizon: 10_000,
            }),
        ),
        (
            "binary_adaptive",
            Protocol::Binary(StepsizeSchedule::adaptive_default(g)),
        ),
        ("eps_gap", Protocol::EpsGap { eps: 0.02 }),
        (
            "noise",
            Protocol::Noise(NoiseParams::uniform(g.n(), 1.0, 0.9).expect("noise params")),
        ),
    ]
}
