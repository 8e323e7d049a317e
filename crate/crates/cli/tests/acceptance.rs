//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! cargo test -p gossip-sim --test acceptance

use std::path::Path;
use std::time::{Duration, Instant};

use gossip_core::bounds::expected_phi_power;
use gossip_core::duality::{edge_gap_measure, gap_fraction};
use gossip_core::graph::{build_complete, build_cycle, build_random_geometric, default_rgg_radius};
use gossip_core::protocols::sample_edge;
use gossip_core::{
    ConsensusProblem, DualPoint, Graph, NoiseParams, PrimalPoint, Protocol, Simulation,
};
use gossip_sim::commands::{run_experiment, summarize, Summary};
use gossip_sim::stats::{log_linear_slope, mean_se};
use gossip_sim::{cmd_run, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEEDS: u64 = 200;
const BOUND_REL_SLACK: f64 = gossip_sim::commands::BOUND_REL_SLACK;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: "1",
            name: "dual increment identity",
            limit: Some(Duration::from_secs(5)),
            check: dual_increment_identity,
        },
        Criterion {
            id: "2",
            name: "measure relations",
            limit: Some(Duration::from_secs(10)),
            check: measure_relations,
        },
        Criterion {
            id: "3",
            name: "standard gossip linear rate",
            limit: Some(Duration::from_secs(30)),
            check: standard_rate,
        },
        Criterion {
            id: "4",
            name: "binary oracle, optimal fixed stepsize",
            limit: Some(Duration::from_secs(60)),
            check: binary_fixed_horizon,
        },
        Criterion {
            id: "5",
            name: "binary oracle, adaptive stepsize",
            limit: None,
            check: binary_adaptive,
        },
        Criterion {
            id: "6",
            name: "eps-gap oracle",
            limit: None,
            check: eps_gap,
        },
        Criterion {
            id: "7a",
            name: "noise ledger identity",
            limit: None,
            check: noise_ledger,
        },
        Criterion {
            id: "7b",
            name: "E[phi^(2 t_i)] closed form",
            limit: None,
            check: phi_power_expectation,
        },
        Criterion {
            id: "7c",
            name: "zero noise equals standard gossip",
            limit: None,
            check: zero_noise_identical,
        },
        Criterion {
            id: "7d",
            name: "noise threshold regimes",
            limit: None,
            check: noise_regimes,
        },
        Criterion {
            id: "8",
            name: "byte-identical reruns",
            limit: None,
            check: deterministic_runs,
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut out = (c.check)();
        let elapsed = start.elapsed();
        if let Some(limit) = c.limit {
            if elapsed > limit {
                out.pass = false;
                out.detail
                    .push_str(&format!("; over the {} s limit", limit.as_secs()));
            }
        }
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} {:<3} {:<38} {} ({:.2} s)",
            c.id,
            c.name,
            out.detail,
            elapsed.as_secs_f64()
        );
        failed += usize::from(!out.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn cycle10_experiment(iterations: u64, protocol: &str) -> Summary {
    let text = format!(
        "schema_version = 1\niterations = {iterations}\nseed_count = {SEEDS}\n\
         [graph]\ntype = \"cycle\"\nn = 10\n\
         [initial]\ntype = \"uniform\"\nseed = 42\n\
         [protocol]\n{protocol}\n"
    );
    let exp = ExperimentConfig::from_toml(&text)
        .and_then(|c| c.instantiate(Path::new(".")))
        .expect("valid experiment");
    let traces = run_experiment(&exp).expect("runs succeed");
    summarize(&exp, &traces).expect("summary")
}

fn random_problem(rng: &mut ChaCha8Rng) -> ConsensusProblem {
    let n = rng.random_range(2..=30usize);
    let g = match (n, rng.random_range(0..3)) {
        (2, _) => Graph::from_edges(2, vec![(0, 1)]).unwrap(),
        (_, 0) => build_cycle(n).unwrap(),
        (_, 1) => build_complete(n).unwrap(),
        _ => {
            build_random_geometric(n, 0.6, rng.random()).unwrap_or_else(|_| build_cycle(n).unwrap())
        }
    };
    let c = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    ConsensusProblem::new(g, c).unwrap()
}

fn dual_increment_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let p = random_problem(&mut rng);
        let m = p.graph().m();
        let y = DualPoint((0..m).map(|_| rng.random_range(-3.0..3.0)).collect());
        let e = sample_edge(m, &mut rng);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let lambda = sign * rng.random_range(0.01..2.0);

        let mut moved = y.clone();
        moved.0[e] += lambda;
        let measured = p.dual_value(&moved).unwrap() - p.dual_value(&y).unwrap();
        let x = p.map_to_primal(&y).unwrap();
        let (i, j) = p.graph().edge(e).unwrap();
        let gap = x.0[i] - x.0[j];
        let predicted = -lambda * gap - lambda * lambda;
        // relative to the size of the two terms, so near-cancelling cases stay meaningful
        let scale = (lambda * gap).abs() + lambda * lambda;
        worst = worst.max((measured - predicted).abs() / scale);
    }
    outcome(
        worst <= 1e-10,
        format!("max rel err {worst:.2e} over 1e4 tuples"),
    )
}

fn measure_relations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let graphs = [
        build_cycle(10).unwrap(),
        build_random_geometric(100, default_rgg_radius(100), 1).unwrap(),
    ];
    let mut worst_identity: f64 = 0.0;
    let mut violations = 0usize;
    for g in &graphs {
        let alpha = g.spectral_summary().unwrap().alpha;
        let (n, m) = (g.n() as f64, g.m() as f64);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..g.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x_bar = x.iter().sum::<f64>() / n;
            let dist_sq: f64 = x.iter().map(|v| (x_bar - v).powi(2)).sum();
            let mut pairs = 0.0;
            for xi in &x {
                for xj in &x {
                    pairs += (xj - xi).powi(2);
                }
            }
            worst_identity = worst_identity.max((pairs / (2.0 * n) - dist_sq).abs() / dist_sq);

            let dist = dist_sq.sqrt();
            let total_gap = g.total_edge_gap(&x);
            violations += usize::from(alpha.sqrt() * dist > total_gap * (1.0 + 1e-12));
            violations += usize::from(total_gap > (m * n).sqrt() * dist * (1.0 + 1e-12));

            let px = PrimalPoint(x);
            let l = edge_gap_measure(g, &px);
            for eps in [1e-3, 0.05, 0.2, 0.5, 1.0] {
                let delta = gap_fraction(g, &px, eps).unwrap();
                violations += usize::from(eps * delta > l);
            }
        }
    }
    outcome(
        worst_identity <= 1e-10 && violations == 0,
        format!("identity rel err {worst_identity:.2e}, {violations} inequality violations"),
    )
}

/// Largest `empirical - (bound + 3 se)` over the recorded grid; `<= 0` means the bound holds.
fn worst_bound_excess(s: &Summary) -> f64 {
    s.bound
        .empirical
        .iter()
        .zip(&s.bound.empirical_se)
        .zip(&s.bound.bound)
        .filter_map(|((e, se), b)| Some(e.as_ref()? - b.as_ref()? - 3.0 * se.unwrap_or(0.0)))
        .zip(&s.bound.bound)
        .map(|(excess, b)| excess - BOUND_REL_SLACK * b.unwrap().abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn standard_rate() -> Outcome {
    let s = cycle10_experiment(2000, "type = \"standard\"");
    let excess = worst_bound_excess(&s);
    outcome(
        s.bound.holds_within_3se && excess <= 0.0,
        format!(
            "rho={:.6}, max(emp - bound - 3se)={excess:.2e}",
            s.bound.rho
        ),
    )
}

fn binary_fixed_horizon() -> Outcome {
    let k = 10_000u64;
    let s = cycle10_experiment(
        k,
        "type = \"binary\"\nschedule = { type = \"fixed_horizon_optimal\" }",
    );
    let bound = 2.0 * (s.d_gap / (k + 1) as f64).sqrt();
    let (t_min, l_min) = s
        .curves
        .l_t_mean
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let se = s.curves.l_t_se[t_min];
    outcome(
        l_min <= bound + 3.0 * se,
        format!(
            "min_t mean L = {l_min:.4e} at t={} vs bound {bound:.4e} (se {se:.1e})",
            s.curves.iter[t_min]
        ),
    )
}

fn binary_adaptive() -> Outcome {
    let s = cycle10_experiment(
        5000,
        "type = \"binary\"\nschedule = { type = \"adaptive\" }",
    );
    let excess = worst_bound_excess(&s);
    let sq: Vec<f64> = s.curves.dual_subopt_mean.iter().map(|v| 2.0 * v).collect();
    let slope = log_linear_slope(&s.curves.iter, &sq);
    let theory = s.bound.rho.ln();
    let pass = s.bound.holds_within_3se && excess <= 0.0 && slope <= 0.9 * theory;
    outcome(
        pass,
        format!("max(emp - bound - 3se)={excess:.2e}, slope {slope:.3e} vs log rho {theory:.3e}"),
    )
}

fn eps_gap() -> Outcome {
    let eps = 0.02;
    let k = 10_000u64;
    let s = cycle10_experiment(k, &format!("type = \"eps_gap\"\neps = {eps}"));
    let delta = s.final_values.delta_avg.unwrap();
    let bound = 4.0 * s.d_gap / (k as f64 * eps * eps);

    // per-step check on independent simulations of the same problem
    let problem = ConsensusProblem::new(build_cycle(10).unwrap(), {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        (0..10).map(|_| rng.random::<f64>()).collect()
    })
    .unwrap();
    let protocol = Protocol::EpsGap { eps };
    let floor = eps * eps / 4.0;
    let (moves, violations) = (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let mut sim = Simulation::new(&problem, &protocol, seed, false).unwrap();
            let (mut moves, mut violations) = (0u64, 0u64);
            for _ in 0..k {
                let before = PrimalPoint(sim.state().x.clone());
                let eff = sim.step().unwrap();
                let step = eff.dual_step.unwrap();
                if step != 0.0 {
                    moves += 1;
                    let inc = problem.dual_increment(&before, eff.edge, step).unwrap();
                    violations += u64::from(inc < floor);
                }
            }
            (moves, violations)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    outcome(
        delta <= bound && violations == 0 && moves > 0,
        format!(
            "delta^k {delta:.4e} vs bound {bound:.4e}; {moves} moves, {violations} below eps^2/4"
        ),
    )
}

fn noise_ledger() -> Outcome {
    let g = build_cycle(10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let c: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
    let sum_c: f64 = c.iter().sum();
    let problem = ConsensusProblem::new(g, c).unwrap();
    let protocol = Protocol::Noise(NoiseParams::uniform(10, 1.0, 0.999).unwrap());
    let mut sim = Simulation::new(&problem, &protocol, 7, false).unwrap();
    let mut worst: f64 = 0.0;
    let mut largest_outstanding: f64 = 0.0;
    for _ in 0..1_000_000 {
        sim.step().unwrap();
        let st = sim.state();
        let drift = st.x.iter().sum::<f64>() - sum_c;
        let outstanding: f64 = st.outstanding_noise.iter().sum();
        worst = worst.max((drift - outstanding).abs());
        largest_outstanding = largest_outstanding.max(outstanding.abs());
    }
    outcome(
        worst <= 1e-9,
        format!("max |sum x - sum c - outstanding| {worst:.2e} over 1e6 steps (peak outstanding {largest_outstanding:.2})"),
    )
}

fn phi_power_expectation() -> Outcome {
    let (phi, t, runs) = (0.9, 50u64, 10_000u64);
    let g = build_cycle(10).unwrap();
    let problem = ConsensusProblem::new(g, vec![0.0; 10]).unwrap();
    let protocol = Protocol::Noise(NoiseParams::uniform(10, 1.0, phi).unwrap());
    let counters: Vec<Vec<u64>> = (0..runs)
        .into_par_iter()
        .map(|seed| {
            let mut sim = Simulation::new(&problem, &protocol, seed, false).unwrap();
            for _ in 0..t {
                sim.step().unwrap();
            }
            sim.into_state().noise_counters
        })
        .collect();
    let expected = expected_phi_power(2, 10, phi, t);
    let mut worst_z: f64 = 0.0;
    for node in 0..10 {
        let samples: Vec<f64> = counters
            .iter()
            .map(|c| phi.powi(2 * c[node] as i32))
            .collect();
        let (mean, se) = mean_se(&samples);
        worst_z = worst_z.max((mean - expected).abs() / se);
    }
    outcome(
        worst_z <= 4.0,
        format!("closed form {expected:.5}, worst node within {worst_z:.2} se"),
    )
}

fn zero_noise_identical() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let c: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
    let problem = ConsensusProblem::new(build_cycle(10).unwrap(), c).unwrap();
    let quiet = Protocol::Noise(NoiseParams::uniform(10, 0.0, 0.5).unwrap());
    let mismatches: u64 = (0..SEEDS)
        .into_par_iter()
        .map(|seed| {
            let mut a = Simulation::new(&problem, &Protocol::Standard, seed, false).unwrap();
            let mut b = Simulation::new(&problem, &quiet, seed, false).unwrap();
            let mut bad = 0;
            for _ in 0..2000 {
                let (ea, eb) = (a.step().unwrap(), b.step().unwrap());
                let same = ea.edge == eb.edge
                    && a.state()
                        .x
                        .iter()
                        .zip(&b.state().x)
                        .all(|(p, q)| p.to_bits() == q.to_bits());
                bad += u64::from(!same);
            }
            bad
        })
        .sum();
    outcome(
        mismatches == 0,
        format!("{mismatches} differing steps over {SEEDS} seeds x 2000"),
    )
}

fn window_slope(s: &Summary, from: u64, to: u64) -> f64 {
    let (its, vals): (Vec<u64>, Vec<f64>) = s
        .curves
        .iter
        .iter()
        .zip(&s.curves.dual_subopt_mean)
        .filter(|(t, _)| (from..=to).contains(*t))
        .map(|(t, v)| (*t, *v))
        .unzip();
    log_linear_slope(&its, &vals)
}

fn noise_regimes() -> Outcome {
    let standard = cycle10_experiment(1500, "type = \"standard\"");
    let fast = cycle10_experiment(1500, "type = \"noise\"\nsigma = 1.0\nphi = 0.5");
    let slow = cycle10_experiment(4000, "type = \"noise\"\nsigma = 1.0\nphi = 0.98");

    let s_std = window_slope(&standard, 300, 1500);
    let s_fast = window_slope(&fast, 300, 1500);
    let s_slow = window_slope(&slow, 1000, 4000);
    let phi: f64 = 0.98;
    let decay = (1.0 - (2.0 / 10.0) * (1.0 - phi * phi)).ln();

    let fast_ok = (s_fast / s_std - 1.0).abs() <= 0.15;
    let slow_ok = (s_slow / decay - 1.0).abs() <= 0.15;
    let thresholds = fast
        .noise_threshold
        .as_ref()
        .zip(slow.noise_threshold.as_ref());
    let regimes_ok = thresholds
        .is_some_and(|(f, s)| !f.dominates.iter().any(|d| *d) && s.dominates.iter().all(|d| *d));
    outcome(
        fast_ok && slow_ok && regimes_ok,
        format!(
            "phi=0.5 slope {s_fast:.4e} vs standard {s_std:.4e}; phi=0.98 slope {s_slow:.4e} vs {decay:.4e}"
        ),
    )
}

fn deterministic_runs() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let cfg = dir.path().join("noise.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\niterations = 3000\nseed_count = 16\n\
         [graph]\ntype = \"rgg\"\nn = 100\nseed = 5\n\
         [initial]\ntype = \"uniform\"\nseed = 9\n\
         [protocol]\ntype = \"noise\"\nsigma = 1.0\ngamma = 0.17\n",
    )
    .unwrap();
    let a = cmd_run(&cfg, Some(&dir.path().join("a"))).unwrap();
    let b = cmd_run(&cfg, Some(&dir.path().join("b"))).unwrap();
    let same_trace = std::fs::read(&a.trace_path).unwrap() == std::fs::read(&b.trace_path).unwrap();
    let same_summary =
        std::fs::read(&a.summary_path).unwrap() == std::fs::read(&b.summary_path).unwrap();
    outcome(
        same_trace && same_summary,
        format!("trace identical: {same_trace}, summary identical: {same_summary}"),
    )
}
