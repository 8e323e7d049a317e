//! Closed-form convergence bounds for the four gossip protocols.
//!
//! All bounds take the initial dual gap `D(y*) - D(y^0)` as
//! `1/2 ||c_bar 1 - c||^2` (dual start at the origin).

use serde::Serialize;

use crate::duality::ConsensusProblem;
use crate::error::{Error, Result};
use crate::protocols::{NoiseParams, Protocol, StepsizeSchedule};

/// What a bound curve bounds, so traces can be compared to the right column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMeasure {
    /// `E[D(y*) - D(y^k)] = E[1/2 ||c_bar 1 - x^k||^2]`.
    DualSubopt,
    /// `E[||c_bar 1 - x^k||^2]`.
    SqDist,
    /// `min over t <= k of E[L^t]`.
    MinMeanEdgeGap,
    /// `(1/k) sum over t < k of E[Delta^t(eps)]`.
    MeanGapFraction,
}

/// Spectral and problem constants every bound depends on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBounds {
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    pub degrees: Vec<usize>,
    /// `D(y*) - D(y^0)`.
    pub d_gap: f64,
}

/// Per-node comparison of noise decay against the standard contraction factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub rho: f64,
    /// `1 - (d_i/m)(1 - phi_i^2)` per node.
    pub decay_factors: Vec<f64>,
    /// `rho <= decay_factor_i`: node `i` noise decay dominates the rate.
    pub dominates: Vec<bool>,
    /// Nodes attaining the largest decay factor.
    pub maximizers: Vec<usize>,
}

/// Bound values at requested iterations plus the inputs that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub protocol: String,
    pub measure: BoundMeasure,
    pub inputs: RateBounds,
    /// Per-step contraction factor of the curve: `1 - alpha/2m^2` for the
    /// adaptive binary oracle, `1 - alpha/2m` otherwise.
    pub rho: f64,
    pub iterations: Vec<u64>,
    /// `None` where the bound is undefined (eps-gap at `k = 0`).
    pub values: Vec<Option<f64>>,
}

impl RateBounds {
    pub fn new(p: &ConsensusProblem) -> Result<Self> {
        let g = p.graph();
        let spectral = g.spectral_summary()?;
        Ok(RateBounds {
            alpha: spectral.alpha,
            n: g.n(),
            m: g.m(),
            degrees: g.degrees().to_vec(),
            d_gap: p.initial_dual_gap(),
        })
    }

    /// `rho = 1 - alpha / (2m)`.
    pub fn rho(&self) -> f64 {
        1.0 - self.alpha / (2.0 * self.m as f64)
    }

    /// Per-step factor of the adaptive binary bound, `1 - alpha / (2 m^2)`.
    pub fn adaptive_rho(&self) -> f64 {
        let m = self.m as f64;
        1.0 - self.alpha / (2.0 * m * m)
    }

    /// Standard gossip: `rho^k (D(y*) - D(y^0))`.
    pub fn standard(&self, k: u64) -> f64 {
        pow(self.rho(), k) * self.d_gap
    }

    /// Adaptive binary oracle: `(1 - alpha/2m^2)^k ||c_bar 1 - c||^2`.
    pub fn adaptive_binary(&self, k: u64) -> f64 {
        pow(self.adaptive_rho(), k) * 2.0 * self.d_gap
    }

    fn noise_weights(&self, params: &NoiseParams) -> Result<(Vec<f64>, Vec<f64>)> {
        if params.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "noise parameters",
                expected: self.n,
                actual: params.len(),
            });
        }
        let weights = self
            .degrees
            .iter()
            .zip(params.sigma())
            .map(|(&d, s)| d as f64 * s * s)
            .collect();
        let factors = self
            .degrees
            .iter()
            .zip(params.phi())
            .map(|(&d, phi)| expected_phi_power(d, self.m, *phi, 1))
            .collect();
        Ok((weights, factors))
    }

    /// `psi^t`: the `d_i sigma_i^2` weighted mix of per-node decay powers.
    /// `None` when every `sigma_i` is zero.
    pub fn psi(&self, params: &NoiseParams, t: u64) -> Result<Option<f64>> {
        let (weights, factors) = self.noise_weights(params)?;
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            return Ok(None);
        }
        let mix: f64 = weights
            .iter()
            .zip(&factors)
            .map(|(w, q)| w * pow(*q, t))
            .sum();
        Ok(Some(mix / total))
    }

    /// Controlled noise insertion:
    /// `rho^k D_gap + (S / 4m) sum_{t=1..k} rho^{k-t} psi^t`, `S = sum d_i sigma_i^2`.
    ///
    /// Evaluated as the literal double sum.
    pub fn noise(&self, params: &NoiseParams, k: u64) -> Result<f64> {
        let (weights, factors) = self.noise_weights(params)?;
        let rho = self.rho();
        let four_m = 4.0 * self.m as f64;
        let mut tail = 0.0;
        for t in 1..=k {
            // S * psi^t = sum_i d_i sigma_i^2 q_i^t
            let s_psi: f64 = weights
                .iter()
                .zip(&factors)
                .map(|(w, q)| w * pow(*q, t))
                .sum();
            tail += pow(rho, k - t) * s_psi;
        }
        Ok(pow(rho, k) * self.d_gap + tail / four_m)
    }

    /// Noise bound at each of `iterations` (ascending), via
    /// `B_k = rho B_{k-1} + (1/4m) S psi^k`, `B_0 = D_gap`.
    pub fn noise_curve(&self, params: &NoiseParams, iterations: &[u64]) -> Result<Vec<f64>> {
        let (weights, factors) = self.noise_weights(params)?;
        check_ascending(iterations)?;
        let rho = self.rho();
        let four_m = 4.0 * self.m as f64;
        let mut powers = vec![1.0; self.n];
        let mut bound = self.d_gap;
        let mut out = Vec::with_capacity(iterations.len());
        let mut k = 0u64;
        for &target in iterations {
            while k < target {
                k += 1;
                let mut s_psi = 0.0;
                for ((pw, q), w) in powers.iter_mut().zip(&factors).zip(&weights) {
                    *pw *= q;
                    s_psi += w * *pw;
                }
                bound = rho * bound + s_psi / four_m;
            }
            out.push(bound);
        }
        Ok(out)
    }

    /// Simplified bound for `phi_i = sqrt(1 - gamma/d_i)`:
    /// `(1 - min(alpha/2m, gamma/m))^k (D_gap + S k / 4m)`.
    pub fn noise_gamma(&self, sigma: &[f64], gamma: f64, k: u64) -> Result<f64> {
        if sigma.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "sigma",
                expected: self.n,
                actual: sigma.len(),
            });
        }
        let m = self.m as f64;
        let s: f64 = self
            .degrees
            .iter()
            .zip(sigma)
            .map(|(&d, s)| d as f64 * s * s)
            .sum();
        let rate = (self.alpha / (2.0 * m)).min(gamma / m);
        Ok(pow(1.0 - rate, k) * (self.d_gap + s * k as f64 / (4.0 * m)))
    }

    pub fn noise_threshold_check(&self, params: &NoiseParams) -> Result<ThresholdReport> {
        let (_, factors) = self.noise_weights(params)?;
        let rho = self.rho();
        let max = factors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * max.abs().max(1.0);
        Ok(ThresholdReport {
            rho,
            dominates: factors.iter().map(|&q| rho <= q).collect(),
            maximizers: factors
                .iter()
                .enumerate()
                .filter(|(_, &q)| q >= max - tol)
                .map(|(i, _)| i)
                .collect(),
            decay_factors: factors,
        })
    }

    /// Bound curve matching `protocol` at the given ascending iterations.
    pub fn report(&self, protocol: &Protocol, iterations: &[u64]) -> Result<BoundReport> {
        check_ascending(iterations)?;
        let (measure, values) = match protocol {
            Protocol::Standard => (
                BoundMeasure::DualSubopt,
                iterations.iter().map(|&k| Some(self.standard(k))).collect(),
            ),
            Protocol::Binary(s) if s.is_adaptive() => (
                BoundMeasure::SqDist,
                iterations
                    .iter()
                    .map(|&k| Some(self.adaptive_binary(k)))
                    .collect(),
            ),
            Protocol::Binary(s) => (
                BoundMeasure::MinMeanEdgeGap,
                binary_bound_curve(self.d_gap, s, iterations)?
                    .into_iter()
                    .map(Some)
                    .collect(),
            ),
            Protocol::EpsGap { eps } => (
                BoundMeasure::MeanGapFraction,
                iterations
                    .iter()
                    .map(|&k| eps_gap_bound(self.d_gap, k, *eps).ok())
                    .collect(),
            ),
            Protocol::Noise(params) => (
                BoundMeasure::DualSubopt,
                self.noise_curve(params, iterations)?
                    .into_iter()
                    .map(Some)
                    .collect(),
            ),
        };
        Ok(BoundReport {
            protocol: protocol.name().to_string(),
            measure,
            inputs: self.clone(),
            rho: match protocol {
                Protocol::Binary(s) if s.is_adaptive() => self.adaptive_rho(),
                _ => self.rho(),
            },
            iterations: iterations.to_vec(),
            values,
        })
    }
}

/// Binary oracle bound `U^k = (D_gap + beta^k) / alpha^k` with
/// `alpha^k = sum_{t=0..k} lambda^t` and `beta^k = sum_{t=0..k} (lambda^t)^2`.
///
/// For [`StepsizeSchedule::FixedHorizonOptimal`] evaluated at its own horizon
/// this is `2 sqrt(R / (k+1))`.
pub fn binary_bound_uk(d_gap: f64, schedule: &StepsizeSchedule, k: u64) -> Result<f64> {
    Ok(binary_bound_curve(d_gap, schedule, &[k])?[0])
}

/// [`binary_bound_uk`] at each of the ascending `iterations`.
pub fn binary_bound_curve(
    d_gap: f64,
    schedule: &StepsizeSchedule,
    iterations: &[u64],
) -> Result<Vec<f64>> {
    schedule.validate()?;
    check_ascending(iterations)?;
    if schedule.is_adaptive() {
        return Err(Error::param(
            "schedule",
            "the adaptive rule has no predetermined U^k; use the adaptive bound",
        ));
    }
    let mut alpha_k = 0.0;
    let mut beta_k = 0.0;
    let mut next_t = 0u64;
    let mut out = Vec::with_capacity(iterations.len());
    for &k in iterations {
        while next_t <= k {
            let lambda = schedule.predetermined(next_t).expect("non-adaptive");
            alpha_k += lambda;
            beta_k += lambda * lambda;
            next_t += 1;
        }
        let value = match *schedule {
            StepsizeSchedule::FixedHorizonOptimal { r, horizon } if horizon == k => {
                2.0 * (r / (k + 1) as f64).sqrt()
            }
            _ => {
                if alpha_k.is_nan() || alpha_k <= 0.0 {
                    return Err(Error::param("schedule", "stepsize sum must be positive"));
                }
                (d_gap + beta_k) / alpha_k
            }
        };
        out.push(value);
    }
    Ok(out)
}

/// Upper estimate of `U^k` for `lambda^t = a / sqrt(t+1)`:
/// `(D_gap + a^2 (ln(k + 3/2) + ln 2)) / (2a (sqrt(k+2) - 1))`.
pub fn inverse_sqrt_bound(d_gap: f64, a: f64, k: u64) -> f64 {
    let k = k as f64;
    (d_gap + a * a * ((k + 1.5).ln() + 2f64.ln())) / (2.0 * a * ((k + 2.0).sqrt() - 1.0))
}

/// eps-gap oracle: `delta^k(eps) <= 4 D_gap / (k eps^2)`, for `k >= 1`.
pub fn eps_gap_bound(d_gap: f64, k: u64, eps: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", "the eps-gap bound needs k >= 1"));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    Ok(4.0 * d_gap / (k as f64 * eps * eps))
}

/// `E[phi^{2 t_i}] = (1 - (d_i/m)(1 - phi^2))^t` after `t` iterations.
pub fn expected_phi_power(degree: usize, m: usize, phi: f64, t: u64) -> f64 {
    pow(1.0 - (degree as f64 / m as f64) * (1.0 - phi * phi), t)
}

fn pow(base: f64, k: u64) -> f64 {
    match i32::try_from(k) {
        Ok(k) => base.powi(k),
        Err(_) => base.powf(k as f64),
    }
}

fn check_ascending(iterations: &[u64]) -> Result<()> {
    if iterations.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("iterations", "must be sorted ascending"));
    }
    Ok(())
}
