//! Seeded samplers: Laplace, truncated Laplace, and exponential mechanisms.
//!
//! All samplers use inverse-CDF transforms of uniforms drawn from a
//! ChaCha20 stream, so a seed fixes every draw. Logarithms are natural.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A seeded, counter-based stream of uniforms.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    draws: u64,
    rng: ChaCha20Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// An independent stream for the same seed, e.g. one per trial.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RandomStream { seed, draws: 0, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of uniforms consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.draws += 1;
        self.rng.gen::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn open_uniform(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.rng.gen::<u64>()
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.draws += 1;
        self.rng.gen_range(0..bound)
    }
}

/// One draw from `Lap(b)`.
pub fn sample_laplace(b: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("Laplace scale must be positive, got {b}")));
    }
    let v = rng.open_uniform() - 0.5;
    if v == 0.0 {
        return Ok(0.0);
    }
    Ok(-b * v.signum() * (-2.0 * v.abs()).ln_1p())
}

/// One draw from `TLap(b, τ)`: density ∝ e^{-|x|/b} on `[-τ, τ]`.
pub fn sample_truncated_laplace(b: f64, tau: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(b > 0.0 && b.is_finite() && tau > 0.0 && tau.is_finite()) {
        return Err(invalid(format!("truncated Laplace needs b > 0 and τ > 0, got b={b}, τ={tau}")));
    }
    let u = rng.uniform();
    let mass = -(-tau / b).exp_m1();
    let (sign, p) = if u >= 0.5 { (1.0, 2.0 * u - 1.0) } else { (-1.0, 1.0 - 2.0 * u) };
    let magnitude = (-b * (-p * mass).ln_1p()).min(tau);
    Ok(sign * magnitude)
}

/// Samples index `j` with probability ∝ exp(ε·score_j / (2Δ)).
pub fn exp_mech_finite(scores: &[f64], epsilon: f64, delta_sens: f64, rng: &mut RandomStream) -> Result<usize> {
    check_privacy(epsilon, delta_sens)?;
    if scores.is_empty() {
        return Err(invalid("exponential mechanism needs at least one score"));
    }
    let logits: Vec<f64> = scores.iter().map(|&s| epsilon * s / (2.0 * delta_sens)).collect();
    let j = sample_log_weights(&logits, rng)?;
    Ok(j)
}

/// A piecewise-constant score on a closed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseScore {
    breakpoints: Vec<f64>,
    scores: Vec<f64>,
}

impl PiecewiseScore {
    /// Piece `i` is `[breakpoints[i], breakpoints[i+1]]` with score `scores[i]`.
    pub fn new(breakpoints: Vec<f64>, scores: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || scores.len() + 1 != breakpoints.len() {
            return Err(invalid("need k+1 breakpoints for k pieces, k ≥ 1"));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("breakpoints must be finite and sorted"));
        }
        if breakpoints[0] == breakpoints[breakpoints.len() - 1] {
            return Err(invalid("zero-length interval"));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(invalid("scores must not be NaN"));
        }
        Ok(PiecewiseScore { breakpoints, scores })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn lo(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn hi(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1]
    }

    /// Score of the piece containing `a` (left-closed pieces, last piece closed).
    pub fn score_at(&self, a: f64) -> Option<f64> {
        if a < self.lo() || a > self.hi() {
            return None;
        }
        let i = self.breakpoints.partition_point(|&b| b <= a).saturating_sub(1);
        Some(self.scores[i.min(self.scores.len() - 1)])
    }

    /// Normalized probability mass of each piece under exp(ε·s/(2Δ)).
    pub fn piece_masses(&self, epsilon: f64, delta_sens: f64) -> Vec<f64> {
        let logits = self.piece_logits(epsilon, delta_sens);
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    fn piece_logits(&self, epsilon: f64, delta_sens: f64) -> Vec<f64> {
        self.scores
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(&s, w)| {
                let len = w[1] - w[0];
                if len > 0.0 {
                    len.ln() + epsilon * s / (2.0 * delta_sens)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }
}

/// Samples `a` from the interval with density ∝ exp(ε·score(a) / (2Δ)).
pub fn exp_mech_interval(score: &PiecewiseScore, epsilon: f64, delta_sens: f64, rng: &mut RandomStream) -> Result<f64> {
    check_privacy(epsilon, delta_sens)?;
    let logits = score.piece_logits(epsilon, delta_sens);
    let i = sample_log_weights(&logits, rng)?;
    let (lo, hi) = (score.breakpoints[i], score.breakpoints[i + 1]);
    Ok((lo + rng.uniform() * (hi - lo)).min(hi))
}

fn sample_log_weights(logits: &[f64], rng: &mut RandomStream) -> Result<usize> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        return Err(invalid("every outcome has zero weight"));
    }
    let weights: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let total: f64 = weights.iter().sum();
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = j;
            acc += w;
            if target < acc {
                return Ok(j);
            }
        }
    }
    Ok(last)
}

fn check_privacy(epsilon: f64, delta_sens: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("ε must be positive, got {epsilon}")));
    }
    if !(delta_sens > 0.0 && delta_sens.is_finite()) {
        return Err(invalid(format!("sensitivity must be positive, got {delta_sens}")));
    }
    Ok(())
}
