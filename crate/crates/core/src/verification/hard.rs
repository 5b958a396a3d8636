use serde::Serialize;

use crate::blackbox::{Evaluator, SubsetRef};
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::noise::RandomStream;

/// Which function a hard instance evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HardKind {
    /// Two cones `F^{k,s}_{x,y}`: the cone at whichever center is closer.
    Planted,
    /// A single cone `f^k_x`, globally 1-Lipschitz.
    Null,
}

/// Cone functions on the `n`-dimensional hypercube; a set is a bit vector over coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardInstance {
    pub n: usize,
    pub x: Vec<bool>,
    pub y: Vec<bool>,
    pub k: u32,
    pub s: u32,
    pub kind: HardKind,
}

fn hamming(a: &[bool], b: &[bool]) -> u32 {
    a.iter().zip(b).filter(|(p, q)| p != q).count() as u32
}

/// `f^k_c(z) = max(k − Δ(c, z), 0)`.
pub fn cone(center: &[bool], height: u32, z: &[bool]) -> f64 {
    height.saturating_sub(hamming(center, z)) as f64
}

impl HardInstance {
    /// Samples `x` uniformly, `y` at Hamming distance `Γ`, and distinct heights
    /// `k, s` from `{2α, 4α, …, ρ}`.
    pub fn sample(n: usize, alpha: u32, rho: u32, gamma: usize, kind: HardKind, rng: &mut RandomStream) -> Result<Self> {
        if gamma.is_multiple_of(2) {
            return Err(invalid("Γ must be odd"));
        }
        if alpha == 0 || !rho.is_multiple_of(2 * alpha) {
            return Err(invalid("2α must divide ρ"));
        }
        if rho < 4 * alpha {
            return Err(invalid("need ρ ≥ 4α to draw two distinct heights"));
        }
        if gamma > n || gamma > rho as usize {
            return Err(invalid("Γ must not exceed min(ρ, n)"));
        }
        let heights: Vec<u32> = (1..=rho / (2 * alpha)).map(|i| 2 * alpha * i).collect();
        let i = rng.below(heights.len() as u64) as usize;
        let mut j = rng.below(heights.len() as u64 - 1) as usize;
        if j >= i {
            j += 1;
        }
        let x: Vec<bool> = (0..n).map(|_| rng.below(2) == 1).collect();
        let mut coords: Vec<usize> = (0..n).collect();
        for t in 0..gamma {
            let pick = t + rng.below((n - t) as u64) as usize;
            coords.swap(t, pick);
        }
        let mut y = x.clone();
        for &c in &coords[..gamma] {
            y[c] = !y[c];
        }
        Ok(HardInstance { n, x, y, k: heights[i], s: heights[j], kind })
    }

    pub fn value(&self, z: &[bool]) -> f64 {
        match self.kind {
            HardKind::Null => cone(&self.x, self.k, z),
            HardKind::Planted => {
                if hamming(&self.x, z) < hamming(&self.y, z) {
                    cone(&self.x, self.k, z)
                } else {
                    cone(&self.y, self.s, z)
                }
            }
        }
    }

    /// Bit vector of a dataset whose elements are coordinate labels.
    pub fn bits(&self, labels: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut z = vec![false; self.n];
        for c in labels {
            if c < self.n {
                z[c] = true;
            }
        }
        z
    }

    pub fn dataset_of(bits: &[bool]) -> Dataset {
        Dataset::from_labels(bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i.to_string()))
    }

    /// The dataset `x`.
    pub fn dataset(&self) -> Dataset {
        Self::dataset_of(&self.x)
    }

    /// `x` with coordinate `i` flipped: a neighboring dataset.
    pub fn neighbor(&self, i: usize) -> Dataset {
        let mut b = self.x.clone();
        b[i] = !b[i];
        Self::dataset_of(&b)
    }

    pub fn evaluator(&self) -> HardEvaluator {
        HardEvaluator { inst: self.clone() }
    }
}

/// Evaluates a hard instance on datasets whose elements are coordinate labels.
#[derive(Debug, Clone)]
pub struct HardEvaluator {
    inst: HardInstance,
}

impl Evaluator for HardEvaluator {
    fn evaluate(&mut self, z: &SubsetRef<'_>) -> Result<f64> {
        let coords = z.elements().filter_map(|e| e.label().parse::<usize>().ok());
        let bits = self.inst.bits(coords);
        Ok(self.inst.value(&bits))
    }
}
