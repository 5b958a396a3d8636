//! Inverse loss, the generalized interior point formulation, and the
//! Shifted Inverse mechanism for functions promised to be monotone.

use crate::blackbox::BlackBox;
use crate::error::{invalid, Error, Result};
use crate::lattice::LatticeView;
use crate::noise::{exp_mech_finite, RandomStream};
use crate::output::{Profile, Release, WrapperOutput};

/// Diagnostic attached when δ > 0 is requested but only a pure solver is available.
pub const PURE_FALLBACK_WARNING: &str =
    "δ > 0 requested but no approximate-DP interior point solver is installed; fell back to the pure ε-DP exponential mechanism";

/// Scores `g(x, 1..=k)` of a generalized interior point problem.
#[derive(Debug, Clone, PartialEq)]
pub struct GippInstance {
    g: Vec<f64>,
    delta: f64,
}

impl GippInstance {
    pub fn new(g: Vec<f64>, delta: f64) -> Result<Self> {
        if g.is_empty() {
            return Err(invalid("interior point instance needs k ≥ 1"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid(format!("sensitivity must lie in (0, 1], got {delta}")));
        }
        if g.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("interior point scores must lie in [0, 1]"));
        }
        Ok(GippInstance { g, delta })
    }

    pub fn k(&self) -> usize {
        self.g.len()
    }

    pub fn sensitivity(&self) -> f64 {
        self.delta
    }

    pub fn g_values(&self) -> &[f64] {
        &self.g
    }

    /// `g(x, j)` with the conventions `g(x, 0) = 0` and `g(x, k+1) = 1`.
    pub fn g(&self, j: usize) -> f64 {
        match j {
            0 => 0.0,
            j if j > self.g.len() => 1.0,
            j => self.g[j - 1],
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.g.windows(2).all(|w| w[0] <= w[1])
    }

    /// `min{g(x,j), 1 − g(x,j−1)}` for `j = 1..=k`.
    pub fn scores(&self) -> Vec<f64> {
        (1..=self.k()).map(|j| self.g(j).min(1.0 - self.g(j - 1))).collect()
    }

    /// Whether `j` (1-based) solves the instance: `g(x,j) > 0` and `g(x,j−1) < 1`.
    pub fn is_solution(&self, j: usize) -> bool {
        j >= 1 && j <= self.k() && self.g(j) > 0.0 && self.g(j - 1) < 1.0
    }
}

/// A private solver for generalized interior point instances.
pub trait GippSolver {
    /// Returns a 1-based index into the instance's candidate list.
    fn solve(&self, inst: &GippInstance, rng: &mut RandomStream) -> Result<usize>;

    /// Depth `λ` the solver needs for failure probability `beta` over `k` candidates.
    fn depth(&self, k: usize, beta: f64) -> usize;

    /// Approximate-DP δ this solver consumes (0 for pure solvers).
    fn delta(&self) -> f64;
}

/// The exponential mechanism over `min{g(x,j), 1−g(x,j−1)}`; ε-DP.
#[derive(Debug, Clone, Copy)]
pub struct PureExpMech {
    pub epsilon: f64,
}

impl GippSolver for PureExpMech {
    fn solve(&self, inst: &GippInstance, rng: &mut RandomStream) -> Result<usize> {
        Ok(exp_mech_finite(&inst.scores(), self.epsilon, inst.sensitivity(), rng)? + 1)
    }

    fn depth(&self, k: usize, beta: f64) -> usize {
        pure_depth(self.epsilon, k, beta)
    }

    fn delta(&self) -> f64 {
        0.0
    }
}

/// `λ = ⌈(4/ε)·ln(k/β)⌉ + 1`.
pub fn pure_depth(epsilon: f64, k: usize, beta: f64) -> usize {
    let v = (4.0 / epsilon * (k as f64 / beta).ln()).ceil();
    v.max(0.0) as usize + 1
}

/// `min{|x \ s| : s ⊆ x, f(s) ≤ y}`, or `cap` when no such `s` misses fewer than `cap` elements.
pub fn inverse_loss(bb: &mut BlackBox, y: f64, cap: usize) -> Result<usize> {
    if cap == 0 {
        return Err(invalid("cap must be at least 1"));
    }
    let view = LatticeView::shared(bb.root().len(), cap - 1, bb.budget())?;
    for d in 0..=view.depth() {
        for v in view.level_nodes(d) {
            if bb.query_node(&view, v)? <= y {
                return Ok(d);
            }
        }
    }
    Ok(cap)
}

/// Minimum of `f` on each level `0..=depth` of the view, stopping early once a
/// level minimum is at most `stop_at`.
pub(crate) fn level_minima<F>(view: &LatticeView, depth: usize, stop_at: f64, mut value: F) -> Result<Vec<f64>>
where
    F: FnMut(usize) -> Result<f64>,
{
    let mut out = Vec::new();
    for d in 0..=depth.min(view.depth()) {
        let mut m = f64::INFINITY;
        for v in view.level_nodes(d) {
            m = m.min(value(v)?);
        }
        out.push(m);
        if m <= stop_at {
            break;
        }
    }
    Ok(out)
}

/// `g(x, j) = max(0, 1 − ℓ(x, y_j)/(λ+1))` from per-level minima of `f` over `DN_λ(x)`.
pub(crate) fn gipp_from_minima(minima: &[f64], ys: &[f64], depth: usize) -> Result<GippInstance> {
    let cap = depth + 1;
    let g = ys
        .iter()
        .map(|&y| {
            let loss = minima.iter().position(|&m| m <= y).unwrap_or(cap).min(cap);
            (1.0 - loss as f64 / cap as f64).max(0.0)
        })
        .collect();
    GippInstance::new(g, 1.0 / cap as f64)
}

/// Builds the interior point instance for `f` at the box's root with depth `λ`.
pub fn build_gipp(bb: &mut BlackBox, ys: &[f64], depth: usize) -> Result<GippInstance> {
    if ys.is_empty() || ys.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("candidate list must be nonempty and strictly increasing"));
    }
    let view = LatticeView::shared(bb.root().len(), depth, bb.budget())?;
    let minima = level_minima(&view, depth, ys[0], |v| bb.query_node(&view, v))?;
    gipp_from_minima(&minima, ys, depth)
}

/// Parameters of one Shifted Inverse run.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedInverseParams {
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
}

impl ShiftedInverseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("ε must be positive"));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(invalid("δ must lie in [0, 1)"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid("β must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Shifted Inverse on a box whose range is a finite list.
///
/// Private only when `f` is monotone. Queries stay inside `DN_λ(x)`.
pub fn shifted_inverse(bb: &mut BlackBox, params: ShiftedInverseParams, rng: &mut RandomStream) -> Result<WrapperOutput> {
    params.validate()?;
    let solver = PureExpMech { epsilon: params.epsilon };
    let k = finite_values(bb)?.len();
    let depth = solver.depth(k, params.beta);
    let mut out = shifted_inverse_with(bb, &solver, depth, rng)?;
    if params.delta > 0.0 {
        out = out.diagnose(PURE_FALLBACK_WARNING);
    }
    Ok(out)
}

/// Shifted Inverse with an explicit solver and depth.
pub fn shifted_inverse_with(
    bb: &mut BlackBox,
    solver: &dyn GippSolver,
    depth: usize,
    rng: &mut RandomStream,
) -> Result<WrapperOutput> {
    let ys = finite_values(bb)?.to_vec();
    let before = bb.ledger();
    let inst = build_gipp(bb, &ys, depth)?;
    let j = solver.solve(&inst, rng)?;
    Ok(WrapperOutput::new(Release::Value(ys[j - 1]), bb, before, Profile::PaperFaithful))
}

pub(crate) fn finite_values(bb: &BlackBox) -> Result<&[f64]> {
    bb.range()
        .values()
        .ok_or_else(|| Error::Precondition("this mechanism needs a finite-list range".into()))
}
