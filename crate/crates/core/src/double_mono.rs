//! Double monotonization, offset functions, the median exponential mechanism,
//! and the double-monotonization privacy wrapper.

use crate::autosense::{monotonize_with, MonotonizedBox};
use crate::blackbox::BlackBox;
use crate::error::{invalid, Error, Result};
use crate::lattice::LatticeView;
use crate::noise::{exp_mech_interval, sample_laplace, PiecewiseScore, RandomStream};
use crate::output::{Profile, Release, WrapperOutput};
use crate::stability::{cond_monotonize_level, LevelVariant};

/// `g = M_ℓ` of the unfloored level-ℓ conditional monotonization, with default `−ℓ/2`,
/// tabulated over `DN_depth(x)` (deepened as needed to reach every subset of size ≥ ℓ).
pub fn double_monotonize(bb: &mut BlackBox, level: i64, depth: usize) -> Result<MonotonizedBox> {
    monotonize_with(bb, level, depth, -(level as f64) / 2.0, |v, size| {
        cond_monotonize_level(v, size, level, LevelVariant::Unfloored, f64::NEG_INFINITY)
    })
}

/// Offsets `g_0(x), …, g_τ(x)` where `g_j(x) = min_{z ∈ DN_j(x)} {g(z) − |z|} + |x| − j`.
pub(crate) fn offsets_from_table(view: &LatticeView, table: &[f64], tau: usize) -> Vec<f64> {
    let n = view.n() as f64;
    let mut running = f64::INFINITY;
    let mut out = Vec::with_capacity(tau + 1);
    for j in 0..=tau {
        if j <= view.depth() {
            let size = n - j as f64;
            for v in view.level_nodes(j) {
                running = running.min(table[v] - size);
            }
        }
        out.push(running + n - j as f64);
    }
    out
}

/// The j-th offset of a tabulated monotone function at its root.
pub fn offset(g: &MonotonizedBox, j: usize) -> Result<f64> {
    if j > g.view().depth() && j < g.view().n() {
        return Err(invalid(format!("offset depth {j} exceeds the tabulated neighborhood")));
    }
    Ok(offsets_from_table(g.view(), g.table(), j)[j])
}

/// `max(0, ⌈m/2⌉ − #{y_i ≤ a}, ⌈m/2⌉ − #{y_i ≥ a})`: how many entries of `y`
/// must change before `a` is a median.
pub fn median_score(a: f64, y: &[f64]) -> f64 {
    let half = y.len().div_ceil(2) as i64;
    let le = y.iter().filter(|&&v| v <= a).count() as i64;
    let ge = y.iter().filter(|&&v| v >= a).count() as i64;
    (half - le).max(half - ge).max(0) as f64
}

/// The median score on `[lo, hi]` as a piecewise-constant utility (negated score).
pub fn median_utility(y: &[f64], lo: f64, hi: f64) -> Result<PiecewiseScore> {
    if y.is_empty() {
        return Err(invalid("median mechanism needs at least one point"));
    }
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(invalid("median interval must have positive length"));
    }
    let mut cuts: Vec<f64> = y.iter().cloned().filter(|&v| v > lo && v < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut breakpoints = Vec::with_capacity(cuts.len() + 2);
    breakpoints.push(lo);
    breakpoints.extend(cuts);
    breakpoints.push(hi);
    let scores = breakpoints.windows(2).map(|w| -median_score(0.5 * (w[0] + w[1]), y)).collect();
    PiecewiseScore::new(breakpoints, scores)
}

/// Samples `a ∈ [lo, hi]` with density ∝ exp(−(ε₀/2)·score(a; y)).
pub fn median_exp_mech(y: &[f64], eps0: f64, lo: f64, hi: f64, rng: &mut RandomStream) -> Result<f64> {
    exp_mech_interval(&median_utility(y, lo, hi)?, eps0, 1.0, rng)
}

/// `τ = ⌈(16/ε)·ln(4r/β)⌉`.
pub fn double_mono_tau(r: f64, epsilon: f64, beta: f64) -> usize {
    (16.0 / epsilon * (4.0 * r / beta).ln()).ceil().max(0.0) as usize
}

/// The double-monotonization wrapper: ε-DP for every `f` with range `[0, r]`.
pub fn double_mono_wrap(bb: &mut BlackBox, r: f64, epsilon: f64, beta: f64, rng: &mut RandomStream) -> Result<WrapperOutput> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("ε must be positive"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid("β must lie in (0, 1)"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r must be positive"));
    }
    let bound = 16.0 / epsilon * (4.0 * r / beta).ln();
    if r < bound {
        return Err(Error::Precondition(format!("range bound r = {r} is below (16/ε)·ln(4r/β) = {bound:.4}")));
    }
    let tau = double_mono_tau(r, epsilon, beta);
    let n = bb.root().len();
    let before = bb.ledger();

    let w = n as f64 + sample_laplace(2.0 / epsilon, rng)?;
    let level = (w - tau as f64 - 2.0 / epsilon * (2.0 / beta).ln()).floor() as i64;

    let saved = bb.guard();
    bb.set_guard(Some((n as i64 - level.max(0)).max(tau.min(n) as i64) as usize));
    let g = monotonize_with(bb, level, tau, -(level as f64) / 2.0, |v, size| {
        cond_monotonize_level(v.clamp(0.0, r), size, level, LevelVariant::Unfloored, f64::NEG_INFINITY)
    });
    bb.set_guard(saved);
    let g = g?;

    let y = offsets_from_table(g.view(), g.table(), tau);
    let t = tau as f64;
    let a = median_exp_mech(&y, epsilon / 2.0, -1.5 * t, (r + 5.0 * t) / 2.0, rng)?;
    let result = 2.0 * a + t + level as f64 - w;
    Ok(WrapperOutput::new(Release::Value(result), bb, before, Profile::PaperFaithful).release("w", w))
}
