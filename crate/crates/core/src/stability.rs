//! ℓ-stability, (ℓ,h)-stabilization, conditional monotonizations and the
//! proxies T and P used by the claimed-sensitivity wrappers.
//!
//! Everything here works on unit-Lipschitz scale: callers divide `f` by the
//! claimed constant `c` before building a context.

use std::sync::Arc;

use serde::Serialize;

use crate::blackbox::BlackBox;
use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::lattice::LatticeView;

/// Slack for comparing rescaled differences against 1.
pub const LIPSCHITZ_TOL: f64 = 1e-9;

/// Per-node stability flags for a function tabulated on a view.
///
/// `stable[v]` holds iff `|v| ≥ ℓ` and no covering edge `(z, z ∪ {i})` with
/// `z ∪ {i} ⊆ v` and `|z| ≥ ℓ` changes the value by more than 1. The view must
/// contain every subset of the root of size at least `max(ℓ, 0)`.
pub(crate) fn stable_flags(view: &LatticeView, values: &[f64], level: i64) -> Vec<bool> {
    let floor = level.max(0);
    let mut stable = vec![false; view.len()];
    for d in (0..=view.depth()).rev() {
        let size = (view.n() - d) as i64;
        if size < floor {
            continue;
        }
        for v in view.level_nodes(d) {
            stable[v] = size == floor
                || view.children(v).iter().all(|&c| {
                    let c = c as usize;
                    stable[c] && (values[v] - values[c]).abs() <= 1.0 + LIPSCHITZ_TOL
                });
        }
    }
    stable
}

/// Number of violating covering edges with lower endpoint of size at least `ℓ`.
pub(crate) fn violating_edge_count(view: &LatticeView, values: &[f64], level: i64) -> usize {
    let floor = level.max(0);
    let mut count = 0;
    for d in 0..=view.depth() {
        if ((view.n() - d) as i64) <= floor {
            break;
        }
        for v in view.level_nodes(d) {
            count += view
                .children(v)
                .iter()
                .filter(|&&c| (values[v] - values[c as usize]).abs() > 1.0 + LIPSCHITZ_TOL)
                .count();
        }
    }
    count
}

/// For each size `s`, the largest value among stable nodes of that size (−∞ if none).
pub(crate) fn best_by_size(view: &LatticeView, values: &[f64], stable: &[bool]) -> Vec<f64> {
    let mut best = vec![f64::NEG_INFINITY; view.n() + 1];
    for d in 0..=view.depth() {
        let s = view.n() - d;
        for v in view.level_nodes(d) {
            if stable[v] {
                best[s] = best[s].max(values[v]);
            }
        }
    }
    best
}

/// `max` of `best[s]` over sizes `s ≥ max(h, ℓ, 0)`, or `sentinel` if there are none.
pub(crate) fn stabilized(best: &[f64], level: i64, h: i64, sentinel: f64) -> f64 {
    let from = h.max(level).max(0);
    if from as usize >= best.len() {
        return sentinel;
    }
    let m = best[from as usize..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        sentinel
    } else {
        m.max(sentinel)
    }
}

/// Largest size of a stable node, if any.
pub(crate) fn largest_stable(view: &LatticeView, stable: &[bool]) -> Option<usize> {
    (0..=view.depth()).find(|&d| view.level_nodes(d).any(|v| stable[v])).map(|d| view.n() - d)
}

/// Among stable nodes of the largest stable size, the one whose member list is
/// lexicographically least.
pub(crate) fn lex_least_largest_stable(view: &LatticeView, stable: &[bool]) -> Option<usize> {
    let size = largest_stable(view, stable)?;
    view.level_nodes(view.n() - size)
        .filter(|&v| stable[v])
        .min_by(|&a, &b| view.members(a).cmp(&view.members(b)))
}

/// Stability of a box's values at level `ℓ`, rescaled by the claimed constant `c`.
#[derive(Debug, Clone)]
pub struct StabilityContext {
    view: Arc<LatticeView>,
    root: Dataset,
    level: i64,
    c: f64,
    values: Vec<f64>,
    stable: Vec<bool>,
    sentinel: f64,
}

/// A proxy or stabilization value, with the maximizing set when there is one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxyValue {
    pub value: f64,
    pub witness: Option<Dataset>,
}

impl StabilityContext {
    /// Queries every subset of the root of size at least `max(ℓ, 0)` and
    /// precomputes stability of `f/c`.
    pub fn new(bb: &mut BlackBox, c: f64, level: i64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("claimed Lipschitz constant must be positive"));
        }
        let n = bb.root().len();
        let depth = (n as i64 - level.max(0)).max(0) as usize;
        let view = LatticeView::shared(n, depth, bb.budget())?;
        let mut values = bb.table(&view, level)?;
        for v in values.iter_mut() {
            *v /= c;
        }
        let stable = if level > n as i64 { vec![false; view.len()] } else { stable_flags(&view, &values, level) };
        Ok(StabilityContext {
            view,
            root: bb.root().clone(),
            level,
            c,
            values,
            stable,
            sentinel: bb.range().sentinel_low() / c,
        })
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Whether `u ⊆ root` is ℓ-stable.
    pub fn is_stable(&self, u: &Dataset) -> Result<bool> {
        if (u.len() as i64) < self.level {
            return Ok(false);
        }
        let v = self
            .view
            .node_of_dataset(&self.root, u)
            .ok_or_else(|| invalid("set lies outside the precomputed neighborhood"))?;
        Ok(self.stable[v])
    }

    pub fn violating_edges(&self) -> usize {
        violating_edge_count(&self.view, &self.values, self.level)
    }

    /// `S_{ℓ,h}(x)` on the `f/c` scale: max over ℓ-stable subsets of size ≥ h, or the sentinel.
    pub fn stabilize(&self, h: i64) -> ProxyValue {
        let from = h.max(self.level).max(0);
        let mut best: Option<(f64, usize)> = None;
        for d in 0..=self.view.depth() {
            if ((self.view.n() - d) as i64) < from {
                break;
            }
            for v in self.view.level_nodes(d) {
                if self.stable[v] && best.is_none_or(|(b, _)| self.values[v] > b) {
                    best = Some((self.values[v], v));
                }
            }
        }
        match best {
            Some((value, v)) => ProxyValue { value: value.max(self.sentinel), witness: Some(self.view.dataset(&self.root, v)) },
            None => ProxyValue { value: self.sentinel, witness: None },
        }
    }

    /// `m_ℓ(x)`: size of the largest ℓ-stable subset of the root.
    pub fn max_stable_size(&self) -> Result<usize> {
        if self.level > self.view.n() as i64 {
            return Err(Error::Precondition(format!(
                "root has {} elements, fewer than the stability floor {}",
                self.view.n(),
                self.level
            )));
        }
        Ok(largest_stable(&self.view, &self.stable).unwrap_or(0))
    }
}

/// `ĉ(z) = ½(f(z) + |z|)`.
pub fn cond_monotonize(value: f64, size: usize) -> f64 {
    0.5 * (value + size as f64)
}

/// Variant of the level-ℓ conditional monotonization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelVariant {
    /// `max(½(f + |z| − ℓ), inf 𝒴)`.
    Floored,
    /// `½(f + |z| − ℓ)`.
    Unfloored,
}

/// Level-ℓ conditional monotonization of one value. With an unbounded range the
/// floor is −∞ and both variants agree.
pub fn cond_monotonize_level(value: f64, size: usize, level: i64, variant: LevelVariant, floor: f64) -> f64 {
    let raw = 0.5 * (value + size as f64 - level as f64);
    match variant {
        LevelVariant::Floored => raw.max(floor),
        LevelVariant::Unfloored => raw,
    }
}

/// `T_{ℓ,τ}` and `m_ℓ` from `f/c` tabulated on a view covering all sizes ≥ `max(ℓ, 0)`.
///
/// Stability for `m_ℓ` is taken with respect to `f/c`; each `Ŝ_{ℓ,h}` is the
/// stabilization of `ĉ` (stable sets with respect to `ĉ`).
pub(crate) fn proxy_t_table(view: &LatticeView, fvals: &[f64], level: i64, tau: usize) -> Result<(f64, usize)> {
    let n = view.n();
    if level > n as i64 {
        return Err(Error::Precondition(format!("root has {n} elements, fewer than the stability floor {level}")));
    }
    let f_stable = stable_flags(view, fvals, level);
    let m = largest_stable(view, &f_stable).unwrap_or(0);

    let mut chat = vec![f64::NAN; view.len()];
    for v in view.nodes_with_size_at_least(level) {
        chat[v] = cond_monotonize(fvals[v], view.size(v));
    }
    let c_stable = stable_flags(view, &chat, level);
    let best = best_by_size(view, &chat, &c_stable);
    let mut total = 0.0;
    for h in (m as i64 - tau as i64)..=(m as i64) {
        let s = stabilized(&best, level, h, f64::NEG_INFINITY);
        if s == f64::NEG_INFINITY {
            return Err(Error::Precondition("stabilization is empty below the largest stable size".into()));
        }
        total += s;
    }
    Ok((total / (tau as f64 + 1.0), m))
}

/// `T_{ℓ,τ}(x)` for `f/c` at the box's root.
pub fn proxy_t(bb: &mut BlackBox, c: f64, level: i64, tau: usize) -> Result<ProxyValue> {
    if tau == 0 {
        return Err(invalid("τ must be at least 1"));
    }
    let n = bb.root().len();
    let depth = (n as i64 - level.max(0)).max(0) as usize;
    let view = LatticeView::shared(n, depth, bb.budget())?;
    let mut fvals = bb.table(&view, level)?;
    for v in fvals.iter_mut() {
        *v /= c;
    }
    let (t, _) = proxy_t_table(&view, &fvals, level, tau)?;
    Ok(ProxyValue { value: t, witness: None })
}

/// `P_τ(x)` from `f/c` (clamped to `[0, r/c]`) tabulated on `DN_{2τ}(x)`.
///
/// Averages, over `ℓ ∈ {|x|−2τ, …, |x|−τ}` and `h ∈ {|x|−τ, …, |x|}`, the
/// stabilization of the floored level-ℓ conditional monotonization.
pub(crate) fn proxy_p_table(view: &LatticeView, fvals: &[f64], tau: usize) -> f64 {
    let n = view.n() as i64;
    let tau_i = tau as i64;
    let mut chat = vec![0.0; view.len()];
    let mut total = 0.0;
    for level in (n - 2 * tau_i)..=(n - tau_i) {
        for v in view.nodes_with_size_at_least(level) {
            chat[v] = cond_monotonize_level(fvals[v], view.size(v), level, LevelVariant::Floored, 0.0);
        }
        let stable = stable_flags(view, &chat, level);
        let best = best_by_size(view, &chat, &stable);
        for h in (n - tau_i)..=n {
            total += stabilized(&best, level, h, 0.0);
        }
    }
    total / ((tau as f64 + 1.0) * (tau as f64 + 1.0))
}

/// `P_τ(x)` for `f/c` with range `[0, r/c]` at the box's root.
pub fn proxy_p(bb: &mut BlackBox, c: f64, r: f64, tau: usize) -> Result<ProxyValue> {
    if tau == 0 {
        return Err(invalid("τ must be at least 1"));
    }
    let view = LatticeView::shared(bb.root().len(), 2 * tau, bb.budget())?;
    let fvals = rescaled_table(bb, &view, c, r)?;
    Ok(ProxyValue { value: proxy_p_table(&view, &fvals, tau), witness: None })
}

/// `f/c` clamped into `[0, r/c]` on every node of the view.
pub(crate) fn rescaled_table(bb: &mut BlackBox, view: &LatticeView, c: f64, r: f64) -> Result<Vec<f64>> {
    let mut fvals = bb.table(view, i64::MIN)?;
    for v in fvals.iter_mut() {
        *v = (*v / c).clamp(0.0, r / c);
    }
    Ok(fvals)
}
