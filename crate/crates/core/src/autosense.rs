//! Level-ℓ monotonization and the AutoSense privacy wrapper.

use std::sync::Arc;

use crate::blackbox::BlackBox;
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::lattice::LatticeView;
use crate::noise::{sample_laplace, RandomStream};
use crate::output::{Profile, Release, WrapperOutput};
use crate::shifted_inverse::{
    finite_values, gipp_from_minima, level_minima, pure_depth, GippSolver, PureExpMech, ShiftedInverseParams,
    PURE_FALLBACK_WARNING,
};

/// AutoSense depth under the test profile.
pub const TEST_DEPTH: usize = 2;

/// `M^f_ℓ` tabulated over a down neighborhood of the box's root.
#[derive(Debug, Clone)]
pub struct MonotonizedBox {
    view: Arc<LatticeView>,
    root: Dataset,
    level: i64,
    table: Vec<f64>,
}

impl MonotonizedBox {
    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn view(&self) -> &LatticeView {
        &self.view
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Value at the root.
    pub fn root_value(&self) -> f64 {
        self.table[0]
    }

    /// Value at a subset of the root, if it lies in the tabulated neighborhood.
    pub fn value(&self, z: &Dataset) -> Option<f64> {
        self.view.node_of_dataset(&self.root, z).map(|v| self.table[v])
    }
}

/// Tabulates `M^f_ℓ(z) = max({f(z') : z' ⊆ z, |z'| ≥ ℓ} ∪ {sentinel})` over `DN_depth(x)`.
///
/// The base box is queried once per subset of size at least `ℓ`; nothing smaller is touched.
pub fn monotonize(bb: &mut BlackBox, level: i64, depth: usize) -> Result<MonotonizedBox> {
    let sentinel = bb.range().sentinel_low();
    monotonize_with(bb, level, depth, sentinel, |v, _| v)
}

pub(crate) fn monotonize_with<F>(
    bb: &mut BlackBox,
    level: i64,
    depth: usize,
    sentinel: f64,
    transform: F,
) -> Result<MonotonizedBox>
where
    F: Fn(f64, usize) -> f64,
{
    let n = bb.root().len();
    let needed = (n as i64 - level.max(0)).max(0) as usize;
    let view = LatticeView::shared(n, depth.max(needed), bb.budget())?;
    let mut base = bb.table(&view, level)?;
    for v in view.nodes_with_size_at_least(level) {
        base[v] = transform(base[v], view.size(v));
    }
    let table = monotone_table(&view, &base, level, sentinel);
    Ok(MonotonizedBox { view, root: bb.root().clone(), level, table })
}

/// Bottom-up: value(z) = max(f(z) if |z| ≥ ℓ, values of z's children, sentinel).
pub(crate) fn monotone_table(view: &LatticeView, base: &[f64], level: i64, sentinel: f64) -> Vec<f64> {
    let mut table = vec![sentinel; view.len()];
    for d in (0..=view.depth()).rev() {
        let size = (view.n() - d) as i64;
        for v in view.level_nodes(d) {
            let mut m = if size >= level { base[v].max(sentinel) } else { sentinel };
            for &c in view.children(v) {
                m = m.max(table[c as usize]);
            }
            table[v] = m;
        }
    }
    table
}

/// `λ = max(2·λ_ShI(ε/2, β/2, k), ⌈(8/ε)·ln(2/β)⌉)`, rounded up to even.
pub fn autosense_depth(epsilon: f64, beta: f64, k: usize, profile: Profile) -> usize {
    if profile == Profile::TestConstants {
        return TEST_DEPTH;
    }
    let shi = 2 * pure_depth(epsilon / 2.0, k, beta / 2.0);
    let tail = (8.0 / epsilon * (2.0 / beta).ln()).ceil().max(0.0) as usize;
    let lambda = shi.max(tail);
    lambda + lambda % 2
}

/// The AutoSense wrapper: ε-DP for every `f` with a finite-list range.
pub fn autosense_wrap(
    bb: &mut BlackBox,
    params: ShiftedInverseParams,
    profile: Profile,
    rng: &mut RandomStream,
) -> Result<WrapperOutput> {
    params.validate()?;
    let ys = finite_values(bb)?.to_vec();
    if ys.is_empty() {
        return Err(invalid("empty range"));
    }
    let n = bb.root().len();
    let lambda = autosense_depth(params.epsilon, params.beta, ys.len(), profile);
    let half = lambda / 2;

    let z = sample_laplace(2.0 / params.epsilon, rng)?;
    let level = (n as f64 - 0.75 * lambda as f64 + z).floor() as i64;

    let before = bb.ledger();
    let saved_guard = bb.guard();
    bb.set_guard(Some((n as i64 - level.max(0)).max(0) as usize));
    let mono = monotonize(bb, level, half);
    bb.set_guard(saved_guard);
    let mono = mono?;

    let solver = PureExpMech { epsilon: params.epsilon / 2.0 };
    let minima = level_minima(mono.view(), half, ys[0], |v| Ok(mono.table()[v]))?;
    let inst = gipp_from_minima(&minima, &ys, half)?;
    let j = solver.solve(&inst, rng)?;

    let mut out = WrapperOutput::new(Release::Value(ys[j - 1]), bb, before, profile).release("ell", level as f64);
    if params.delta > 0.0 {
        out = out.diagnose(PURE_FALLBACK_WARNING);
    }
    Ok(out)
}
