//! Down-neighborhood enumeration.
//!
//! A node of the view rooted at `x` is identified by the sorted list of root
//! indices it is missing. Nodes are stored level by level (level = number of
//! missing elements) and, inside a level, in colexicographic order of their
//! missing sets, so a node's position is a closed-form rank. The same rank is
//! used by [`crate::BlackBox`] to key its memo, which lets a view and a box
//! agree on node numbering without any hashing.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Default maximum number of nodes in a view and of distinct black-box queries.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `Σ_{j ≤ depth} C(n, j)`, saturating.
pub fn down_neighborhood_size(n: usize, depth: usize) -> u128 {
    (0..=depth.min(n)).fold(0u128, |acc, j| acc.saturating_add(binomial(n as u64, j as u64)))
}

/// Position of the subset missing `removed` (sorted, distinct) in the level-ordered
/// enumeration of the power set of an `n`-element root. `None` on overflow.
pub fn canonical_index(n: usize, removed: &[u32]) -> Option<u64> {
    let d = removed.len();
    let mut idx = if d == 0 { 0 } else { down_neighborhood_size(n, d - 1) };
    for (k, &r) in removed.iter().enumerate() {
        idx = idx.checked_add(binomial(r as u64, k as u64 + 1))?;
    }
    u64::try_from(idx).ok().filter(|&v| v < u64::MAX)
}

/// All subsets of a root with at most `depth` elements missing.
#[derive(Debug)]
pub struct LatticeView {
    n: usize,
    depth: usize,
    level_start: Vec<usize>,
    removed_start: Vec<usize>,
    removed: Vec<u32>,
    child_start: Vec<usize>,
    children: Vec<u32>,
    binom: Vec<Vec<u64>>,
}

type ViewCache = HashMap<(usize, usize), Arc<LatticeView>>;

impl LatticeView {
    /// Builds the view of depth `depth` over an `n`-element root.
    ///
    /// Depths past `n` are truncated to `n` (the full power set).
    pub fn build(n: usize, depth: usize, max_nodes: u64) -> Result<Self> {
        let depth = depth.min(n);
        let total = down_neighborhood_size(n, depth);
        if total > max_nodes as u128 {
            return Err(Error::BudgetExceeded { needed: total, limit: max_nodes });
        }
        let binom: Vec<Vec<u64>> = (0..=n)
            .map(|m| (0..=depth + 1).map(|k| binomial(m as u64, k as u64).min(u64::MAX as u128) as u64).collect())
            .collect();

        let mut level_start = Vec::with_capacity(depth + 2);
        let mut removed_start = Vec::with_capacity(depth + 2);
        let mut removed = Vec::new();
        let mut acc = 0usize;
        for d in 0..=depth {
            level_start.push(acc);
            removed_start.push(removed.len());
            let mut comb: Vec<u32> = (0..d as u32).collect();
            loop {
                removed.extend_from_slice(&comb);
                acc += 1;
                if !next_colex(&mut comb, n) {
                    break;
                }
            }
        }
        level_start.push(acc);
        removed_start.push(removed.len());

        let mut view = LatticeView {
            n,
            depth,
            level_start,
            removed_start,
            removed,
            child_start: Vec::with_capacity(acc + 1),
            children: Vec::new(),
            binom,
        };

        let mut child_start = Vec::with_capacity(acc + 1);
        let mut children = Vec::new();
        let mut mark = vec![false; n];
        for v in 0..acc {
            child_start.push(children.len());
            let level = view.level(v);
            if level == depth {
                continue;
            }
            let r = view.removed(v);
            for &i in r {
                mark[i as usize] = true;
            }
            for i in 0..n as u32 {
                if !mark[i as usize] {
                    children.push(view.rank_with(r, i) as u32);
                }
            }
            for &i in r {
                mark[i as usize] = false;
            }
        }
        child_start.push(children.len());
        view.child_start = child_start;
        view.children = children;
        Ok(view)
    }

    /// A process-wide shared view, built on first use.
    pub fn shared(n: usize, depth: usize, max_nodes: u64) -> Result<Arc<LatticeView>> {
        static CACHE: OnceLock<Mutex<ViewCache>> = OnceLock::new();
        let depth = depth.min(n);
        let total = down_neighborhood_size(n, depth);
        if total > max_nodes as u128 {
            return Err(Error::BudgetExceeded { needed: total, limit: max_nodes });
        }
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&(n, depth)) {
            return Ok(Arc::clone(v));
        }
        let view = Arc::new(LatticeView::build(n, depth, max_nodes)?);
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        let held: usize = guard.values().map(|v| v.len()).sum();
        if held + view.len() > 4 * 1_000_000 {
            guard.clear();
        }
        guard.insert((n, depth), Arc::clone(&view));
        Ok(view)
    }

    /// Root size.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        *self.level_start.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node range of level `d` (the subsets missing exactly `d` elements).
    pub fn level_nodes(&self, d: usize) -> std::ops::Range<usize> {
        if d > self.depth {
            return 0..0;
        }
        self.level_start[d]..self.level_start[d + 1]
    }

    /// Nodes of size at least `size`, i.e. levels `0..=n-size`.
    pub fn nodes_with_size_at_least(&self, size: i64) -> std::ops::Range<usize> {
        let max_level = (self.n as i64).saturating_sub(size);
        if max_level < 0 {
            return 0..0;
        }
        let d = (max_level as usize).min(self.depth);
        0..self.level_start[d + 1]
    }

    pub fn level(&self, v: usize) -> usize {
        self.level_start.partition_point(|&s| s <= v) - 1
    }

    pub fn size(&self, v: usize) -> usize {
        self.n - self.level(v)
    }

    /// Sorted root indices missing from node `v`.
    pub fn removed(&self, v: usize) -> &[u32] {
        let d = self.level(v);
        let off = self.removed_start[d] + (v - self.level_start[d]) * d;
        &self.removed[off..off + d]
    }

    /// Nodes covered by `v` (one more element removed), when they lie in the view.
    pub fn children(&self, v: usize) -> &[u32] {
        &self.children[self.child_start[v]..self.child_start[v + 1]]
    }

    /// Root indices present in node `v`, ascending.
    pub fn members(&self, v: usize) -> Vec<usize> {
        members_of(self.n, self.removed(v))
    }

    /// The node missing exactly `removed` (sorted), if it lies in the view.
    pub fn node_of(&self, removed: &[u32]) -> Option<usize> {
        if removed.len() > self.depth || removed.iter().any(|&r| r as usize >= self.n) {
            return None;
        }
        if removed.windows(2).any(|w| w[0] >= w[1]) {
            return None;
        }
        let base = self.level_start[removed.len()];
        let rank: u64 = removed.iter().enumerate().map(|(k, &r)| self.binom[r as usize][k + 1]).sum();
        Some(base + rank as usize)
    }

    /// Node of the subset `z` of `root`, if `z ⊆ root` and it lies in the view.
    pub fn node_of_dataset(&self, root: &Dataset, z: &Dataset) -> Option<usize> {
        self.node_of(&root.removed_indices(z)?)
    }

    pub fn dataset(&self, root: &Dataset, v: usize) -> Dataset {
        Dataset::new(self.members(v).into_iter().map(|i| root.get(i).clone()))
    }

    fn rank_with(&self, r: &[u32], i: u32) -> usize {
        let d = r.len();
        let base = self.level_start[d + 1];
        let mut rank = 0u64;
        let mut k = 0usize;
        let mut inserted = false;
        for &x in r {
            if !inserted && i < x {
                rank += self.binom[i as usize][k + 1];
                k += 1;
                inserted = true;
            }
            rank += self.binom[x as usize][k + 1];
            k += 1;
        }
        if !inserted {
            rank += self.binom[i as usize][k + 1];
        }
        base + rank as usize
    }
}

pub(crate) fn members_of(n: usize, removed: &[u32]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - removed.len());
    let mut it = removed.iter().peekable();
    for i in 0..n {
        if it.peek().map(|&&r| r as usize) == Some(i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

fn next_colex(comb: &mut [u32], n: usize) -> bool {
    let d = comb.len();
    for k in 0..d {
        let limit = if k + 1 < d { comb[k + 1] } else { n as u32 };
        if comb[k] + 1 < limit {
            comb[k] += 1;
            for (j, c) in comb.iter_mut().enumerate().take(k) {
                *c = j as u32;
            }
            return true;
        }
    }
    false
}

/// The λ-down neighborhood of `x`: every subset missing at most `depth` elements.
pub fn down_neighborhood(x: &Dataset, depth: usize) -> Result<Vec<Dataset>> {
    let view = LatticeView::shared(x.len(), depth, DEFAULT_BUDGET)?;
    Ok((0..view.len()).map(|v| view.dataset(x, v)).collect())
}
