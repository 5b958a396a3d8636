//! Instrumented query access to an untrusted function.

use std::collections::HashMap;

use crate::dataset::{Dataset, Element};
use crate::error::{Error, Result};
use crate::lattice::{canonical_index, members_of, LatticeView, DEFAULT_BUDGET};
use crate::range::RangeSpec;

const DENSE_LIMIT: u64 = 1 << 22;

/// A subset of the root handed to an evaluator.
#[derive(Debug, Clone, Copy)]
pub struct SubsetRef<'a> {
    root: &'a Dataset,
    root_values: &'a [f64],
    removed: &'a [u32],
}

impl<'a> SubsetRef<'a> {
    pub fn len(&self) -> usize {
        self.root.len() - self.removed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Root indices of the members, ascending.
    pub fn indices(&self) -> Vec<usize> {
        members_of(self.root.len(), self.removed)
    }

    pub fn elements(&self) -> impl Iterator<Item = &'a Element> + '_ {
        let root = self.root;
        self.indices().into_iter().map(move |i| root.get(i))
    }

    /// Numeric values of the members; elements whose label is not a number are skipped.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        let vals = self.root_values;
        self.indices().into_iter().map(move |i| vals[i]).filter(|v| !v.is_nan())
    }

    pub fn to_dataset(&self) -> Dataset {
        Dataset::new(self.elements().cloned())
    }
}

/// A procedure from subsets to reals.
pub trait Evaluator {
    fn evaluate(&mut self, z: &SubsetRef<'_>) -> Result<f64>;
}

impl<F> Evaluator for F
where
    F: FnMut(&SubsetRef<'_>) -> f64,
{
    fn evaluate(&mut self, z: &SubsetRef<'_>) -> Result<f64> {
        Ok(self(z))
    }
}

/// Query access to `f` on subsets of a fixed root dataset.
///
/// Values are clamped into the declared range and memoized; the ledger counts
/// distinct evaluated subsets. An optional guard bounds how many root elements a
/// queried subset may miss.
pub struct BlackBox {
    root: Dataset,
    root_values: Vec<f64>,
    evaluator: Box<dyn Evaluator>,
    range: RangeSpec,
    dense: Vec<f64>,
    sparse: HashMap<Vec<u32>, f64>,
    ledger: u64,
    budget: u64,
    guard: Option<usize>,
    realized_depth: Option<usize>,
}

impl std::fmt::Debug for BlackBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlackBox")
            .field("root_size", &self.root.len())
            .field("range", &self.range)
            .field("ledger", &self.ledger)
            .field("guard", &self.guard)
            .finish()
    }
}

impl BlackBox {
    pub fn new(root: Dataset, range: RangeSpec, evaluator: impl Evaluator + 'static) -> Self {
        Self::boxed(root, range, Box::new(evaluator))
    }

    pub fn boxed(root: Dataset, range: RangeSpec, evaluator: Box<dyn Evaluator>) -> Self {
        let root_values = root.elements().iter().map(|e| e.value().unwrap_or(f64::NAN)).collect();
        BlackBox {
            root,
            root_values,
            evaluator,
            range,
            dense: Vec::new(),
            sparse: HashMap::new(),
            ledger: 0,
            budget: DEFAULT_BUDGET,
            guard: None,
            realized_depth: None,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn root(&self) -> &Dataset {
        &self.root
    }

    pub fn range(&self) -> &RangeSpec {
        &self.range
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Number of distinct subsets evaluated so far.
    pub fn ledger(&self) -> u64 {
        self.ledger
    }

    /// Largest number of root elements missing from any queried subset.
    pub fn realized_depth(&self) -> Option<usize> {
        self.realized_depth
    }

    pub fn guard(&self) -> Option<usize> {
        self.guard
    }

    pub fn set_guard(&mut self, depth: Option<usize>) {
        self.guard = depth;
    }

    /// `f(z)` clamped into range, for `z ⊆ root`.
    pub fn query(&mut self, z: &Dataset) -> Result<f64> {
        let removed = self.root.removed_indices(z).ok_or_else(|| {
            Error::LocalityViolation("queried set is not a subset of the root".into())
        })?;
        self.query_removed(&removed)
    }

    /// `f` on the root minus the (sorted, distinct) indices in `removed`.
    pub fn query_removed(&mut self, removed: &[u32]) -> Result<f64> {
        let n = self.root.len();
        if removed.windows(2).any(|w| w[0] >= w[1]) || removed.iter().any(|&r| r as usize >= n) {
            return Err(Error::LocalityViolation("malformed removal set".into()));
        }
        match canonical_index(n, removed) {
            Some(idx) if idx < DENSE_LIMIT => self.lookup_dense(idx as usize, removed),
            _ => {
                self.check(removed.len())?;
                if let Some(&v) = self.sparse.get(removed) {
                    return Ok(v);
                }
                let v = self.evaluate(removed)?;
                self.sparse.insert(removed.to_vec(), v);
                Ok(v)
            }
        }
    }

    /// `f` at node `v` of a view rooted at this box's root.
    pub fn query_node(&mut self, view: &LatticeView, v: usize) -> Result<f64> {
        debug_assert_eq!(view.n(), self.root.len());
        if (v as u64) < DENSE_LIMIT {
            let removed = view.removed(v);
            self.lookup_dense(v, removed)
        } else {
            self.query_removed(view.removed(v))
        }
    }

    /// Values of `f` on every view node of size at least `min_size`; other entries are NaN.
    pub fn table(&mut self, view: &LatticeView, min_size: i64) -> Result<Vec<f64>> {
        let mut out = vec![f64::NAN; view.len()];
        for v in view.nodes_with_size_at_least(min_size) {
            out[v] = self.query_node(view, v)?;
        }
        Ok(out)
    }

    fn lookup_dense(&mut self, idx: usize, removed: &[u32]) -> Result<f64> {
        self.check(removed.len())?;
        if let Some(&v) = self.dense.get(idx) {
            if !v.is_nan() {
                return Ok(v);
            }
        }
        let v = self.evaluate(removed)?;
        if self.dense.len() <= idx {
            self.dense.resize(idx + 1, f64::NAN);
        }
        self.dense[idx] = v;
        Ok(v)
    }

    fn check(&mut self, depth: usize) -> Result<()> {
        if let Some(g) = self.guard {
            if depth > g {
                return Err(Error::LocalityViolation(format!(
                    "query misses {depth} root elements, guard allows {g}"
                )));
            }
        }
        self.realized_depth = Some(self.realized_depth.map_or(depth, |d| d.max(depth)));
        Ok(())
    }

    fn evaluate(&mut self, removed: &[u32]) -> Result<f64> {
        if self.ledger >= self.budget {
            return Err(Error::BudgetExceeded { needed: self.ledger as u128 + 1, limit: self.budget });
        }
        let z = SubsetRef { root: &self.root, root_values: &self.root_values, removed };
        let raw = self.evaluator.evaluate(&z)?;
        if raw.is_nan() {
            return Err(Error::Plugin("evaluator returned NaN".into()));
        }
        if raw.is_infinite() && matches!(self.range, RangeSpec::Unbounded) {
            return Err(Error::Plugin("evaluator returned an infinite value".into()));
        }
        self.ledger += 1;
        Ok(self.range.clamp(raw))
    }
}
