//! Shared test helpers: functions tabulated over bitmasks, random generators,
//! and brute-force reference implementations that never touch the lattice engine.
#![allow(dead_code)]

use std::sync::Arc;

use pwrap::{BlackBox, Dataset, RandomStream, RangeSpec, SubsetRef};

pub const TOL: f64 = 1e-9;

/// A function on all subsets of `{0, …, n−1}`, indexed by bitmask.
#[derive(Debug, Clone)]
pub struct Table {
    pub n: usize,
    pub vals: Arc<Vec<f64>>,
}

impl Table {
    pub fn new(n: usize, vals: Vec<f64>) -> Self {
        assert_eq!(vals.len(), 1 << n);
        Table { n, vals: Arc::new(vals) }
    }

    pub fn from_fn(n: usize, f: impl FnMut(u32) -> f64) -> Self {
        Table::new(n, (0..1u32 << n).map(f).collect())
    }

    pub fn at(&self, m: u32) -> f64 {
        self.vals[m as usize]
    }

    pub fn full(&self) -> u32 {
        ((1u64 << self.n) - 1) as u32
    }

    /// A box rooted at the set `mask` with an unbounded range.
    pub fn boxed(&self, mask: u32) -> BlackBox {
        self.boxed_in(mask, RangeSpec::Unbounded)
    }

    pub fn boxed_in(&self, mask: u32, range: RangeSpec) -> BlackBox {
        let vals = Arc::clone(&self.vals);
        BlackBox::new(ds(mask), range, move |z: &SubsetRef<'_>| vals[mask_of(z) as usize])
    }
}

pub fn pop(m: u32) -> usize {
    m.count_ones() as usize
}

pub fn bits(m: u32) -> impl Iterator<Item = u32> {
    (0..32).filter(move |i| m >> i & 1 == 1)
}

/// The dataset whose labels are the set bits of `m`.
pub fn ds(m: u32) -> Dataset {
    Dataset::from_labels(bits(m).map(|i| i.to_string()))
}

pub fn mask_of(z: &SubsetRef<'_>) -> u32 {
    z.elements().map(|e| 1u32 << e.label().parse::<u32>().unwrap()).fold(0, |a, b| a | b)
}

pub fn mask_of_dataset(d: &Dataset) -> u32 {
    d.elements().iter().map(|e| 1u32 << e.label().parse::<u32>().unwrap()).fold(0, |a, b| a | b)
}

/// Every submask of `m`, including 0 and `m`.
pub fn subsets(m: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut s = m;
    loop {
        out.push(s);
        if s == 0 {
            break;
        }
        s = (s - 1) & m;
    }
    out
}

/// Pairs `(v, u)` with `v ⊂ u ⊆ full` and `|u \ v| = 1`.
pub fn neighbor_pairs(n: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for u in 0..1u32 << n {
        for i in bits(u) {
            out.push((u & !(1 << i), u));
        }
    }
    out
}

// ---------- random functions ----------

pub fn rng(seed: u64) -> RandomStream {
    RandomStream::new(seed)
}

fn unif(r: &mut RandomStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.uniform()
}

/// Arbitrary values on a half-integer grid in `[lo, hi]`; ties and unit jumps are common.
pub fn arbitrary(n: usize, lo: f64, hi: f64, r: &mut RandomStream) -> Table {
    let steps = ((hi - lo) * 2.0).round() as u64;
    Table::from_fn(n, |_| lo + 0.5 * r.below(steps + 1) as f64)
}

/// Arbitrary real values in `[lo, hi]`.
pub fn arbitrary_real(n: usize, lo: f64, hi: f64, r: &mut RandomStream) -> Table {
    let v: Vec<f64> = (0..1u32 << n).map(|_| unif(r, lo, hi)).collect();
    Table::new(n, v)
}

/// A 1-Lipschitz function: the minimum of a few integer-height cones.
pub fn lipschitz(n: usize, r: &mut RandomStream) -> Table {
    let k = 1 + r.below(3) as usize;
    let anchors: Vec<(u32, f64)> =
        (0..k).map(|_| (r.below(1 << n) as u32, r.below(5) as f64)).collect();
    Table::from_fn(n, |z| anchors.iter().map(|&(a, h)| h + (a ^ z).count_ones() as f64).fold(f64::INFINITY, f64::min))
}

/// A 1-Lipschitz function with real values: a sum of weights in `[−1, 1]`
/// capped to 1-Lipschitz by taking a min with a cone.
pub fn lipschitz_real(n: usize, r: &mut RandomStream) -> Table {
    let w: Vec<f64> = (0..n).map(|_| unif(r, -1.0, 1.0)).collect();
    let base = unif(r, 0.0, 3.0);
    let anchor = r.below(1 << n) as u32;
    let h = unif(r, 0.0, 4.0);
    Table::from_fn(n, |z| {
        let lin = base + bits(z).map(|i| w[i as usize]).sum::<f64>();
        lin.min(h + (anchor ^ z).count_ones() as f64)
    })
}

/// A function with range `[0, r]`, 1-Lipschitz everywhere.
pub fn lipschitz_in(n: usize, rmax: f64, r: &mut RandomStream) -> Table {
    let f = if r.below(2) == 0 { lipschitz(n, r) } else { lipschitz_real(n, r) };
    Table::from_fn(n, |z| f.at(z).clamp(0.0, rmax))
}

/// A monotone function: the running max of arbitrary values over submasks.
pub fn monotone(n: usize, r: &mut RandomStream) -> Table {
    let base = arbitrary(n, 0.0, 6.0, r);
    let mut v = base.vals.to_vec();
    for m in 0..1u32 << n {
        for i in bits(m) {
            v[m as usize] = v[m as usize].max(v[(m & !(1 << i)) as usize]);
        }
    }
    Table::new(n, v)
}

/// A Lipschitz function corrupted at a few random points.
pub fn perturbed(n: usize, r: &mut RandomStream) -> Table {
    let f = lipschitz(n, r);
    let mut v = f.vals.to_vec();
    for _ in 0..1 + r.below(4) {
        let m = r.below(1 << n) as usize;
        v[m] += unif(r, -4.0, 4.0).round();
    }
    Table::new(n, v)
}

/// One of the generators above, chosen at random.
pub fn any_function(n: usize, r: &mut RandomStream) -> Table {
    match r.below(5) {
        0 => arbitrary(n, 0.0, 3.0, r),
        1 => arbitrary_real(n, -2.0, 4.0, r),
        2 => lipschitz(n, r),
        3 => monotone(n, r),
        _ => perturbed(n, r),
    }
}

// ---------- brute-force references ----------

/// Whether `f` is 1-Lipschitz on `{z ⊆ u : |z| ≥ ℓ}`.
pub fn naive_is_stable(f: &[f64], u: u32, level: i64) -> bool {
    if (pop(u) as i64) < level {
        return false;
    }
    for z in subsets(u) {
        if (pop(z) as i64) < level {
            continue;
        }
        for i in bits(u & !z) {
            if (f[(z | 1 << i) as usize] - f[z as usize]).abs() > 1.0 + TOL {
                return false;
            }
        }
    }
    true
}

/// `max({f(u) : u ⊆ x, |u| ≥ h, u ℓ-stable} ∪ {sentinel})`.
pub fn naive_stabilize(f: &[f64], x: u32, level: i64, h: i64, sentinel: f64) -> f64 {
    subsets(x)
        .into_iter()
        .filter(|&u| pop(u) as i64 >= h && naive_is_stable(f, u, level))
        .map(|u| f[u as usize])
        .fold(sentinel, f64::max)
}

/// Size of the largest ℓ-stable subset of `x`.
pub fn naive_max_stable(f: &[f64], x: u32, level: i64) -> Option<usize> {
    subsets(x).into_iter().filter(|&u| naive_is_stable(f, u, level)).map(pop).max()
}

/// `T_{ℓ,τ}(x)`: mean over `h ∈ {m−τ, …, m}` of the stabilization of `½(f + |z|)`,
/// with `m` the largest ℓ-stable size for `f`.
pub fn naive_proxy_t(f: &[f64], x: u32, level: i64, tau: usize) -> f64 {
    let m = naive_max_stable(f, x, level).expect("|x| ≥ ℓ") as i64;
    let chat: Vec<f64> = (0..f.len()).map(|z| 0.5 * (f[z] + pop(z as u32) as f64)).collect();
    let total: f64 = (m - tau as i64..=m).map(|h| naive_stabilize(&chat, x, level, h, f64::NEG_INFINITY)).sum();
    total / (tau as f64 + 1.0)
}

/// `P_τ(x)` for `f` clamped into `[0, r]`.
pub fn naive_proxy_p(f: &[f64], x: u32, tau: usize, r: f64) -> f64 {
    let n = pop(x) as i64;
    let t = tau as i64;
    let mut total = 0.0;
    for level in n - 2 * t..=n - t {
        let g: Vec<f64> = (0..f.len())
            .map(|z| (0.5 * (f[z].clamp(0.0, r) + pop(z as u32) as f64 - level as f64)).max(0.0))
            .collect();
        for h in n - t..=n {
            total += naive_stabilize(&g, x, level, h, 0.0);
        }
    }
    total / ((tau + 1) * (tau + 1)) as f64
}

/// `max({f(z') : z' ⊆ z, |z'| ≥ ℓ} ∪ {sentinel})`.
pub fn naive_monotonize(f: &[f64], z: u32, level: i64, sentinel: f64) -> f64 {
    subsets(z).into_iter().filter(|&s| pop(s) as i64 >= level).map(|s| f[s as usize]).fold(sentinel, f64::max)
}

/// Level-ℓ double monotonization at `z`.
pub fn naive_double_mono(f: &[f64], z: u32, level: i64) -> f64 {
    subsets(z)
        .into_iter()
        .filter(|&s| pop(s) as i64 >= level)
        .map(|s| 0.5 * (f[s as usize] + pop(s) as f64 - level as f64))
        .fold(-(level as f64) / 2.0, f64::max)
}

/// `min_{z ⊆ x, |x∖z| ≤ j} g(z) − |z| + |x| − j`.
pub fn naive_offset(g: &[f64], x: u32, j: usize) -> f64 {
    let n = pop(x);
    subsets(x)
        .into_iter()
        .filter(|&z| n - pop(z) <= j)
        .map(|z| g[z as usize] - pop(z) as f64 + n as f64 - j as f64)
        .fold(f64::INFINITY, f64::min)
}

/// `min{|x∖s| : s ⊆ x, f(s) ≤ y}`.
pub fn naive_inverse_loss(f: &[f64], x: u32, y: f64) -> Option<usize> {
    subsets(x).into_iter().filter(|&s| f[s as usize] <= y).map(|s| pop(x) - pop(s)).min()
}

/// Whether every covering edge inside `DN_j(x)` changes `f` by at most `c`.
pub fn naive_lipschitz_on_dn(f: &[f64], x: u32, j: usize, c: f64) -> bool {
    let n = pop(x);
    subsets(x).into_iter().filter(|&z| n - pop(z) <= j).all(|z| {
        bits(x & !z).all(|i| (f[(z | 1 << i) as usize] - f[z as usize]).abs() <= c + TOL)
    })
}

/// `max_{z ∈ DN_j(x)} |f(x) − f(z)|`.
pub fn naive_down_sensitivity(f: &[f64], x: u32, j: usize) -> f64 {
    let n = pop(x);
    subsets(x)
        .into_iter()
        .filter(|&z| n - pop(z) <= j)
        .map(|z| (f[x as usize] - f[z as usize]).abs())
        .fold(0.0, f64::max)
}

// ---------- statistics ----------

pub fn laplace_cdf(x: f64, b: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

/// One-sample Kolmogorov–Smirnov test; returns `(D, p)` using the asymptotic
/// Kolmogorov distribution with the Stephens small-sample correction.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let c = cdf(x);
        d = d.max(c - i as f64 / n).max((i + 1) as f64 / n - c);
    }
    let sq = n.sqrt();
    let lam = (sq + 0.12 + 0.11 / sq) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lam * lam).exp();
    }
    (d, p.clamp(0.0, 1.0))
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two-sided exact sign test p-value for `k` successes out of `n` fair trials.
pub fn sign_test(k: u64, n: u64) -> f64 {
    use statrs::distribution::{Binomial, DiscreteCDF};
    let b = Binomial::new(0.5, n).unwrap();
    let lo = k.min(n - k);
    (2.0 * b.cdf(lo)).min(1.0)
}

/// Whether `hits/trials ≥ target − 3·sd`, with `sd` the binomial deviation at `target`.
pub fn at_least_within_3sd(hits: usize, trials: usize, target: f64) -> bool {
    let sd = (target * (1.0 - target) / trials as f64).sqrt();
    hits as f64 / trials as f64 >= target - 3.0 * sd
}
