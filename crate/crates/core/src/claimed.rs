//! Wrappers for analyst-claimed Lipschitz constants: Subset Extension,
//! Modified TAHOE, the small-diameter mechanism and the local Lipschitz filter.
//!
//! Each mechanism works on `f/c` and rescales its answer by `c`.

use crate::blackbox::BlackBox;
use crate::error::{invalid, Result};
use crate::lattice::LatticeView;
use crate::noise::{sample_laplace, sample_truncated_laplace, RandomStream};
use crate::output::{Profile, Release, WrapperOutput};
use crate::stability::{largest_stable, lex_least_largest_stable, proxy_p_table, proxy_t_table, rescaled_table, stable_flags};

/// Diagnostic for a released floor above the dataset size.
pub const TOO_SMALL: &str = "dataset too small for parameters: released floor exceeds |x|";

fn check_common(epsilon: f64, delta: f64, c: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("ε must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("δ must lie in (0, 1)"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c must be positive"));
    }
    Ok(())
}

/// Constants of the Subset Extension mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetExtensionConstants {
    pub eps0: f64,
    pub delta0: f64,
    pub q: usize,
    pub tau: usize,
}

impl SubsetExtensionConstants {
    /// Faithful profile: `ε₀ = ε/3`, `δ₀ = δ/2`, `q = 20`, `τ = ⌈ln(1/δ₀)/ε₀⌉`.
    /// Test profile: `q = 17`, `τ = 1`.
    pub fn new(epsilon: f64, delta: f64, profile: Profile) -> Self {
        let eps0 = epsilon / 3.0;
        let delta0 = delta / 2.0;
        match profile {
            Profile::PaperFaithful => SubsetExtensionConstants {
                eps0,
                delta0,
                q: 20,
                tau: ((1.0 / delta0).ln() / eps0).ceil().max(1.0) as usize,
            },
            Profile::TestConstants => SubsetExtensionConstants { eps0, delta0, q: 17, tau: 1 },
        }
    }

    /// Scale of the final Laplace noise, `10q/ε₀`.
    pub fn noise_scale(&self) -> f64 {
        10.0 * self.q as f64 / self.eps0
    }
}

/// Subset Extension: (ε, δ)-DP for every `f`; `f(x) + c·Lap(10q/ε₀)` when `f` is c-Lipschitz.
pub fn subset_extension(
    bb: &mut BlackBox,
    c: f64,
    epsilon: f64,
    delta: f64,
    profile: Profile,
    rng: &mut RandomStream,
) -> Result<WrapperOutput> {
    check_common(epsilon, delta, c)?;
    let k = SubsetExtensionConstants::new(epsilon, delta, profile);
    let n = bb.root().len();
    let tau = k.tau as f64;
    let before = bb.ledger();

    let r0 = sample_truncated_laplace(1.0 / k.eps0, tau, rng)?;
    let level = (n as f64 - k.q as f64 * tau + r0).ceil() as i64;
    if level > n as i64 {
        return Ok(WrapperOutput::new(Release::Bottom, bb, before, profile)
            .release("ell", level as f64)
            .diagnose(TOO_SMALL));
    }

    let depth = (n as i64 - level.max(0)) as usize;
    let view = LatticeView::shared(n, depth, bb.budget())?;
    let saved = bb.guard();
    bb.set_guard(Some(depth));
    let table = bb.table(&view, level);
    bb.set_guard(saved);
    let mut fvals = table?;
    for v in fvals.iter_mut() {
        *v /= c;
    }

    let stable = stable_flags(&view, &fvals, level);
    let m = largest_stable(&view, &stable).unwrap_or(0) as f64;
    let r1 = sample_truncated_laplace(2.0 / k.eps0, 2.0 * tau, rng)?;
    let b = m + r1 <= 0.5 * (n as f64 + level as f64) + 5.0 * tau;
    let out = WrapperOutput::new(Release::Bottom, bb, before, profile)
        .release("ell", level as f64)
        .release("b", if b { 1.0 } else { 0.0 });
    if b {
        return Ok(out);
    }

    let (t, _) = proxy_t_table(&view, &fvals, level, k.tau)?;
    let z = sample_laplace(k.noise_scale(), rng)?;
    Ok(WrapperOutput { result: Release::Value(c * (2.0 * t - n as f64 + z)), ..out })
}

/// Constants of Modified TAHOE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TahoeConstants {
    pub eps0: f64,
    pub delta0: f64,
    pub tau: usize,
}

impl TahoeConstants {
    /// Faithful profile: `ε₀ = ε/4`, `δ₀ = δ/3`, `τ = ⌈ln(1/δ₀)/ε₀⌉`. Test profile: `τ = 1`.
    pub fn new(epsilon: f64, delta: f64, profile: Profile) -> Self {
        let eps0 = epsilon / 4.0;
        let delta0 = delta / 3.0;
        let tau = match profile {
            Profile::PaperFaithful => ((1.0 / delta0).ln() / eps0).ceil().max(1.0) as usize,
            Profile::TestConstants => 1,
        };
        TahoeConstants { eps0, delta0, tau }
    }

    /// Scale of the final Laplace noise, `10τ/ε₀`.
    pub fn noise_scale(&self) -> f64 {
        10.0 * self.tau as f64 / self.eps0
    }
}

/// Modified TAHOE: (ε, δ)-DP for every `f`; `f(x) + c·Lap(10τ/ε₀)` when `f` is c-Lipschitz.
pub fn modified_tahoe(
    bb: &mut BlackBox,
    c: f64,
    epsilon: f64,
    delta: f64,
    profile: Profile,
    rng: &mut RandomStream,
) -> Result<WrapperOutput> {
    check_common(epsilon, delta, c)?;
    let k = TahoeConstants::new(epsilon, delta, profile);
    let n = bb.root().len();
    let tau = k.tau as f64;
    let before = bb.ledger();

    let r1 = sample_truncated_laplace(1.0 / k.eps0, tau, rng)?;
    let ell = n as f64 - 11.0 * tau - r1;
    let r2 = sample_truncated_laplace(2.0 / k.eps0, 2.0 * tau, rng)?;
    let h = n as f64 - 2.0 * tau - r2;
    let level = ell.ceil() as i64;
    let out = WrapperOutput::new(Release::Bottom, bb, before, profile).release("ell", ell);
    if level > n as i64 {
        return Ok(out.diagnose(TOO_SMALL));
    }

    let depth = (n as i64 - level.max(0)) as usize;
    let view = LatticeView::shared(n, depth, bb.budget())?;
    let saved = bb.guard();
    bb.set_guard(Some(depth));
    let table = bb.table(&view, level);
    bb.set_guard(saved);
    let mut fvals = table?;
    for v in fvals.iter_mut() {
        *v /= c;
    }

    let stable = stable_flags(&view, &fvals, level);
    let nonempty = largest_stable(&view, &stable).is_some_and(|m| m as f64 >= h);
    let out = WrapperOutput { queries: bb.ledger() - before, realized_depth: bb.realized_depth().unwrap_or(0), ..out };
    if !nonempty {
        return Ok(out);
    }
    let u = lex_least_largest_stable(&view, &stable).expect("a stable set exists");
    let z = sample_laplace(k.noise_scale(), rng)?;
    Ok(WrapperOutput { result: Release::Value(c * (fvals[u] + z)), ..out })
}

/// `τ = 3·⌈r/c⌉` for the small-diameter mechanism.
pub fn small_diameter_tau(c: f64, r: f64) -> usize {
    3 * (r / c).ceil() as usize
}

/// The small-diameter mechanism: ε-DP for every `f` with range `[0, r]`;
/// `f(x) + c·Lap(10/ε)` when `f` is c-Lipschitz. Queries stay inside `DN_{2τ}(x)`.
pub fn small_diameter(bb: &mut BlackBox, c: f64, r: f64, epsilon: f64, rng: &mut RandomStream) -> Result<WrapperOutput> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("ε must be positive"));
    }
    if !(c > 0.0 && r > 0.0 && c.is_finite() && r.is_finite()) {
        return Err(invalid("c and r must be positive"));
    }
    let tau = small_diameter_tau(c, r);
    let sensitivity = 2.0 * (4.0 + 3.0 * (r / c) / tau as f64);
    assert!(sensitivity <= 10.0 + 1e-12, "proxy sensitivity {sensitivity} exceeds the noise calibration");

    let before = bb.ledger();
    let n = bb.root().len();
    let view = LatticeView::shared(n, 2 * tau, bb.budget())?;
    let fvals = rescaled_table(bb, &view, c, r)?;
    let p = proxy_p_table(&view, &fvals, tau);
    let z = sample_laplace(10.0 / epsilon, rng)?;
    let y = c * (2.0 * p - 1.5 * tau as f64 + z);
    Ok(WrapperOutput::new(Release::Value(y), bb, before, Profile::PaperFaithful))
}

/// Deterministic local Lipschitz filter `y_x = c·(2P_τ(x) − 3τ/2)` with `τ = ⌈r/c⌉`.
///
/// Returns `f(x)` whenever `f` is c-Lipschitz near `x`; globally 14c-Lipschitz in `x`.
pub fn lipschitz_filter(bb: &mut BlackBox, c: f64, r: f64) -> Result<WrapperOutput> {
    if !(c > 0.0 && r > 0.0 && c.is_finite() && r.is_finite()) {
        return Err(invalid("c and r must be positive"));
    }
    let tau = (r / c).ceil() as usize;
    let before = bb.ledger();
    let view = LatticeView::shared(bb.root().len(), 2 * tau, bb.budget())?;
    let fvals = rescaled_table(bb, &view, c, r)?;
    let p = proxy_p_table(&view, &fvals, tau);
    let y = c * (2.0 * p - 1.5 * tau as f64);
    Ok(WrapperOutput::new(Release::Value(y), bb, before, Profile::PaperFaithful))
}
