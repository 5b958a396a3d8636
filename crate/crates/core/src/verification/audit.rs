use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::noise::RandomStream;
use crate::output::Release;

/// An empirical estimate of privacy loss between two neighboring inputs.
///
/// This is a heuristic lower-confidence estimate: it can expose a violation,
/// never certify privacy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpAuditReport {
    /// Largest `ln((P_lo − δ)/Q_hi)` over bins and both directions, floored at 0,
    /// where `P_lo`, `Q_hi` are Clopper–Pearson bounds.
    pub epsilon_hat: f64,
    /// The same ratio from raw frequencies, over bins with at least `min_count` hits on both sides.
    pub epsilon_point: f64,
    /// Width of the confidence correction at the bin that attains `epsilon_hat`.
    pub slack: f64,
    pub delta_slack: f64,
    pub trials: usize,
    pub bins: usize,
    pub confidence: f64,
    pub bottom_counts: [usize; 2],
    pub heuristic: bool,
}

/// Outcome of one audited run, as produced by the mechanism closure.
pub type AuditOutcome = Release;

/// Minimum per-side bin count for the point estimate.
pub const MIN_COUNT: usize = 30;

/// Runs `mech` `trials` times on each of `x` and `x_prime` and compares output histograms.
///
/// Bins are equal-width over the observed range of real outputs, plus one bin for ⊥.
#[allow(clippy::too_many_arguments)]
pub fn dp_audit<M>(
    mut mech: M,
    x: &Dataset,
    x_prime: &Dataset,
    trials: usize,
    bins: usize,
    delta_slack: f64,
    confidence: f64,
    seed: u64,
) -> Result<DpAuditReport>
where
    M: FnMut(&Dataset, &mut RandomStream) -> Result<AuditOutcome>,
{
    if trials == 0 || bins == 0 {
        return Err(invalid("audit needs at least one trial and one bin"));
    }
    if !(0.0..1.0).contains(&confidence) || !(0.0..1.0).contains(&delta_slack) {
        return Err(invalid("confidence and δ slack must lie in [0, 1)"));
    }
    let mut outs: [Vec<AuditOutcome>; 2] = [Vec::with_capacity(trials), Vec::with_capacity(trials)];
    for t in 0..trials as u64 {
        let mut r0 = RandomStream::with_stream(seed, 2 * t);
        outs[0].push(mech(x, &mut r0)?);
        let mut r1 = RandomStream::with_stream(seed, 2 * t + 1);
        outs[1].push(mech(x_prime, &mut r1)?);
    }

    let finite = outs.iter().flatten().filter_map(|o| o.value());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = [vec![0usize; bins + 1], vec![0usize; bins + 1]];
    for side in 0..2 {
        for o in &outs[side] {
            let b = match o.value() {
                Some(v) => (((v - lo) / width) as usize).min(bins - 1),
                None => bins,
            };
            counts[side][b] += 1;
        }
    }

    let alpha = (1.0 - confidence) / (4.0 * (bins + 1) as f64);
    let n = trials as f64;
    let mut eps_hat = 0.0f64;
    let mut slack = 0.0f64;
    let mut eps_point = 0.0f64;
    #[allow(clippy::needless_range_loop)]
    for b in 0..=bins {
        for (p, q) in [(0, 1), (1, 0)] {
            let (cp, cq) = (counts[p][b], counts[q][b]);
            let p_lo = clopper_pearson_lower(cp, trials, alpha);
            let q_hi = clopper_pearson_upper(cq, trials, alpha);
            if p_lo > delta_slack && q_hi > 0.0 {
                let e = ((p_lo - delta_slack) / q_hi).ln();
                if e > eps_hat {
                    eps_hat = e;
                    let (ph, qh) = (cp as f64 / n, cq as f64 / n);
                    slack = if ph > delta_slack && qh > 0.0 { ((ph - delta_slack) / qh).ln() - e } else { 0.0 };
                }
            }
            if cp >= MIN_COUNT && cq >= MIN_COUNT {
                let (ph, qh) = (cp as f64 / n, cq as f64 / n);
                if ph > delta_slack {
                    eps_point = eps_point.max(((ph - delta_slack) / qh).ln());
                }
            }
        }
    }

    Ok(DpAuditReport {
        epsilon_hat: eps_hat,
        epsilon_point: eps_point,
        slack: slack.max(0.0),
        delta_slack,
        trials,
        bins,
        confidence,
        bottom_counts: [counts[0][bins], counts[1][bins]],
        heuristic: true,
    })
}

fn clopper_pearson_lower(k: usize, n: usize, alpha: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    Beta::new(k as f64, (n - k) as f64 + 1.0).map_or(0.0, |b| b.inverse_cdf(alpha))
}

fn clopper_pearson_upper(k: usize, n: usize, alpha: f64) -> f64 {
    if k == n {
        return 1.0;
    }
    Beta::new(k as f64 + 1.0, (n - k) as f64).map_or(1.0, |b| b.inverse_cdf(1.0 - alpha))
}
