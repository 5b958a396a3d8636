use crate::blackbox::BlackBox;
use crate::error::{Error, Result};

fn count_removal_sets(n: usize, depth: usize) -> u128 {
    let mut total = 0u128;
    let mut term = 1u128;
    for j in 0..=depth.min(n) {
        total = total.saturating_add(term);
        term = term.saturating_mul((n - j) as u128) / (j as u128 + 1);
    }
    total
}

/// Calls `visit` on every sorted removal set of size at most `depth`, recursively.
fn for_each_removal<F>(n: usize, depth: usize, visit: &mut F) -> Result<()>
where
    F: FnMut(&[u32]) -> Result<()>,
{
    fn rec<F>(n: usize, depth: usize, start: usize, cur: &mut Vec<u32>, visit: &mut F) -> Result<()>
    where
        F: FnMut(&[u32]) -> Result<()>,
    {
        visit(cur)?;
        if cur.len() == depth {
            return Ok(());
        }
        for i in start..n {
            cur.push(i as u32);
            rec(n, depth, i + 1, cur, visit)?;
            cur.pop();
        }
        Ok(())
    }
    rec(n, depth, 0, &mut Vec::new(), visit)
}

fn guard_budget(bb: &BlackBox, depth: usize) -> Result<()> {
    let needed = count_removal_sets(bb.root().len(), depth);
    if needed > bb.budget() as u128 {
        return Err(Error::BudgetExceeded { needed, limit: bb.budget() });
    }
    Ok(())
}

/// `DS_λ(x) = max_{z ∈ DN_λ(x)} |f(x) − f(z)|` by direct enumeration.
pub fn brute_down_sensitivity(bb: &mut BlackBox, depth: usize) -> Result<f64> {
    guard_budget(bb, depth)?;
    let fx = bb.query_removed(&[])?;
    let mut best = 0.0f64;
    for_each_removal(bb.root().len(), depth, &mut |r| {
        best = best.max((fx - bb.query_removed(r)?).abs());
        Ok(())
    })?;
    Ok(best)
}

/// Whether every covering edge inside `DN_λ(x)` changes `f` by at most `c`.
pub fn brute_lipschitz_on_dn(bb: &mut BlackBox, depth: usize, c: f64) -> Result<bool> {
    guard_budget(bb, depth)?;
    let mut ok = true;
    for_each_removal(bb.root().len(), depth, &mut |r| {
        if r.is_empty() || !ok {
            return Ok(());
        }
        let fz = bb.query_removed(r)?;
        for skip in 0..r.len() {
            let parent: Vec<u32> = r.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &v)| v).collect();
            if (fz - bb.query_removed(&parent)?).abs() > c {
                ok = false;
                break;
            }
        }
        Ok(())
    })?;
    Ok(ok)
}
