//! Built-in black-box functions, selected by a short textual spec.
//!
//! Numeric builtins read each element's label as a number; non-numeric labels are ignored.

use std::str::FromStr;

use crate::blackbox::{Evaluator, SubsetRef};
use crate::error::{invalid, Error, Result};
use crate::noise::RandomStream;
use crate::verification::hard::{HardInstance, HardKind};

/// A built-in function on datasets.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    /// `|z|`.
    Count,
    /// Sum of values clamped to `[lo, hi]`.
    SumClamped { lo: f64, hi: f64 },
    /// Mean of values clamped to `[lo, hi]`; 0 on the empty set.
    AverageClamped { lo: f64, hi: f64 },
    /// Median of the values (mean of the middle pair for even counts); 0 on the empty set.
    Median,
    Constant(f64),
    /// A sampled cone instance on the hypercube; labels are coordinates.
    Hard(HardInstance),
}

fn num(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| invalid(format!("{what}: `{s}` is not a number")))
}

fn bounds(args: &[&str], name: &str) -> Result<(f64, f64)> {
    match args {
        [lo, hi] => {
            let (lo, hi) = (num(lo, name)?, num(hi, name)?);
            if lo.partial_cmp(&hi).is_none_or(|o| o.is_gt()) {
                return Err(invalid(format!("{name}: need lo ≤ hi")));
            }
            Ok((lo, hi))
        }
        _ => Err(invalid(format!("{name} expects `{name}:LO:HI`"))),
    }
}

fn parse_hard(args: &str) -> Result<HardInstance> {
    let (mut n, mut alpha, mut rho, mut gamma, mut seed, mut kind) = (None, 1u32, None, None, 0u64, HardKind::Planted);
    for kv in args.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| invalid(format!("hard-instance: expected key=value, got `{kv}`")))?;
        let bad = |_| invalid(format!("hard-instance: bad value for {k}"));
        match k.trim() {
            "n" => n = Some(v.parse::<usize>().map_err(bad)?),
            "alpha" => alpha = v.parse().map_err(bad)?,
            "rho" => rho = Some(v.parse::<u32>().map_err(bad)?),
            "gamma" => gamma = Some(v.parse::<usize>().map_err(bad)?),
            "seed" => seed = v.parse().map_err(bad)?,
            "kind" => {
                kind = match v {
                    "planted" => HardKind::Planted,
                    "null" => HardKind::Null,
                    _ => return Err(invalid("hard-instance: kind is `planted` or `null`")),
                }
            }
            other => return Err(invalid(format!("hard-instance: unknown key `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| invalid("hard-instance: n is required"))?;
    let rho = rho.unwrap_or(4 * alpha);
    let gamma = gamma.unwrap_or(3.min(rho as usize).min(n) | 1);
    let mut rng = RandomStream::new(seed);
    HardInstance::sample(n, alpha, rho, gamma, kind, &mut rng)
}

impl FromStr for Builtin {
    type Err = Error;

    /// Accepts `count`, `sum-clamped:LO:HI`, `average-clamped:LO:HI`, `median`,
    /// `constant:K` and `hard-instance:n=..,alpha=..,rho=..,gamma=..,seed=..,kind=planted|null`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let args: Vec<&str> = if rest.is_empty() { Vec::new() } else { rest.split(':').collect() };
        match name {
            "count" => Ok(Builtin::Count),
            "median" => Ok(Builtin::Median),
            "sum-clamped" => bounds(&args, name).map(|(lo, hi)| Builtin::SumClamped { lo, hi }),
            "average-clamped" => bounds(&args, name).map(|(lo, hi)| Builtin::AverageClamped { lo, hi }),
            "constant" => match args.as_slice() {
                [k] => Ok(Builtin::Constant(num(k, name)?)),
                _ => Err(invalid("constant expects `constant:K`")),
            },
            "hard-instance" => parse_hard(rest).map(Builtin::Hard),
            _ => Err(invalid(format!("unknown builtin `{name}`"))),
        }
    }
}

impl Builtin {
    /// Evaluates on a plain list of values.
    pub fn eval_values(&self, values: &[f64]) -> f64 {
        match self {
            Builtin::Count => values.len() as f64,
            Builtin::SumClamped { lo, hi } => values.iter().map(|v| v.clamp(*lo, *hi)).sum(),
            Builtin::AverageClamped { lo, hi } => {
                if values.is_empty() {
                    0.0
                } else {
                    values.iter().map(|v| v.clamp(*lo, *hi)).sum::<f64>() / values.len() as f64
                }
            }
            Builtin::Median => {
                let mut v = values.to_vec();
                v.sort_by(f64::total_cmp);
                match v.len() {
                    0 => 0.0,
                    m if m % 2 == 1 => v[m / 2],
                    m => 0.5 * (v[m / 2 - 1] + v[m / 2]),
                }
            }
            Builtin::Constant(k) => *k,
            Builtin::Hard(_) => f64::NAN,
        }
    }
}

impl Evaluator for Builtin {
    fn evaluate(&mut self, z: &SubsetRef<'_>) -> Result<f64> {
        match self {
            Builtin::Count => Ok(z.len() as f64),
            Builtin::Hard(inst) => inst.evaluator().evaluate(z),
            other => {
                let vals: Vec<f64> = z.values().collect();
                Ok(other.eval_values(&vals))
            }
        }
    }
}
