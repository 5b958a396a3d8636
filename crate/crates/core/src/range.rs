use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Declared output range of a black box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RangeSpec {
    /// Strictly increasing, nonempty list of admissible values.
    FiniteList { values: Vec<f64> },
    /// Closed interval `[lo, hi]` with `hi > lo`.
    Interval { lo: f64, hi: f64 },
    Unbounded,
}

impl RangeSpec {
    pub fn finite_list(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("finite range must be nonempty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("finite range values must be finite"));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("finite range must be strictly increasing"));
        }
        Ok(RangeSpec::FiniteList { values })
    }

    /// The list `lo, lo+1, ..., hi`.
    pub fn integers(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(invalid("empty integer range"));
        }
        Self::finite_list((lo..=hi).map(|v| v as f64).collect())
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(invalid(format!("interval [{lo}, {hi}] must satisfy hi > lo")));
        }
        Ok(RangeSpec::Interval { lo, hi })
    }

    /// `inf` of the range; negative infinity when unbounded.
    pub fn sentinel_low(&self) -> f64 {
        match self {
            RangeSpec::FiniteList { values } => values[0],
            RangeSpec::Interval { lo, .. } => *lo,
            RangeSpec::Unbounded => f64::NEG_INFINITY,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            RangeSpec::FiniteList { values } => Some(values),
            _ => None,
        }
    }

    /// Replaces `v` with the closest admissible value (ties go to the smaller one).
    pub fn clamp(&self, v: f64) -> f64 {
        match self {
            RangeSpec::Interval { lo, hi } => v.clamp(*lo, *hi),
            RangeSpec::Unbounded => v,
            RangeSpec::FiniteList { values } => {
                let i = values.partition_point(|&y| y < v);
                if i == 0 {
                    values[0]
                } else if i == values.len() {
                    values[i - 1]
                } else if values[i] - v < v - values[i - 1] {
                    values[i]
                } else {
                    values[i - 1]
                }
            }
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match self {
            RangeSpec::Interval { lo, hi } => *lo <= v && v <= *hi,
            RangeSpec::Unbounded => !v.is_nan(),
            RangeSpec::FiniteList { values } => values.contains(&v),
        }
    }
}
