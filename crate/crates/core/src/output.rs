use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::blackbox::BlackBox;

/// Which constant set a mechanism ran with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Constants exactly as in the privacy proofs.
    PaperFaithful,
    /// Reduced constants for tractable lattices. Privacy and accuracy proofs do not apply.
    TestConstants,
}

impl Profile {
    pub fn label(self) -> &'static str {
        match self {
            Profile::PaperFaithful => "paper-faithful",
            Profile::TestConstants => "test-constants (UNSAFE: privacy constants reduced)",
        }
    }
}

/// A released value or the nonresponse symbol ⊥.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Release {
    Value(f64),
    Bottom,
}

impl Release {
    pub fn value(self) -> Option<f64> {
        match self {
            Release::Value(v) => Some(v),
            Release::Bottom => None,
        }
    }

    pub fn is_bottom(self) -> bool {
        matches!(self, Release::Bottom)
    }
}

impl Serialize for Release {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Release::Value(v) => s.serialize_f64(*v),
            Release::Bottom => s.serialize_str("bottom"),
        }
    }
}

/// Result of one wrapper evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WrapperOutput {
    pub result: Release,
    /// Intermediate values the mechanism publishes alongside its result.
    pub released: BTreeMap<String, f64>,
    /// Distinct subsets evaluated during this run.
    pub queries: u64,
    /// Largest number of root elements missing from a queried subset.
    pub realized_depth: usize,
    pub profile: Profile,
    pub diagnostics: Vec<String>,
}

impl WrapperOutput {
    pub(crate) fn new(result: Release, bb: &BlackBox, ledger_before: u64, profile: Profile) -> Self {
        WrapperOutput {
            result,
            released: BTreeMap::new(),
            queries: bb.ledger() - ledger_before,
            realized_depth: bb.realized_depth().unwrap_or(0),
            profile,
            diagnostics: Vec::new(),
        }
    }

    pub(crate) fn release(mut self, name: &str, v: f64) -> Self {
        self.released.insert(name.to_string(), v);
        self
    }

    pub(crate) fn diagnose(mut self, msg: impl Into<String>) -> Self {
        self.diagnostics.push(msg.into());
        self
    }
}
