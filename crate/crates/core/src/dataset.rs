//! Datasets over an opaque, totally ordered universe.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error};

/// A universe element.
///
/// Plain set elements carry only a label. Elements produced by the multiset
/// adapter also carry the copy number of the occurrence they stand for.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Element {
    label: String,
    copy: Option<u32>,
}

impl Element {
    pub fn new(label: impl Into<String>) -> Self {
        Element { label: label.into(), copy: None }
    }

    pub fn with_copy(label: impl Into<String>, copy: u32) -> Self {
        Element { label: label.into(), copy: Some(copy) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn copy(&self) -> Option<u32> {
        self.copy
    }

    /// Numeric reading of the label, if it parses as a real.
    pub fn value(&self) -> Option<f64> {
        self.label.parse::<f64>().ok().filter(|v| v.is_finite())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.copy {
            Some(c) => write!(f, "{}#{}", self.label, c),
            None => f.write_str(&self.label),
        }
    }
}

impl FromStr for Element {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return Err(invalid(format!("element identifier {s:?} is empty or contains whitespace")));
        }
        if let Some((label, copy)) = s.rsplit_once('#') {
            if let Ok(c) = copy.parse::<u32>() {
                return Ok(Element::with_copy(label, c));
            }
        }
        Ok(Element::new(s))
    }
}

/// A finite set of universe elements, kept sorted and duplicate free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<Element>", into = "Vec<Element>")]
pub struct Dataset {
    elements: Vec<Element>,
}

impl Dataset {
    pub fn new(elements: impl IntoIterator<Item = Element>) -> Self {
        let mut elements: Vec<Element> = elements.into_iter().collect();
        elements.sort();
        elements.dedup();
        Dataset { elements }
    }

    pub fn from_labels<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Self::new(labels.into_iter().map(Element::new))
    }

    pub fn empty() -> Self {
        Dataset::default()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn get(&self, i: usize) -> &Element {
        &self.elements[i]
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.elements.binary_search(e).is_ok()
    }

    pub fn position(&self, e: &Element) -> Option<usize> {
        self.elements.binary_search(e).ok()
    }

    pub fn is_subset(&self, other: &Dataset) -> bool {
        self.elements.iter().all(|e| other.contains(e))
    }

    /// `self` with `e` removed.
    pub fn without(&self, e: &Element) -> Dataset {
        Dataset { elements: self.elements.iter().filter(|x| *x != e).cloned().collect() }
    }

    /// `self` with `e` added.
    pub fn with(&self, e: Element) -> Dataset {
        Dataset::new(self.elements.iter().cloned().chain(std::iter::once(e)))
    }

    /// Indices, in `self`, of the elements missing from `sub`.
    ///
    /// Returns `None` when `sub` is not a subset of `self`.
    pub fn removed_indices(&self, sub: &Dataset) -> Option<Vec<u32>> {
        if !sub.is_subset(self) {
            return None;
        }
        Some(
            (0..self.len())
                .filter(|&i| !sub.contains(&self.elements[i]))
                .map(|i| i as u32)
                .collect(),
        )
    }

    /// Parses one identifier per line, or a JSON-style array of strings or numbers.
    pub fn parse_text(text: &str) -> Result<Vec<String>, Error> {
        let trimmed = text.trim();
        if trimmed.starts_with('[') {
            let inner = trimmed
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(|| invalid("unterminated JSON array in dataset"))?;
            return Ok(inner
                .split(',')
                .map(|t| t.trim().trim_matches('"').to_string())
                .filter(|t| !t.is_empty())
                .collect());
        }
        Ok(trimmed
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect())
    }
}

impl From<Vec<Element>> for Dataset {
    fn from(v: Vec<Element>) -> Self {
        Dataset::new(v)
    }
}

impl From<Dataset> for Vec<Element> {
    fn from(d: Dataset) -> Self {
        d.elements
    }
}

/// The map φ from multisets to sets: the i-th copy of `v` becomes `(v, i)`.
pub fn multiset_adapter<S: AsRef<str>>(values: &[S]) -> Dataset {
    let mut sorted: Vec<&str> = values.iter().map(AsRef::as_ref).collect();
    sorted.sort_unstable();
    let mut out = Vec::with_capacity(sorted.len());
    let mut run = 0u32;
    for (i, v) in sorted.iter().enumerate() {
        run = if i > 0 && sorted[i - 1] == *v { run + 1 } else { 1 };
        out.push(Element::with_copy(*v, run));
    }
    Dataset::new(out)
}

/// The projection ψ back to a multiset, returned sorted.
pub fn multiset_projection(d: &Dataset) -> Vec<String> {
    let mut out: Vec<String> = d.elements().iter().map(|e| e.label().to_string()).collect();
    out.sort_unstable();
    out
}
