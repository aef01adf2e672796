use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceSource {
    Empirical,
    Synthetic,
}

/// Log-density samples along increasing `t`; `None` marks an unresolved entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTrace {
    pub t: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub source: TraceSource,
}

impl DensityTrace {
    pub fn new(t: Vec<f64>, values: Vec<Option<f64>>, source: TraceSource) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::Domain("trace lengths differ".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("trace times must be strictly increasing".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("resolved trace entries must be finite".into()));
        }
        Ok(Self { t, values, source })
    }

    pub fn resolved(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().zip(&self.values).filter_map(|(t, v)| v.map(|v| (*t, v)))
    }

    pub fn unresolved_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// `(min, max)` over resolved entries.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.resolved().fold(None, |acc, (_, v)| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}
