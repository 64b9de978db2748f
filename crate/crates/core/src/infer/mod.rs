//! Queries on a fitted network: exact variable elimination, likelihood
//! weighting with repeat-run error bars, and ancestral sampling.

mod approx;
mod exact;
mod factor;
mod sample;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FittedBn;

pub use approx::approx_query;
pub use exact::exact_query;
pub(crate) use exact::{relevant, ve_marginal};
pub(crate) use factor::Factor;
pub use sample::sample;
pub(crate) use sample::draw;

/// Networks up to this many nodes use exact inference by default.
pub const EXACT_NODE_LIMIT: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub event: String,
    #[serde(default)]
    pub evidence: BTreeMap<String, String>,
}

impl Query {
    pub fn new(event: impl Into<String>) -> Self {
        Query {
            event: event.into(),
            evidence: BTreeMap::new(),
        }
    }

    pub fn given(mut self, node: impl Into<String>, level: impl Into<String>) -> Self {
        self.evidence.insert(node.into(), level.into());
        self
    }

    /// Event index and evidence as (node, level) indices.
    pub(crate) fn resolve(&self, bn: &FittedBn) -> Result<(usize, Vec<(usize, usize)>)> {
        let event = bn.index_of(&self.event)?;
        if self.evidence.contains_key(&self.event) {
            return Err(Error::invalid(format!("`{}` is both the event and evidence", self.event)));
        }
        let evidence = self
            .evidence
            .iter()
            .map(|(n, l)| Ok((bn.index_of(n)?, bn.level_index(n, l)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok((event, evidence))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InferenceMethod {
    Exact,
    Approximate,
}

impl std::str::FromStr for InferenceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(InferenceMethod::Exact),
            "approximate" | "approx" => Ok(InferenceMethod::Approximate),
            other => Err(Error::invalid(format!("unknown inference method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub method: InferenceMethod,
    pub event: String,
    pub levels: Vec<String>,
    pub distribution: Vec<f64>,
    /// Per-level standard deviation across repeats (approximate only).
    pub error_bars: Option<Vec<f64>>,
    pub repeats: usize,
    pub samples_per_repeat: usize,
}

impl InferenceResult {
    pub fn prob(&self, level: &str) -> Option<f64> {
        self.levels.iter().position(|l| l == level).map(|i| self.distribution[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryOptions {
    /// `None` picks exact up to [`EXACT_NODE_LIMIT`] nodes.
    pub method: Option<InferenceMethod>,
    pub samples_per_repeat: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            method: None,
            samples_per_repeat: 10_000,
            repeats: 30,
            seed: 0,
        }
    }
}

impl QueryOptions {
    pub fn method_for(&self, bn: &FittedBn) -> InferenceMethod {
        self.method.unwrap_or(if bn.len() <= EXACT_NODE_LIMIT {
            InferenceMethod::Exact
        } else {
            InferenceMethod::Approximate
        })
    }
}

/// Routes a query to exact or approximate inference.
pub fn query(bn: &FittedBn, q: &Query, opts: &QueryOptions) -> Result<InferenceResult> {
    match opts.method_for(bn) {
        InferenceMethod::Exact => exact_query(bn, q),
        InferenceMethod::Approximate => approx_query(bn, q, opts.samples_per_repeat, opts.repeats, opts.seed),
    }
}

/// Query conditioned on several pieces of evidence at once.
pub fn joint_evidence_query(
    bn: &FittedBn,
    event: &str,
    evidence: &BTreeMap<String, String>,
    opts: &QueryOptions,
) -> Result<InferenceResult> {
    let q = Query {
        event: event.to_string(),
        evidence: evidence.clone(),
    };
    query(bn, &q, opts)
}

/// Mean and sample standard deviation per level over repeat estimates.
pub(crate) fn mean_and_sd(estimates: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let k = estimates.first().map_or(0, Vec::len);
    let r = estimates.len() as f64;
    let mean: Vec<f64> = (0..k).map(|i| estimates.iter().map(|e| e[i]).sum::<f64>() / r).collect();
    let sd = (0..k)
        .map(|i| {
            if estimates.len() < 2 {
                0.0
            } else {
                let ss: f64 = estimates.iter().map(|e| (e[i] - mean[i]).powi(2)).sum();
                (ss / (r - 1.0)).sqrt()
            }
        })
        .collect();
    (mean, sd)
}
