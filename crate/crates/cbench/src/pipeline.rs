//! Operations shared by the CLI and the HTTP service, so that both produce
//! identical artifacts from identical inputs and seeds.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize};

use serde::{Deserialize, Serialize};

use cbench_core::dataset::{
    attach_interventions, coerce_type, discretize, impute_mode, ColumnKind, Dataset, DiscretizationMethod,
    DiscretizationPlan, InterventionSpec,
};
use cbench_core::fit::FittedBn;
use cbench_core::graph::Dag;
use cbench_core::infer::{query, InferenceResult, Query, QueryOptions};
use cbench_core::learn::{
    averaged_network, bootstrap_learn_with, learn_cancellable, BootstrapConfig, SearchConfig, StrengthTable,
};
use cbench_core::score::network_score;
use cbench_core::Result;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnRequest {
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub bootstrap: Option<BootstrapConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnOutcome {
    pub dag: Dag,
    pub score: f64,
    pub strengths: Option<StrengthTable>,
    pub warnings: Vec<String>,
}

/// Single search run, or bootstrap plus averaged network when a bootstrap
/// configuration is given.
pub fn learn_structure(
    ds: &Dataset,
    req: &LearnRequest,
    cancel: Option<&AtomicBool>,
    progress: Option<&AtomicUsize>,
) -> Result<LearnOutcome> {
    match &req.bootstrap {
        None => {
            let r = learn_cancellable(ds, &req.search, cancel)?;
            Ok(LearnOutcome {
                dag: r.dag,
                score: r.score,
                strengths: None,
                warnings: r.warnings,
            })
        }
        Some(b) => {
            let result = bootstrap_learn_with(ds, &req.search, b, cancel, progress)?;
            let dag = averaged_network(&result.strengths, b.edge_threshold, b.direction_threshold);
            let score = network_score(ds, &dag, &req.search.score)?;
            Ok(LearnOutcome {
                dag,
                score,
                strengths: Some(result.strengths),
                warnings: Vec::new(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PreprocessStep {
    Coerce {
        column: String,
        to: ColumnKind,
    },
    Impute,
    Discretize {
        method: DiscretizationMethod,
        #[serde(default = "default_bins")]
        bins: usize,
        #[serde(default)]
        ibreaks: Option<usize>,
        /// Empty means every numeric column.
        #[serde(default)]
        columns: Vec<String>,
    },
    /// Without a mapping the indicator's values are read as 1-based column
    /// positions, 0 meaning observational.
    Interventions {
        column: String,
        #[serde(default)]
        mapping: Option<BTreeMap<String, Vec<String>>>,
    },
    Drop {
        column: String,
    },
}

fn default_bins() -> usize {
    3
}

pub fn preprocess(ds: &Dataset, step: &PreprocessStep) -> Result<Dataset> {
    match step {
        PreprocessStep::Coerce { column, to } => coerce_type(ds, column, *to),
        PreprocessStep::Impute => impute_mode(ds),
        PreprocessStep::Discretize {
            method,
            bins,
            ibreaks,
            columns,
        } => {
            let mut plan = DiscretizationPlan::new(*method, *bins);
            if let Some(i) = ibreaks {
                plan.hartemink_ibreaks = *i;
            }
            let targets: Vec<&str> = if columns.is_empty() {
                ds.columns()
                    .iter()
                    .filter(|c| c.kind() == ColumnKind::Numeric)
                    .map(|c| c.name())
                    .collect()
            } else {
                columns.iter().map(String::as_str).collect()
            };
            discretize(ds, &plan, &targets)
        }
        PreprocessStep::Interventions { column, mapping } => {
            let spec = match mapping {
                Some(m) => InterventionSpec {
                    column: column.clone(),
                    mapping: m.clone(),
                },
                None => InterventionSpec::by_position(ds, column)?,
            };
            attach_interventions(ds, spec)
        }
        PreprocessStep::Drop { column } => ds.drop_column(column),
    }
}

/// Unconditional distribution of every node, as published in dashboards.
pub fn marginals(bn: &FittedBn, opts: &QueryOptions) -> Result<BTreeMap<String, InferenceResult>> {
    bn.nodes()
        .iter()
        .map(|n| Ok((n.clone(), query(bn, &Query::new(n.clone()), opts)?)))
        .collect()
}
