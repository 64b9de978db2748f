use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_cancel, learn_with_scorer, Problem, SearchConfig};
use crate::dataset::{Dataset, DiscreteData};
use crate::error::{Error, Result};
use crate::fit::{fit_data, FitMethod};
use crate::graph::Dag;
use crate::score::{ScoreSpec, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ValidationMode {
    Kfold { k: usize },
    Holdout { fraction: f64 },
}

impl Default for ValidationMode {
    fn default() -> Self {
        ValidationMode::Kfold { k: 10 }
    }
}

/// Where each fold's structure comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureSource {
    Learn(SearchConfig),
    Fixed(Dag),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    /// Mean negative log-likelihood per held-out observation.
    pub loss: f64,
    /// Per-variable share of `loss`, in data column order.
    pub per_variable: Vec<(String, f64)>,
    /// Mean network score of the fold structures on their held-out rows.
    pub network_score: f64,
    pub fold_losses: Vec<f64>,
}

impl ValidationReport {
    pub fn variable_loss(&self, name: &str) -> Option<f64> {
        self.per_variable.iter().find(|(n, _)| n == name).map(|(_, l)| *l)
    }
}

/// (train, test) row splits of a seeded shuffle.
fn splits(n: usize, mode: ValidationMode, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    match mode {
        ValidationMode::Kfold { k } => {
            if k < 2 || k > n {
                return Err(Error::invalid(format!("k-fold needs 2 <= k <= {n}")));
            }
            Ok((0..k)
                .map(|i| {
                    let (lo, hi) = (i * n / k, (i + 1) * n / k);
                    let test = idx[lo..hi].to_vec();
                    let train = idx[..lo].iter().chain(&idx[hi..]).copied().collect();
                    (train, test)
                })
                .collect())
        }
        ValidationMode::Holdout { fraction } => {
            if !(fraction > 0.0 && fraction < 1.0) || n < 2 {
                return Err(Error::invalid("hold-out fraction must lie in (0, 1) with at least two rows"));
            }
            let t = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
            Ok(vec![(idx[t..].to_vec(), idx[..t].to_vec())])
        }
    }
}

/// Cross-validated log-likelihood loss: each fold learns (or takes) a
/// structure on its training rows, fits it with Bayesian estimation
/// (iss 1) and scores the held-out rows.
pub fn validate(ds: &Dataset, source: &StructureSource, mode: ValidationMode, seed: u64) -> Result<ValidationReport> {
    validate_with(ds, source, mode, seed, None)
}

pub fn validate_with(
    ds: &Dataset,
    source: &StructureSource,
    mode: ValidationMode,
    seed: u64,
    cancel: Option<&AtomicBool>,
) -> Result<ValidationReport> {
    let data = DiscreteData::from_dataset(ds)?;
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let p = data.n_vars();
    let spec = match source {
        StructureSource::Learn(cfg) => cfg.score,
        StructureSource::Fixed(_) => ScoreSpec::default(),
    };
    let folds = splits(data.n_rows(), mode, seed)?;
    let mut per_var = vec![0.0; p];
    let mut fold_losses = Vec::with_capacity(folds.len());
    let mut score_sum = 0.0;
    for (train_rows, test_rows) in &folds {
        check_cancel(cancel)?;
        let train = Arc::new(data.resample(train_rows));
        let test = Arc::new(data.resample(test_rows));
        let dag = match source {
            StructureSource::Learn(cfg) => {
                let prob = Problem::from_data(Arc::clone(&train), cfg)?;
                let scorer = prob.scorer();
                let (parents, _) = learn_with_scorer(&prob, &scorer, None, cancel)?;
                prob.dag(parents)
            }
            StructureSource::Fixed(d) => d.clone(),
        };
        let bn = fit_data(&train, &dag, FitMethod::Bayes, 1.0)?;
        let map = data
            .names()
            .iter()
            .map(|n| bn.index_of(n))
            .collect::<Result<Vec<usize>>>()?;
        let mut assignment = vec![0usize; bn.len()];
        let mut fold_var = vec![0.0; p];
        for row in 0..test.n_rows() {
            for (c, &v) in map.iter().enumerate() {
                assignment[v] = test.column(c)[row] as usize;
            }
            for (c, &v) in map.iter().enumerate() {
                let pr = bn.cpts[v].row(bn.config_of(v, &assignment))[assignment[v]];
                fold_var[c] -= pr.ln();
            }
        }
        let m = test.n_rows() as f64;
        for (acc, x) in per_var.iter_mut().zip(&fold_var) {
            *acc += x / m;
        }
        fold_losses.push(fold_var.iter().sum::<f64>() / m);
        score_sum += Scorer::new(Arc::clone(&test), spec).network(&dag)?;
    }
    let k = folds.len() as f64;
    let per_variable: Vec<(String, f64)> = data
        .names()
        .iter()
        .cloned()
        .zip(per_var.iter().map(|x| x / k))
        .collect();
    Ok(ValidationReport {
        mode,
        loss: per_variable.iter().map(|(_, l)| l).sum(),
        per_variable,
        network_score: score_sum / k,
        fold_losses,
    })
}
