//! Decomposable network scores over discrete data and the G² conditional
//! independence test.
//!
//! All scores are "higher is better". With `n_ijk` the count of child level
//! `k` under parent configuration `j`, `N_j = Σ_k n_ijk`, `r` child levels and
//! `q` parent configurations:
//!
//! * `loglik = Σ n_ijk ln(n_ijk / N_j)`
//! * `aic = loglik − q(r−1)`
//! * `bic = loglik − q(r−1)/2 · ln n`
//! * `bde` (BDeu) with `α_j = iss/q`, `α_jk = iss/(rq)`:
//!   `Σ_j lnΓ(α_j) − lnΓ(α_j + N_j) + Σ_k lnΓ(α_jk + n_ijk) − lnΓ(α_jk)`
//! * `mbde`: BDeu where each node ignores the rows in which it was
//!   intervened.

mod citest;

use std::sync::Arc;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dataset::{Dataset, DiscreteData};
use crate::error::{Error, Result};
use crate::graph::Dag;

pub use citest::{ci_test, ci_test_idx, CiTestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Loglik,
    Aic,
    Bic,
    Bde,
    Mbde,
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "loglik" => ScoreKind::Loglik,
            "aic" => ScoreKind::Aic,
            "bic" => ScoreKind::Bic,
            "bde" | "bdeu" => ScoreKind::Bde,
            "mbde" => ScoreKind::Mbde,
            other => return Err(Error::invalid(format!("unknown score `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSpec {
    pub kind: ScoreKind,
    /// Imaginary sample size (bde/mbde only).
    #[serde(default = "default_iss")]
    pub iss: f64,
}

fn default_iss() -> f64 {
    1.0
}

impl ScoreSpec {
    pub fn new(kind: ScoreKind) -> Self {
        ScoreSpec { kind, iss: 1.0 }
    }

    pub fn with_iss(kind: ScoreKind, iss: f64) -> Self {
        ScoreSpec { kind, iss }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.iss > 0.0 && self.iss.is_finite()) {
            return Err(Error::invalid("imaginary sample size must be positive"));
        }
        Ok(())
    }
}

impl Default for ScoreSpec {
    fn default() -> Self {
        ScoreSpec::new(ScoreKind::Bic)
    }
}

fn xlogx_ratio(n: f64, total: f64) -> f64 {
    if n > 0.0 {
        n * (n / total).ln()
    } else {
        0.0
    }
}

/// Local score of `child` given `parents` (indices into `data`).
pub fn local_score_idx(data: &DiscreteData, child: usize, parents: &[usize], spec: &ScoreSpec) -> f64 {
    let skip = match spec.kind {
        ScoreKind::Mbde => data.intervened_rows(child),
        _ => None,
    };
    let fc = data.family_counts(child, parents, skip);
    let r = fc.r as f64;
    let q = fc.q;
    match spec.kind {
        ScoreKind::Loglik | ScoreKind::Aic | ScoreKind::Bic => {
            let mut ll = 0.0;
            for cfg in &fc.configs {
                let total: f64 = cfg.iter().map(|&c| c as f64).sum();
                for &c in cfg {
                    ll += xlogx_ratio(c as f64, total);
                }
            }
            let penalty = q * (r - 1.0);
            match spec.kind {
                ScoreKind::Loglik => ll,
                ScoreKind::Aic => ll - penalty,
                _ => ll - penalty / 2.0 * (data.n_rows() as f64).ln(),
            }
        }
        ScoreKind::Bde | ScoreKind::Mbde => {
            let a_j = spec.iss / q;
            let a_jk = spec.iss / (r * q);
            let lg_aj = ln_gamma(a_j);
            let lg_ajk = ln_gamma(a_jk);
            let mut s = 0.0;
            for cfg in &fc.configs {
                let total: f64 = cfg.iter().map(|&c| c as f64).sum();
                s += lg_aj - ln_gamma(a_j + total);
                for &c in cfg {
                    if c > 0 {
                        s += ln_gamma(a_jk + c as f64) - lg_ajk;
                    }
                }
            }
            s
        }
    }
}

/// Name-based convenience over [`local_score_idx`].
pub fn local_score(ds: &Dataset, node: &str, parents: &[&str], spec: &ScoreSpec) -> Result<f64> {
    spec.validate()?;
    let data = DiscreteData::from_dataset(ds)?;
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let child = data.index_of(node)?;
    let ps = parents
        .iter()
        .map(|p| data.index_of(p))
        .collect::<Result<Vec<_>>>()?;
    if ps.contains(&child) {
        return Err(Error::invalid(format!("`{node}` cannot be its own parent")));
    }
    let mut ps = ps;
    ps.sort_unstable();
    ps.dedup();
    Ok(local_score_idx(&data, child, &ps, spec))
}

pub fn network_score(ds: &Dataset, dag: &Dag, spec: &ScoreSpec) -> Result<f64> {
    spec.validate()?;
    let data = Arc::new(DiscreteData::from_dataset(ds)?);
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    Scorer::new(data, *spec).network(dag)
}

/// Thread-safe memo of local scores keyed by (node, sorted parent set).
#[derive(Debug, Default)]
pub struct LocalScoreCache {
    map: DashMap<(u32, Box<[u32]>), f64>,
}

impl LocalScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get_or_compute(&self, node: usize, parents: &[usize], f: impl FnOnce() -> f64) -> f64 {
        let key: (u32, Box<[u32]>) = (node as u32, parents.iter().map(|&p| p as u32).collect());
        if let Some(v) = self.map.get(&key) {
            return *v;
        }
        let v = f();
        self.map.insert(key, v);
        v
    }
}

/// A dataset + score specification + shared cache.
#[derive(Debug, Clone)]
pub struct Scorer {
    data: Arc<DiscreteData>,
    spec: ScoreSpec,
    cache: Arc<LocalScoreCache>,
}

impl Scorer {
    pub fn new(data: Arc<DiscreteData>, spec: ScoreSpec) -> Self {
        Scorer {
            data,
            spec,
            cache: Arc::new(LocalScoreCache::new()),
        }
    }

    pub fn with_cache(data: Arc<DiscreteData>, spec: ScoreSpec, cache: Arc<LocalScoreCache>) -> Self {
        Scorer { data, spec, cache }
    }

    pub fn data(&self) -> &DiscreteData {
        &self.data
    }

    pub fn data_arc(&self) -> Arc<DiscreteData> {
        Arc::clone(&self.data)
    }

    pub fn spec(&self) -> &ScoreSpec {
        &self.spec
    }

    pub fn cache(&self) -> &Arc<LocalScoreCache> {
        &self.cache
    }

    /// `parents` must be sorted.
    pub fn local(&self, node: usize, parents: &[usize]) -> f64 {
        debug_assert!(parents.windows(2).all(|w| w[0] < w[1]));
        self.cache
            .get_or_compute(node, parents, || local_score_idx(&self.data, node, parents, &self.spec))
    }

    pub fn network_idx(&self, parents: &[Vec<usize>]) -> f64 {
        parents.iter().enumerate().map(|(v, ps)| self.local(v, ps)).sum()
    }

    /// Network score of a DAG whose nodes are (a permutation of) the data's
    /// variables.
    pub fn network(&self, dag: &Dag) -> Result<f64> {
        let map = dag
            .nodes()
            .iter()
            .map(|n| self.data.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        let mut total = 0.0;
        for (v, ps) in dag.parent_sets().iter().enumerate() {
            let mut mapped: Vec<usize> = ps.iter().map(|&p| map[p]).collect();
            mapped.sort_unstable();
            total += self.local(map[v], &mapped);
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{attach_interventions, Column, InterventionSpec};
    use approx::assert_abs_diff_eq;

    fn binary_3_1() -> Dataset {
        let col = Column::factor_from_labels("X", &[Some("a"), Some("a"), Some("a"), Some("b")]).unwrap();
        Dataset::new("t", vec![col]).unwrap()
    }

    #[test]
    fn closed_form_single_node() {
        let ds = binary_3_1();
        let s = |k| local_score(&ds, "X", &[], &ScoreSpec::new(k)).unwrap();
        // 3 ln(3/4) + ln(1/4)
        assert_abs_diff_eq!(s(ScoreKind::Loglik), -2.249340578475233, epsilon = 1e-12);
        assert_abs_diff_eq!(s(ScoreKind::Bic), -2.9424877590351783, epsilon = 1e-12);
        assert_abs_diff_eq!(s(ScoreKind::Aic), -3.249340578475233, epsilon = 1e-12);
        // lnΓ(1) − lnΓ(5) + lnΓ(3.5) − lnΓ(0.5) + lnΓ(1.5) − lnΓ(0.5)
        assert_abs_diff_eq!(s(ScoreKind::Bde), -3.242592351485517, epsilon = 1e-12);
    }

    #[test]
    fn mbde_with_every_row_intervened_is_empty_prior() {
        let ds = binary_3_1();
        let ind = Column::factor_from_labels("INT", &[Some("1"); 4]).unwrap();
        let mut cols = ds.columns().to_vec();
        cols.push(ind);
        let ds = Dataset::new("t", cols).unwrap();
        let spec = InterventionSpec::by_position(&ds, "INT").unwrap();
        let ds = attach_interventions(&ds, spec).unwrap();
        let s = local_score(&ds, "X", &[], &ScoreSpec::new(ScoreKind::Mbde)).unwrap();
        assert_eq!(s, 0.0);
        // bde still sees every row
        let b = local_score(&ds, "X", &[], &ScoreSpec::new(ScoreKind::Bde)).unwrap();
        assert_abs_diff_eq!(b, -3.242592351485517, epsilon = 1e-12);
    }

    #[test]
    fn errors() {
        let col = Column::numeric("x", vec![Some(1.0)]).unwrap();
        let ds = Dataset::new("t", vec![col]).unwrap();
        assert!(matches!(
            local_score(&ds, "x", &[], &ScoreSpec::default()),
            Err(Error::NotFactor(_))
        ));
        let empty = Dataset::new(
            "e",
            vec![Column::factor_from_labels("x", &[] as &[Option<&str>]).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            local_score(&empty, "x", &[], &ScoreSpec::default()),
            Err(Error::EmptyDataset)
        ));
        assert!(ScoreSpec::with_iss(ScoreKind::Bde, 0.0).validate().is_err());
    }

    #[test]
    fn cache_hits_match_recomputation() {
        let ds = binary_3_1();
        let data = Arc::new(DiscreteData::from_dataset(&ds).unwrap());
        let scorer = Scorer::new(data.clone(), ScoreSpec::new(ScoreKind::Bde));
        let a = scorer.local(0, &[]);
        let b = scorer.local(0, &[]);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a.to_bits(), local_score_idx(&data, 0, &[], scorer.spec()).to_bits());
        assert_eq!(scorer.cache().len(), 1);
    }
}
