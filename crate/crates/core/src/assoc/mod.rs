//! Pairwise association networks over factor variables and link-community
//! detection on them.

mod community;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub use community::{link_communities, CommunityAssignment, Linkage, Merge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssocMeasure {
    CramersV,
    TschuprowT,
    GkLambda,
}

impl AssocMeasure {
    pub fn eval(self, table: &[Vec<u64>]) -> f64 {
        match self {
            AssocMeasure::CramersV => cramers_v(table),
            AssocMeasure::TschuprowT => tschuprow_t(table),
            AssocMeasure::GkLambda => gk_lambda(table),
        }
    }
}

impl std::str::FromStr for AssocMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cramers_v" | "cramer" | "v" => AssocMeasure::CramersV,
            "tschuprow_t" | "tschuprow" | "t" => AssocMeasure::TschuprowT,
            "gk_lambda" | "lambda" => AssocMeasure::GkLambda,
            other => return Err(Error::invalid(format!("unknown association measure `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssocEdge {
    pub a: String,
    pub b: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssocGraph {
    pub nodes: Vec<String>,
    /// Sorted by `(a, b)` with `a < b`.
    pub edges: Vec<AssocEdge>,
    pub measure: AssocMeasure,
}

/// Cross-tabulation of two factor columns; rows follow the levels of `a`.
pub fn contingency(ds: &Dataset, a: &str, b: &str) -> Result<Vec<Vec<u64>>> {
    let ca = ds.column(a)?;
    let cb = ds.column(b)?;
    let (la, xa) = ca
        .levels()
        .zip(ca.codes())
        .ok_or_else(|| Error::NotFactor(a.to_string()))?;
    let (lb, xb) = cb
        .levels()
        .zip(cb.codes())
        .ok_or_else(|| Error::NotFactor(b.to_string()))?;
    let mut table = vec![vec![0u64; lb.len()]; la.len()];
    for (u, v) in xa.iter().zip(xb) {
        match (u, v) {
            (Some(u), Some(v)) => table[*u as usize][*v as usize] += 1,
            _ => {
                let col = if u.is_none() { a } else { b };
                return Err(Error::Incomplete(col.to_string()));
            }
        }
    }
    Ok(table)
}

/// Drops all-zero rows and columns.
fn compact(table: &[Vec<u64>]) -> Vec<Vec<f64>> {
    let cols = table.first().map_or(0, Vec::len);
    let keep_cols: Vec<usize> = (0..cols).filter(|&j| table.iter().any(|r| r[j] > 0)).collect();
    table
        .iter()
        .filter(|r| r.iter().any(|&c| c > 0))
        .map(|r| keep_cols.iter().map(|&j| r[j] as f64).collect())
        .collect()
}

/// Pearson χ² of a compacted table together with n, rows and columns.
fn pearson(t: &[Vec<f64>]) -> (f64, f64, usize, usize) {
    let r = t.len();
    let c = t.first().map_or(0, Vec::len);
    let row: Vec<f64> = t.iter().map(|x| x.iter().sum()).collect();
    let col: Vec<f64> = (0..c).map(|j| t.iter().map(|x| x[j]).sum()).collect();
    let n: f64 = row.iter().sum();
    let mut chi2 = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = row[i] * col[j] / n;
            let d = t[i][j] - e;
            chi2 += d * d / e;
        }
    }
    (chi2, n, r, c)
}

fn unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

pub fn cramers_v(table: &[Vec<u64>]) -> f64 {
    let t = compact(table);
    let (chi2, n, r, c) = pearson(&t);
    let m = r.min(c);
    if m <= 1 {
        return 0.0;
    }
    unit((chi2 / (n * (m - 1) as f64)).sqrt())
}

pub fn tschuprow_t(table: &[Vec<u64>]) -> f64 {
    let t = compact(table);
    let (chi2, n, r, c) = pearson(&t);
    if r.min(c) <= 1 {
        return 0.0;
    }
    unit((chi2 / (n * (((r - 1) * (c - 1)) as f64).sqrt())).sqrt())
}

/// Symmetric Goodman–Kruskal λ.
pub fn gk_lambda(table: &[Vec<u64>]) -> f64 {
    let t = compact(table);
    let r = t.len();
    if r == 0 {
        return 0.0;
    }
    let c = t[0].len();
    let row_max: f64 = t.iter().map(|x| x.iter().copied().fold(0.0, f64::max)).sum();
    let col_max: f64 = (0..c).map(|j| t.iter().map(|x| x[j]).fold(0.0, f64::max)).sum();
    let row_tot: Vec<f64> = t.iter().map(|x| x.iter().sum()).collect();
    let col_tot: Vec<f64> = (0..c).map(|j| t.iter().map(|x| x[j]).sum()).collect();
    let n: f64 = row_tot.iter().sum();
    let max_row_tot = row_tot.iter().copied().fold(0.0, f64::max);
    let max_col_tot = col_tot.iter().copied().fold(0.0, f64::max);
    let denom = 2.0 * n - max_col_tot - max_row_tot;
    if denom <= 0.0 {
        return 0.0;
    }
    unit((row_max + col_max - max_col_tot - max_row_tot) / denom)
}

/// Keeps every variable pair whose association exceeds `threshold`.
pub fn build_assoc(ds: &Dataset, measure: AssocMeasure, threshold: f64) -> Result<AssocGraph> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid("threshold must lie in [0, 1]"));
    }
    let mut nodes: Vec<String> = ds.variable_names().into_iter().map(str::to_string).collect();
    nodes.sort();
    for n in &nodes {
        let col = ds.column(n)?;
        if col.levels().is_none() {
            return Err(Error::NotFactor(n.clone()));
        }
        if col.missing_count() > 0 {
            return Err(Error::Incomplete(n.clone()));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..nodes.len())
        .flat_map(|i| (i + 1..nodes.len()).map(move |j| (i, j)))
        .collect();
    let weights = pairs
        .par_iter()
        .map(|&(i, j)| contingency(ds, &nodes[i], &nodes[j]).map(|t| measure.eval(&t)))
        .collect::<Result<Vec<f64>>>()?;
    let edges = pairs
        .iter()
        .zip(weights)
        .filter(|(_, w)| *w > threshold)
        .map(|(&(i, j), weight)| AssocEdge {
            a: nodes[i].clone(),
            b: nodes[j].clone(),
            weight,
        })
        .collect();
    Ok(AssocGraph { nodes, edges, measure })
}

/// Drops edges at or below `threshold` from an existing graph.
pub fn rethreshold(g: &AssocGraph, threshold: f64) -> AssocGraph {
    AssocGraph {
        nodes: g.nodes.clone(),
        edges: g.edges.iter().filter(|e| e.weight > threshold).cloned().collect(),
        measure: g.measure,
    }
}

/// CSV with header `from,to,weight`, rows in lexicographic order.
pub fn export_assoc_edgelist(g: &AssocGraph) -> Vec<u8> {
    let mut edges: Vec<&AssocEdge> = g.edges.iter().collect();
    edges.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["from", "to", "weight"]).expect("in-memory write");
    for e in edges {
        w.write_record([e.a.as_str(), e.b.as_str(), &e.weight.to_string()])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}
