//! Parameter estimation for a fixed DAG and the fitted-network type.

mod bif;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DiscreteData};
use crate::error::{Error, Result};
use crate::graph::Dag;

pub use bif::parse_bif;

/// Largest conditional table (rows × levels) that [`fit`] will allocate.
const MAX_CPT_CELLS: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Mle,
    Bayes,
}

impl std::str::FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mle" => Ok(FitMethod::Mle),
            "bayes" => Ok(FitMethod::Bayes),
            other => Err(Error::invalid(format!("unknown fit method `{other}`"))),
        }
    }
}

/// Conditional probability table. Row `j` is the parent configuration with
/// mixed-radix index `j`, the first parent varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub node: String,
    pub parents: Vec<String>,
    pub table: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn row(&self, config: usize) -> &[f64] {
        &self.table[config]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedBn {
    pub dag: Dag,
    /// Levels per node, in DAG node order.
    pub levels: Vec<Vec<String>>,
    /// One table per node, in DAG node order.
    pub cpts: Vec<Cpt>,
    pub method: FitMethod,
    pub iss: f64,
}

impl FittedBn {
    /// Assembles a network from explicit tables, checking shapes and rows.
    pub fn from_cpts(dag: Dag, levels: Vec<Vec<String>>, cpts: Vec<Cpt>, method: FitMethod, iss: f64) -> Result<Self> {
        if levels.len() != dag.len() || cpts.len() != dag.len() {
            return Err(Error::invalid("one level list and one table per node are required"));
        }
        for (v, cpt) in cpts.iter().enumerate() {
            let name = &dag.nodes()[v];
            if &cpt.node != name {
                return Err(Error::invalid(format!("table for `{}` is in the slot of `{name}`", cpt.node)));
            }
            let expected: Vec<&str> = dag.parents(v).iter().map(|&p| dag.nodes()[p].as_str()).collect();
            let got: Vec<&str> = cpt.parents.iter().map(String::as_str).collect();
            if got != expected {
                return Err(Error::invalid(format!("parents of `{name}` do not match the graph")));
            }
            let q: usize = dag.parents(v).iter().map(|&p| levels[p].len()).product();
            if cpt.table.len() != q {
                return Err(Error::invalid(format!("`{name}` needs {q} rows, found {}", cpt.table.len())));
            }
            for row in &cpt.table {
                let sum: f64 = row.iter().sum();
                if row.len() != levels[v].len() || row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                    return Err(Error::invalid(format!("`{name}` has a row that is not a distribution")));
                }
            }
        }
        Ok(FittedBn {
            dag,
            levels,
            cpts,
            method,
            iss,
        })
    }

    pub fn nodes(&self) -> &[String] {
        self.dag.nodes()
    }

    pub fn len(&self) -> usize {
        self.dag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dag.is_empty()
    }

    pub fn index_of(&self, node: &str) -> Result<usize> {
        self.dag.index_of(node)
    }

    pub fn levels_of(&self, node: &str) -> Result<&[String]> {
        Ok(&self.levels[self.index_of(node)?])
    }

    pub fn cpt(&self, node: &str) -> Result<&Cpt> {
        Ok(&self.cpts[self.index_of(node)?])
    }

    pub fn level_index(&self, node: &str, level: &str) -> Result<usize> {
        let v = self.index_of(node)?;
        self.levels[v].iter().position(|l| l == level).ok_or_else(|| Error::UnknownLevel {
            node: node.to_string(),
            level: level.to_string(),
        })
    }

    /// Row index of a full assignment's parent configuration for `v`.
    pub(crate) fn config_of(&self, v: usize, assignment: &[usize]) -> usize {
        let mut j = 0;
        let mut stride = 1;
        for &p in self.dag.parents(v) {
            j += assignment[p] * stride;
            stride *= self.levels[p].len();
        }
        j
    }

    /// CSV with one row per (parent configuration, level): columns `node`,
    /// one per parent, `level`, `probability`.
    pub fn cpt_csv(&self, node: &str) -> Result<Vec<u8>> {
        let v = self.index_of(node)?;
        let cpt = &self.cpts[v];
        let parents = self.dag.parents(v);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["node".to_string()];
        header.extend(cpt.parents.iter().cloned());
        header.push("level".into());
        header.push("probability".into());
        w.write_record(&header)?;
        for (j, row) in cpt.table.iter().enumerate() {
            let mut rest = j;
            let mut config = Vec::with_capacity(parents.len());
            for &p in parents {
                let r = self.levels[p].len();
                config.push(self.levels[p][rest % r].clone());
                rest /= r;
            }
            for (k, p) in row.iter().enumerate() {
                let mut rec = vec![node.to_string()];
                rec.extend(config.iter().cloned());
                rec.push(self.levels[v][k].clone());
                rec.push(p.to_string());
                w.write_record(&rec)?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Estimates every conditional table of `dag` from `ds`.
/// `mle`: `n_jk / N_j` (uniform when `N_j = 0`); `bayes`:
/// `(n_jk + iss/(rq)) / (N_j + iss/q)`.
pub fn fit(ds: &Dataset, dag: &Dag, method: FitMethod, iss: f64) -> Result<FittedBn> {
    let data = DiscreteData::from_dataset(ds)?;
    fit_data(&data, dag, method, iss)
}

pub(crate) fn fit_data(data: &DiscreteData, dag: &Dag, method: FitMethod, iss: f64) -> Result<FittedBn> {
    if method == FitMethod::Bayes && !(iss > 0.0 && iss.is_finite()) {
        return Err(Error::invalid("imaginary sample size must be positive"));
    }
    let map = dag
        .nodes()
        .iter()
        .map(|n| data.index_of(n))
        .collect::<Result<Vec<usize>>>()?;
    let levels: Vec<Vec<String>> = map.iter().map(|&i| data.levels(i).to_vec()).collect();
    let mut cpts = Vec::with_capacity(dag.len());
    for v in 0..dag.len() {
        let child = map[v];
        let parents = dag.parents(v);
        let r = levels[v].len();
        let q: usize = parents.iter().map(|&p| levels[p].len()).product();
        if q.saturating_mul(r) > MAX_CPT_CELLS {
            return Err(Error::invalid(format!("table for `{}` is too large to fit", dag.nodes()[v])));
        }
        let mut counts = vec![0u64; q * r];
        let pcols: Vec<&[u16]> = parents.iter().map(|&p| data.column(map[p])).collect();
        let strides: Vec<usize> = parents
            .iter()
            .scan(1usize, |s, &p| {
                let cur = *s;
                *s *= levels[p].len();
                Some(cur)
            })
            .collect();
        let col = data.column(child);
        for row in 0..data.n_rows() {
            let mut j = 0;
            for (pc, st) in pcols.iter().zip(&strides) {
                j += pc[row] as usize * st;
            }
            counts[j * r + col[row] as usize] += 1;
        }
        let table = counts
            .chunks(r)
            .map(|c| {
                let total: u64 = c.iter().sum();
                match method {
                    FitMethod::Mle if total == 0 => vec![1.0 / r as f64; r],
                    FitMethod::Mle => c.iter().map(|&x| x as f64 / total as f64).collect(),
                    FitMethod::Bayes => {
                        let a = iss / (r as f64 * q as f64);
                        let denom = total as f64 + iss / q as f64;
                        c.iter().map(|&x| (x as f64 + a) / denom).collect()
                    }
                }
            })
            .collect();
        cpts.push(Cpt {
            node: dag.nodes()[v].clone(),
            parents: parents.iter().map(|&p| dag.nodes()[p].clone()).collect(),
            table,
        });
    }
    Ok(FittedBn {
        dag: dag.clone(),
        levels,
        cpts,
        method,
        iss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;

    fn col(name: &str, labels: &[&str]) -> Column {
        Column::factor_from_labels(name, &labels.iter().map(|s| Some(*s)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_node_estimates() {
        let ds = Dataset::new("t", vec![col("X", &["a", "a", "a", "b"])]).unwrap();
        let dag = Dag::empty(vec!["X".into()]);
        let bayes = fit(&ds, &dag, FitMethod::Bayes, 4.0).unwrap();
        assert!((bayes.cpts[0].table[0][0] - 0.625).abs() < 1e-15);
        let mle = fit(&ds, &dag, FitMethod::Mle, 1.0).unwrap();
        assert_eq!(mle.cpts[0].table[0], vec![0.75, 0.25]);
    }

    #[test]
    fn unseen_parent_configuration_is_uniform_under_mle() {
        let p = Column::factor("P", vec!["u".into(), "v".into()], vec![Some(0), Some(0)]).unwrap();
        let ds = Dataset::new("t", vec![p, col("C", &["x", "y"])]).unwrap();
        let dag = Dag::from_arcs(vec!["P".into(), "C".into()], &[("P".into(), "C".into())]).unwrap();
        let bn = fit(&ds, &dag, FitMethod::Mle, 1.0).unwrap();
        assert_eq!(bn.cpts[1].table[1], vec![0.5, 0.5]);
        let bn = fit(&ds, &dag, FitMethod::Bayes, 1.0).unwrap();
        for row in &bn.cpts[1].table {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_iss_approaches_mle() {
        let ds = Dataset::new("t", vec![col("A", &["0", "0", "1", "1", "1"]), col("B", &["0", "1", "1", "1", "0"])])
            .unwrap();
        let dag = Dag::from_arcs(vec!["A".into(), "B".into()], &[("A".into(), "B".into())]).unwrap();
        let mle = fit(&ds, &dag, FitMethod::Mle, 1.0).unwrap();
        let bayes = fit(&ds, &dag, FitMethod::Bayes, 1e-9).unwrap();
        for (a, b) in mle.cpts.iter().zip(&bayes.cpts) {
            for (ra, rb) in a.table.iter().zip(&b.table) {
                for (x, y) in ra.iter().zip(rb) {
                    assert!((x - y).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn missing_node_is_an_error() {
        let ds = Dataset::new("t", vec![col("A", &["0"])]).unwrap();
        let dag = Dag::empty(vec!["A".into(), "Z".into()]);
        assert!(matches!(fit(&ds, &dag, FitMethod::Mle, 1.0), Err(Error::UnknownNode(n)) if n == "Z"));
    }

    #[test]
    fn cpt_csv_layout() {
        let ds = Dataset::new("t", vec![col("A", &["0", "1"]), col("B", &["0", "1"])]).unwrap();
        let dag = Dag::from_arcs(vec!["A".into(), "B".into()], &[("A".into(), "B".into())]).unwrap();
        let bn = fit(&ds, &dag, FitMethod::Mle, 1.0).unwrap();
        let csv = String::from_utf8(bn.cpt_csv("B").unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "node,A,level,probability");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "B,0,0,1");
    }
}
