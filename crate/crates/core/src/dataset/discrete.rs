use std::collections::HashMap;

use super::Dataset;
use crate::error::{Error, Result};

/// Dense integer view of the learning variables of a complete, all-factor
/// [`Dataset`]. The intervention indicator column is dropped; rows in which
/// a variable was intervened are remembered per variable.
#[derive(Debug, Clone)]
pub struct DiscreteData {
    names: Vec<String>,
    levels: Vec<Vec<String>>,
    columns: Vec<Vec<u16>>,
    n_rows: usize,
    /// `intervened[v][row]` is true when `v` was set experimentally.
    intervened: Vec<Option<Vec<bool>>>,
}

/// Sparse or dense cell counts for a (child, parents) family, stored as
/// `(config index, child level) → count`.
#[derive(Debug, Clone)]
pub struct FamilyCounts {
    pub r: usize,
    pub q: f64,
    /// Per observed parent configuration, the counts over child levels.
    pub configs: Vec<Vec<u32>>,
}

impl DiscreteData {
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        let vars = ds.variable_names();
        let mut names = Vec::with_capacity(vars.len());
        let mut levels = Vec::with_capacity(vars.len());
        let mut columns = Vec::with_capacity(vars.len());
        for name in &vars {
            let col = ds.column(name)?;
            let (lv, codes) = match (col.levels(), col.codes()) {
                (Some(l), Some(c)) => (l, c),
                _ => return Err(Error::NotFactor(name.to_string())),
            };
            if lv.len() > u16::MAX as usize {
                return Err(Error::invalid(format!("`{name}` has too many levels")));
            }
            let codes = codes
                .iter()
                .map(|c| c.map(|c| c as u16).ok_or_else(|| Error::Incomplete(name.to_string())))
                .collect::<Result<Vec<u16>>>()?;
            names.push(name.to_string());
            levels.push(lv.to_vec());
            columns.push(codes);
        }
        let mut intervened: Vec<Option<Vec<bool>>> = vec![None; names.len()];
        if ds.interventions().is_some() {
            let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
            for row in 0..ds.n_rows() {
                for v in ds.intervened_in_row(row) {
                    if let Some(&i) = index.get(v.as_str()) {
                        intervened[i].get_or_insert_with(|| vec![false; ds.n_rows()])[row] = true;
                    }
                }
            }
        }
        Ok(DiscreteData {
            names,
            levels,
            columns,
            n_rows: ds.n_rows(),
            intervened,
        })
    }

    /// Builds directly from codes; used by samplers and tests.
    pub fn from_codes(names: Vec<String>, levels: Vec<Vec<String>>, columns: Vec<Vec<u16>>) -> Self {
        let n_rows = columns.first().map_or(0, Vec::len);
        let p = names.len();
        DiscreteData {
            names,
            levels,
            columns,
            n_rows,
            intervened: vec![None; p],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn levels(&self, v: usize) -> &[String] {
        &self.levels[v]
    }

    pub fn all_levels(&self) -> &[Vec<String>] {
        &self.levels
    }

    pub fn cardinality(&self, v: usize) -> usize {
        self.levels[v].len()
    }

    pub fn column(&self, v: usize) -> &[u16] {
        &self.columns[v]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn has_interventions(&self) -> bool {
        self.intervened.iter().any(Option::is_some)
    }

    pub fn intervened_rows(&self, v: usize) -> Option<&[bool]> {
        self.intervened[v].as_deref()
    }

    /// Rows in the given order (repeats allowed), interventions carried.
    pub fn resample(&self, rows: &[usize]) -> DiscreteData {
        DiscreteData {
            names: self.names.clone(),
            levels: self.levels.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
            n_rows: rows.len(),
            intervened: self
                .intervened
                .iter()
                .map(|m| m.as_ref().map(|m| rows.iter().map(|&r| m[r]).collect()))
                .collect(),
        }
    }

    /// Mixed-radix configuration index of `vars` in every row (first variable
    /// varies fastest) together with the total number of configurations.
    pub fn config_indices(&self, vars: &[usize]) -> (Vec<u64>, f64) {
        let mut idx = vec![0u64; self.n_rows];
        let mut stride: u64 = 1;
        let mut total = 1.0f64;
        for &v in vars {
            let col = &self.columns[v];
            for (slot, &c) in idx.iter_mut().zip(col) {
                *slot += stride * c as u64;
            }
            let card = self.levels[v].len() as u64;
            stride = stride.saturating_mul(card.max(1));
            total *= card as f64;
        }
        (idx, total)
    }

    /// Counts of `child` against the configurations of `parents`, skipping
    /// rows masked out by `skip` (used by the interventional score).
    pub fn family_counts(&self, child: usize, parents: &[usize], skip: Option<&[bool]>) -> FamilyCounts {
        let r = self.cardinality(child);
        let q: f64 = parents.iter().map(|&p| self.cardinality(p) as f64).product();
        let col = &self.columns[child];
        let keep = |row: usize| skip.is_none_or(|m| !m[row]);
        if parents.is_empty() {
            let mut counts = vec![0u32; r];
            for (row, &c) in col.iter().enumerate() {
                if keep(row) {
                    counts[c as usize] += 1;
                }
            }
            let configs = if counts.iter().any(|&c| c > 0) { vec![counts] } else { Vec::new() };
            return FamilyCounts { r, q, configs };
        }
        let dense_limit = 1usize << 20;
        if q * r as f64 <= dense_limit as f64 {
            let qi = q as usize;
            let mut table = vec![0u32; qi * r];
            let mut strides = Vec::with_capacity(parents.len());
            let mut s = 1usize;
            for &p in parents {
                strides.push(s);
                s *= self.cardinality(p);
            }
            let pcols: Vec<&[u16]> = parents.iter().map(|&p| self.columns[p].as_slice()).collect();
            for row in 0..self.n_rows {
                if !keep(row) {
                    continue;
                }
                let mut j = 0usize;
                for (pc, &st) in pcols.iter().zip(&strides) {
                    j += pc[row] as usize * st;
                }
                table[j * r + col[row] as usize] += 1;
            }
            let configs = table
                .chunks(r)
                .filter(|c| c.iter().any(|&x| x > 0))
                .map(<[u32]>::to_vec)
                .collect();
            FamilyCounts { r, q, configs }
        } else {
            let (idx, _) = self.config_indices(parents);
            let mut map: HashMap<u64, Vec<u32>> = HashMap::new();
            for row in 0..self.n_rows {
                if keep(row) {
                    map.entry(idx[row]).or_insert_with(|| vec![0; r])[col[row] as usize] += 1;
                }
            }
            let mut keys: Vec<u64> = map.keys().copied().collect();
            keys.sort_unstable();
            let configs = keys.into_iter().map(|k| map.remove(&k).unwrap()).collect();
            FamilyCounts { r, q, configs }
        }
    }
}
