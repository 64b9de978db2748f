//! Typed tabular data: factor and numeric columns with missing-value flags,
//! plus the cleaning steps that make a table ready for structure learning.
//!
//! A [`Dataset`] is an immutable value. Every operation returns a new table.

mod csv_io;
mod discrete;
mod discretize;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{export_csv, export_csv_with, load_csv, CsvOptions, Delimiter};
pub use discrete::DiscreteData;
pub use discretize::{discretize, format_significant, DiscretizationMethod, DiscretizationPlan};
pub(crate) use discretize::mutual_information;

/// Default number of distinct values below which a column is read as a factor.
pub const FACTOR_LEVEL_THRESHOLD: usize = 53;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Factor,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnData {
    Factor {
        levels: Vec<String>,
        codes: Vec<Option<u32>>,
    },
    Numeric {
        values: Vec<Option<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    name: String,
    #[serde(flatten)]
    data: ColumnData,
}

impl Column {
    pub fn factor(name: impl Into<String>, levels: Vec<String>, codes: Vec<Option<u32>>) -> Result<Self> {
        let name = name.into();
        let mut seen = std::collections::HashSet::new();
        for level in &levels {
            if !seen.insert(level.as_str()) {
                return Err(Error::InvalidColumn {
                    column: name,
                    reason: format!("duplicate level `{level}`"),
                });
            }
        }
        if let Some(bad) = codes.iter().flatten().find(|&&c| c as usize >= levels.len()) {
            return Err(Error::InvalidColumn {
                column: name,
                reason: format!("code {bad} does not index a declared level"),
            });
        }
        Ok(Column {
            name,
            data: ColumnData::Factor { levels, codes },
        })
    }

    /// Builds a factor from per-row labels (`None` = missing). Levels are
    /// placed in canonical order (see [`canonical_level_order`]).
    pub fn factor_from_labels<S: AsRef<str>>(name: impl Into<String>, labels: &[Option<S>]) -> Result<Self> {
        let mut index: HashMap<&str, u32> = HashMap::new();
        let mut levels: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(labels.len());
        for label in labels {
            codes.push(label.as_ref().map(|l| {
                let l = l.as_ref();
                *index.entry(l).or_insert_with(|| {
                    levels.push(l.to_string());
                    levels.len() as u32 - 1
                })
            }));
        }
        let (levels, codes) = canonicalize(levels, codes);
        Column::factor(name, levels, codes)
    }

    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Result<Self> {
        let name = name.into();
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidColumn {
                column: name,
                reason: "non-finite value".into(),
            });
        }
        Ok(Column {
            name,
            data: ColumnData::Numeric { values },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Factor { .. } => ColumnKind::Factor,
            ColumnData::Numeric { .. } => ColumnKind::Numeric,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Factor { codes, .. } => codes.len(),
            ColumnData::Numeric { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Factor { levels, .. } => Some(levels),
            ColumnData::Numeric { .. } => None,
        }
    }

    pub fn codes(&self) -> Option<&[Option<u32>]> {
        match &self.data {
            ColumnData::Factor { codes, .. } => Some(codes),
            ColumnData::Numeric { .. } => None,
        }
    }

    pub fn values(&self) -> Option<&[Option<f64>]> {
        match &self.data {
            ColumnData::Numeric { values } => Some(values),
            ColumnData::Factor { .. } => None,
        }
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match &self.data {
            ColumnData::Factor { codes, .. } => codes[row].is_none(),
            ColumnData::Numeric { values } => values[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&r| self.is_missing(r)).count()
    }

    /// Label of a factor cell, or the shortest round-tripping rendering of a
    /// numeric cell. `None` when missing.
    pub fn label(&self, row: usize) -> Option<String> {
        match &self.data {
            ColumnData::Factor { levels, codes } => codes[row].map(|c| levels[c as usize].clone()),
            ColumnData::Numeric { values } => values[row].map(format_number),
        }
    }

    fn select_rows(&self, rows: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Factor { levels, codes } => ColumnData::Factor {
                levels: levels.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
            ColumnData::Numeric { values } => ColumnData::Numeric {
                values: rows.iter().map(|&r| values[r]).collect(),
            },
        };
        Column {
            name: self.name.clone(),
            data,
        }
    }
}

/// Annotates rows with the variables that were experimentally set in them.
///
/// `mapping` sends every level of the indicator column to the set of
/// intervened variables (an empty set means "none").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub column: String,
    pub mapping: BTreeMap<String, Vec<String>>,
}

impl InterventionSpec {
    /// The common encoding where indicator value `k` (1-based) names the k-th
    /// non-indicator column and `0` marks an observational row.
    pub fn by_position(ds: &Dataset, column: &str) -> Result<Self> {
        let col = ds.column(column)?;
        let variables: Vec<&str> = ds
            .columns()
            .iter()
            .map(Column::name)
            .filter(|n| *n != column)
            .collect();
        let labels: Vec<String> = match col.levels() {
            Some(levels) => levels.to_vec(),
            None => {
                let mut seen: Vec<String> = (0..col.len()).filter_map(|r| col.label(r)).collect();
                seen.sort();
                seen.dedup();
                seen
            }
        };
        let mut mapping = BTreeMap::new();
        for label in labels {
            let k: usize = label.trim().parse().map_err(|_| {
                Error::invalid(format!("intervention indicator level `{label}` is not a position"))
            })?;
            let targets = match k {
                0 => Vec::new(),
                k if k <= variables.len() => vec![variables[k - 1].to_string()],
                _ => {
                    return Err(Error::invalid(format!(
                        "intervention indicator {k} exceeds the {} variables",
                        variables.len()
                    )))
                }
            };
            mapping.insert(label, targets);
        }
        Ok(InterventionSpec {
            column: column.to_string(),
            mapping,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    columns: Vec<Column>,
    n_rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interventions: Option<InterventionSpec>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        let mut names = std::collections::HashSet::new();
        for (i, c) in columns.iter().enumerate() {
            if c.name.is_empty() {
                return Err(Error::EmptyColumnName(i));
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
            if c.len() != n_rows {
                return Err(Error::InvalidColumn {
                    column: c.name.clone(),
                    reason: format!("has {} rows, expected {n_rows}", c.len()),
                });
            }
        }
        Ok(Dataset {
            name: name.into(),
            columns,
            n_rows,
            interventions: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(Column::name).collect()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.column_index(name)?])
    }

    pub fn interventions(&self) -> Option<&InterventionSpec> {
        self.interventions.as_ref()
    }

    /// Columns that take part in learning: everything except the
    /// intervention indicator.
    pub fn variable_names(&self) -> Vec<&str> {
        let skip = self.interventions.as_ref().map(|s| s.column.as_str());
        self.columns
            .iter()
            .map(Column::name)
            .filter(|n| Some(*n) != skip)
            .collect()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn replace_column(&self, idx: usize, column: Column) -> Dataset {
        let mut out = self.clone();
        out.columns[idx] = column;
        out
    }

    /// Rows in the given order (repeats allowed). Interventions carry over.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            columns: self.columns.iter().map(|c| c.select_rows(rows)).collect(),
            n_rows: rows.len(),
            interventions: self.interventions.clone(),
        }
    }

    pub fn drop_column(&self, name: &str) -> Result<Dataset> {
        let idx = self.column_index(name)?;
        let mut out = self.clone();
        out.columns.remove(idx);
        if out.interventions.as_ref().is_some_and(|s| s.column == name) {
            out.interventions = None;
        }
        if out.columns.is_empty() {
            out.n_rows = 0;
        }
        Ok(out)
    }

    /// Variables intervened in `row` (empty when observational or when no
    /// interventions are attached).
    pub fn intervened_in_row(&self, row: usize) -> &[String] {
        let Some(spec) = &self.interventions else {
            return &[];
        };
        let Ok(col) = self.column(&spec.column) else {
            return &[];
        };
        match col.label(row).and_then(|l| spec.mapping.get(&l)) {
            Some(v) => v,
            None => &[],
        }
    }
}

pub fn coerce_type(ds: &Dataset, column: &str, to: ColumnKind) -> Result<Dataset> {
    let idx = ds.column_index(column)?;
    let col = &ds.columns[idx];
    if col.kind() == to {
        return Ok(ds.clone());
    }
    let converted = match (&col.data, to) {
        (ColumnData::Numeric { values }, ColumnKind::Factor) => {
            let mut distinct: Vec<f64> = values.iter().flatten().copied().collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let levels: Vec<String> = distinct.iter().copied().map(format_number).collect();
            let codes = values
                .iter()
                .map(|v| v.map(|x| distinct.binary_search_by(|d| d.total_cmp(&x)).unwrap() as u32))
                .collect();
            Column::factor(column, levels, codes)?
        }
        (ColumnData::Factor { levels, codes }, ColumnKind::Numeric) => {
            let parsed = levels
                .iter()
                .map(|l| match parse_number(l) {
                    Some(x) => Ok(x),
                    None => Err(Error::UnparseableLevel {
                        column: column.to_string(),
                        level: l.clone(),
                    }),
                })
                .collect::<Result<Vec<f64>>>()?;
            Column::numeric(column, codes.iter().map(|c| c.map(|c| parsed[c as usize])).collect())?
        }
        _ => unreachable!(),
    };
    Ok(ds.replace_column(idx, converted))
}

/// Fills missing factor cells with the column mode (ties go to the
/// lexicographically smallest label) and missing numeric cells with the
/// median.
pub fn impute_mode(ds: &Dataset) -> Result<Dataset> {
    let mut out = ds.clone();
    for col in out.columns.iter_mut() {
        let missing = col.missing_count();
        if missing == 0 {
            continue;
        }
        if missing == col.len() {
            return Err(Error::AllMissing(col.name.clone()));
        }
        match &mut col.data {
            ColumnData::Factor { levels, codes } => {
                let mut counts = vec![0usize; levels.len()];
                for c in codes.iter().flatten() {
                    counts[*c as usize] += 1;
                }
                let mode = (0..levels.len())
                    .max_by(|&a, &b| counts[a].cmp(&counts[b]).then_with(|| levels[b].cmp(&levels[a])))
                    .unwrap() as u32;
                for c in codes.iter_mut() {
                    c.get_or_insert(mode);
                }
            }
            ColumnData::Numeric { values } => {
                let mut present: Vec<f64> = values.iter().flatten().copied().collect();
                let med = median(&mut present);
                for v in values.iter_mut() {
                    v.get_or_insert(med);
                }
            }
        }
    }
    Ok(out)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

pub fn attach_interventions(ds: &Dataset, spec: InterventionSpec) -> Result<Dataset> {
    let col = ds.column(&spec.column)?;
    for targets in spec.mapping.values() {
        for t in targets {
            if t == &spec.column {
                return Err(Error::invalid(format!("`{t}` is the intervention indicator itself")));
            }
            ds.column_index(t)?;
        }
    }
    for row in 0..ds.n_rows {
        if let Some(label) = col.label(row) {
            if !spec.mapping.contains_key(&label) {
                return Err(Error::invalid(format!(
                    "intervention mapping has no entry for indicator value `{label}`"
                )));
            }
        }
    }
    let mut out = ds.clone();
    out.interventions = Some(spec);
    Ok(out)
}

/// Level → count table. Factors list every declared level (plus `NA` when
/// cells are missing); numeric columns are binned into 10 equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub column: String,
    pub entries: Vec<(String, usize)>,
}

impl FrequencyTable {
    pub fn total(&self) -> usize {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn get(&self, level: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.0 == level).map(|e| e.1)
    }
}

pub const HISTOGRAM_BINS: usize = 10;

pub fn summarize(ds: &Dataset, column: &str) -> Result<FrequencyTable> {
    let col = ds.column(column)?;
    let missing = col.missing_count();
    let mut entries = match &col.data {
        ColumnData::Factor { levels, codes } => {
            let mut counts = vec![0usize; levels.len()];
            for c in codes.iter().flatten() {
                counts[*c as usize] += 1;
            }
            levels.iter().cloned().zip(counts).collect::<Vec<_>>()
        }
        ColumnData::Numeric { values } => {
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            if present.is_empty() {
                Vec::new()
            } else {
                let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let width = (hi - lo) / HISTOGRAM_BINS as f64;
                let mut counts = [0usize; HISTOGRAM_BINS];
                for x in present {
                    let b = if width > 0.0 {
                        (((x - lo) / width).ceil() as usize).clamp(1, HISTOGRAM_BINS) - 1
                    } else {
                        0
                    };
                    counts[b] += 1;
                }
                let breaks: Vec<f64> = (0..=HISTOGRAM_BINS)
                    .map(|i| if i == HISTOGRAM_BINS { hi } else { lo + width * i as f64 })
                    .collect();
                let labels = discretize::interval_labels(&breaks);
                labels.into_iter().zip(counts).collect()
            }
        }
    };
    if missing > 0 {
        entries.push(("NA".to_string(), missing));
    }
    Ok(FrequencyTable {
        column: column.to_string(),
        entries,
    })
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x}")
}

pub(crate) fn parse_number(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Parses `[lo,hi]` / `(lo,hi]` interval labels.
pub(crate) fn parse_interval(s: &str) -> Option<(f64, f64)> {
    let inner = s.strip_prefix(['[', '('])?.strip_suffix(']')?;
    let (lo, hi) = inner.split_once(',')?;
    Some((parse_number(lo)?, parse_number(hi)?))
}

/// Canonical level ordering used by every constructor that infers levels:
/// ascending numeric when every label is a number, ascending by bounds when
/// every label is an interval, lexicographic otherwise.
pub fn canonical_level_order(levels: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..levels.len()).collect();
    if let Some(nums) = levels.iter().map(|l| parse_number(l)).collect::<Option<Vec<f64>>>() {
        order.sort_by(|&a, &b| nums[a].total_cmp(&nums[b]).then_with(|| levels[a].cmp(&levels[b])));
    } else if let Some(iv) = levels.iter().map(|l| parse_interval(l)).collect::<Option<Vec<_>>>() {
        order.sort_by(|&a, &b| {
            iv[a].0
                .total_cmp(&iv[b].0)
                .then(iv[a].1.total_cmp(&iv[b].1))
                .then_with(|| levels[a].cmp(&levels[b]))
        });
    } else {
        order.sort_by(|&a, &b| levels[a].cmp(&levels[b]));
    }
    order
}

fn canonicalize(levels: Vec<String>, codes: Vec<Option<u32>>) -> (Vec<String>, Vec<Option<u32>>) {
    let order = canonical_level_order(&levels);
    let mut remap = vec![0u32; levels.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new as u32;
    }
    let levels = order.iter().map(|&i| levels[i].clone()).collect();
    let codes = codes.into_iter().map(|c| c.map(|c| remap[c as usize])).collect();
    (levels, codes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factor(name: &str, labels: &[Option<&str>]) -> Column {
        Column::factor_from_labels(name, labels).unwrap()
    }

    #[test]
    fn coerce_factor_to_numeric() {
        let ds = Dataset::new("t", vec![factor("a", &[Some("1"), Some("2"), None])]).unwrap();
        let out = coerce_type(&ds, "a", ColumnKind::Numeric).unwrap();
        assert_eq!(out.column("a").unwrap().values().unwrap(), &[Some(1.0), Some(2.0), None]);
    }

    #[test]
    fn coerce_numeric_to_factor_uses_distinct_formatted_values() {
        let col = Column::numeric("x", vec![Some(3.2), Some(3.2), Some(4.0)]).unwrap();
        let ds = Dataset::new("t", vec![col]).unwrap();
        let out = coerce_type(&ds, "x", ColumnKind::Factor).unwrap();
        let c = out.column("x").unwrap();
        assert_eq!(c.levels().unwrap(), &["3.2".to_string(), "4".to_string()]);
        assert_eq!(c.codes().unwrap(), &[Some(0), Some(0), Some(1)]);
    }

    #[test]
    fn coerce_unparseable_level_errors() {
        let ds = Dataset::new("t", vec![factor("a", &[Some("low"), Some("high")])]).unwrap();
        let err = coerce_type(&ds, "a", ColumnKind::Numeric).unwrap_err();
        assert!(matches!(err, Error::UnparseableLevel { .. }));
    }

    #[test]
    fn impute_factor_mode() {
        let ds = Dataset::new("t", vec![factor("a", &[Some("a"), Some("a"), None, Some("b")])]).unwrap();
        let out = impute_mode(&ds).unwrap();
        let c = out.column("a").unwrap();
        let labels: Vec<_> = (0..4).map(|r| c.label(r).unwrap()).collect();
        assert_eq!(labels, ["a", "a", "a", "b"]);
    }

    #[test]
    fn impute_numeric_median() {
        let col = Column::numeric("x", vec![Some(1.0), None, Some(3.0)]).unwrap();
        let out = impute_mode(&Dataset::new("t", vec![col]).unwrap()).unwrap();
        assert_eq!(out.column("x").unwrap().values().unwrap(), &[Some(1.0), Some(2.0), Some(3.0)]);
    }

    #[test]
    fn impute_tie_goes_to_smallest_label() {
        let ds = Dataset::new("t", vec![factor("a", &[Some("b"), Some("a"), None])]).unwrap();
        let out = impute_mode(&ds).unwrap();
        assert_eq!(out.column("a").unwrap().label(2).unwrap(), "a");
    }

    #[test]
    fn impute_all_missing_errors() {
        let ds = Dataset::new("t", vec![factor("a", &[None::<&str>, None])]).unwrap();
        assert!(matches!(impute_mode(&ds), Err(Error::AllMissing(_))));
    }

    #[test]
    fn impute_is_idempotent() {
        let ds = Dataset::new(
            "t",
            vec![
                factor("a", &[Some("x"), None, Some("y"), Some("y")]),
                Column::numeric("b", vec![None, Some(2.0), Some(5.0), None]).unwrap(),
            ],
        )
        .unwrap();
        let once = impute_mode(&ds).unwrap();
        assert_eq!(impute_mode(&once).unwrap(), once);
    }

    #[test]
    fn summarize_factor_and_empty() {
        let ds = Dataset::new("t", vec![factor("a", &[Some("a"), Some("a"), Some("b")])]).unwrap();
        let t = summarize(&ds, "a").unwrap();
        assert_eq!(t.entries, vec![("a".into(), 2), ("b".into(), 1)]);
        let empty = Dataset::new("e", vec![factor("a", &[] as &[Option<&str>])]).unwrap();
        assert!(summarize(&empty, "a").unwrap().entries.is_empty());
        assert!(matches!(summarize(&ds, "zz"), Err(Error::UnknownColumn(_))));
    }

    #[test]
    fn summarize_numeric_histogram_has_ten_bins() {
        let col = Column::numeric("x", (0..100).map(|i| Some(i as f64)).collect()).unwrap();
        let ds = Dataset::new("t", vec![col]).unwrap();
        let t = summarize(&ds, "x").unwrap();
        assert_eq!(t.entries.len(), 10);
        assert_eq!(t.total(), 100);
        assert!(t.entries.iter().all(|e| e.1 == 10));
    }

    #[test]
    fn dataset_rejects_duplicate_names_and_ragged_columns() {
        let a = factor("a", &[Some("x")]);
        assert!(matches!(
            Dataset::new("t", vec![a.clone(), a.clone()]),
            Err(Error::DuplicateColumn(_))
        ));
        let b = factor("b", &[Some("x"), Some("y")]);
        assert!(Dataset::new("t", vec![a, b]).is_err());
    }

    #[test]
    fn interventions_by_position() {
        let ds = Dataset::new(
            "t",
            vec![
                factor("X", &[Some("0"), Some("1"), Some("1")]),
                factor("Y", &[Some("0"), Some("1"), Some("0")]),
                factor("INT", &[Some("0"), Some("2"), Some("1")]),
            ],
        )
        .unwrap();
        let spec = InterventionSpec::by_position(&ds, "INT").unwrap();
        let ds = attach_interventions(&ds, spec).unwrap();
        assert!(ds.intervened_in_row(0).is_empty());
        assert_eq!(ds.intervened_in_row(1), &["Y".to_string()]);
        assert_eq!(ds.intervened_in_row(2), &["X".to_string()]);
        assert_eq!(ds.variable_names(), vec!["X", "Y"]);
    }

    #[test]
    fn interventions_reject_unknown_variable() {
        let ds = Dataset::new("t", vec![factor("X", &[Some("0")]), factor("INT", &[Some("1")])]).unwrap();
        let spec = InterventionSpec {
            column: "INT".into(),
            mapping: [("1".to_string(), vec!["nope".to_string()])].into_iter().collect(),
        };
        assert!(matches!(attach_interventions(&ds, spec), Err(Error::UnknownColumn(_))));
    }

    #[test]
    fn canonical_orders() {
        let lv = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let l = lv(&["10", "9", "2.5"]);
        assert_eq!(canonical_level_order(&l), vec![2, 1, 0]);
        let l = lv(&["(3.5,6]", "[1,3.5]"]);
        assert_eq!(canonical_level_order(&l), vec![1, 0]);
        let l = lv(&["b", "a"]);
        assert_eq!(canonical_level_order(&l), vec![1, 0]);
    }
}
