//! Numeric → factor discretization.
//!
//! Every method produces a strictly increasing break vector
//! `b_0 = min < b_1 < … < b_k = max`; a value `v` falls in bin `i` when
//! `b_i < v <= b_{i+1}` (the first bin also holds `b_0`). Labels follow the
//! `[lo,hi]`, `(lo,hi]`, … convention with 3 significant digits.

use serde::{Deserialize, Serialize};

use super::{Column, ColumnData, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscretizationMethod {
    Quantile,
    Interval,
    Frequency,
    Kmeans,
    Hartemink,
    Hybrid,
}

impl std::str::FromStr for DiscretizationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "quantile" => Self::Quantile,
            "interval" => Self::Interval,
            "frequency" => Self::Frequency,
            "kmeans" | "k-means" => Self::Kmeans,
            "hartemink" => Self::Hartemink,
            "hybrid" => Self::Hybrid,
            other => return Err(Error::invalid(format!("unknown discretization method `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationPlan {
    pub method: DiscretizationMethod,
    pub bins: usize,
    /// Final level count for Hartemink.
    pub hartemink_breaks: usize,
    /// Initial (quantile) level count for Hartemink.
    pub hartemink_ibreaks: usize,
}

impl DiscretizationPlan {
    pub fn new(method: DiscretizationMethod, bins: usize) -> Self {
        DiscretizationPlan {
            method,
            bins,
            hartemink_breaks: bins,
            hartemink_ibreaks: (bins * 4).max(bins),
        }
    }

    pub fn hartemink(breaks: usize, ibreaks: usize) -> Self {
        DiscretizationPlan {
            method: DiscretizationMethod::Hartemink,
            bins: breaks,
            hartemink_breaks: breaks,
            hartemink_ibreaks: ibreaks,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::invalid("discretization needs at least 2 bins"));
        }
        if matches!(self.method, DiscretizationMethod::Hartemink | DiscretizationMethod::Hybrid)
            && !(self.hartemink_ibreaks >= self.hartemink_breaks && self.hartemink_breaks >= 2)
        {
            return Err(Error::invalid("hartemink requires ibreaks >= breaks >= 2"));
        }
        Ok(())
    }
}

/// Formats like C's `%.{digits}g`, without trailing zeros.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Interval labels for a break vector, widening the digit count only when
/// 3 significant digits would make two labels collide.
pub(crate) fn interval_labels(breaks: &[f64]) -> Vec<String> {
    for digits in 3..=17 {
        let labels: Vec<String> = breaks
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (open, lo, hi) = (
                    if i == 0 { '[' } else { '(' },
                    format_significant(w[0], digits),
                    format_significant(w[1], digits),
                );
                format!("{open}{lo},{hi}]")
            })
            .collect();
        let mut uniq = labels.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() == labels.len() {
            return labels;
        }
    }
    unreachable!("17 significant digits distinguish distinct f64 breaks")
}

pub(crate) fn assign_bin(v: f64, breaks: &[f64]) -> usize {
    let k = breaks.len() - 1;
    // first i with v <= breaks[i+1]
    let inner = &breaks[1..k];
    inner.partition_point(|&b| b < v)
}

/// R type-7 quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

fn strictly_increasing(b: &[f64]) -> bool {
    b.windows(2).all(|w| w[0] < w[1])
}

fn distinct_count(sorted: &[f64]) -> usize {
    let mut n = 0;
    for (i, x) in sorted.iter().enumerate() {
        if i == 0 || *x != sorted[i - 1] {
            n += 1;
        }
    }
    n
}

pub(crate) fn quantile_breaks(sorted: &[f64], bins: usize) -> Result<Vec<f64>, String> {
    if distinct_count(sorted) < bins {
        return Err(format!("{bins} bins exceed the distinct value count"));
    }
    let breaks: Vec<f64> = (0..=bins).map(|i| quantile_sorted(sorted, i as f64 / bins as f64)).collect();
    if !strictly_increasing(&breaks) {
        return Err("tied quantiles give fewer distinct cut points than bins".into());
    }
    Ok(breaks)
}

fn interval_breaks(sorted: &[f64], bins: usize) -> Result<Vec<f64>, String> {
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let width = (hi - lo) / bins as f64;
    let breaks: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    if !strictly_increasing(&breaks) {
        return Err("range too narrow for the requested bins".into());
    }
    Ok(breaks)
}

fn frequency_breaks(sorted: &[f64], bins: usize) -> Result<Vec<f64>, String> {
    let n = sorted.len();
    if distinct_count(sorted) < bins {
        return Err(format!("{bins} bins exceed the distinct value count"));
    }
    let mut breaks = vec![sorted[0]];
    for i in 1..bins {
        let pos = i * n / bins;
        if pos == 0 || sorted[pos - 1] == sorted[pos] {
            return Err("ties straddle an equal-count boundary".into());
        }
        breaks.push((sorted[pos - 1] + sorted[pos]) / 2.0);
    }
    breaks.push(sorted[n - 1]);
    if !strictly_increasing(&breaks) {
        return Err("equal-count boundaries collapse".into());
    }
    Ok(breaks)
}

fn bin_means(sorted: &[f64], breaks: &[f64]) -> Vec<Option<f64>> {
    let k = breaks.len() - 1;
    let mut sum = vec![0.0; k];
    let mut cnt = vec![0usize; k];
    for &x in sorted {
        let b = assign_bin(x, breaks);
        sum[b] += x;
        cnt[b] += 1;
    }
    (0..k).map(|i| (cnt[i] > 0).then(|| sum[i] / cnt[i] as f64)).collect()
}

/// Within-cluster sum of squares of the partition induced by `breaks`.
#[cfg(test)]
fn wcss(values: &[f64], breaks: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let means = bin_means(&sorted, breaks);
    sorted
        .iter()
        .map(|&x| {
            let m = means[assign_bin(x, breaks)].unwrap();
            (x - m) * (x - m)
        })
        .sum()
}

fn kmeans_breaks(sorted: &[f64], bins: usize) -> Result<Vec<f64>, String> {
    if distinct_count(sorted) < bins {
        return Err(format!("{bins} clusters exceed the distinct value count"));
    }
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let mut centers: Vec<f64> = match quantile_breaks(sorted, bins) {
        Ok(qb) => bin_means(sorted, &qb).into_iter().flatten().collect(),
        Err(_) => Vec::new(),
    };
    if centers.len() != bins {
        let mut distinct = sorted.to_vec();
        distinct.dedup();
        centers = (0..bins)
            .map(|i| distinct[i * (distinct.len() - 1) / (bins - 1)])
            .collect();
    }
    let to_breaks = |c: &[f64]| -> Vec<f64> {
        let mut b = vec![lo];
        b.extend(c.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        b.push(hi);
        b
    };
    let mut breaks = to_breaks(&centers);
    for _ in 0..100 {
        if !strictly_increasing(&breaks) {
            return Err("k-means centers collapsed".into());
        }
        let means = bin_means(sorted, &breaks);
        if means.iter().any(Option::is_none) {
            return Err("k-means produced an empty cluster".into());
        }
        let next: Vec<f64> = means.into_iter().flatten().collect();
        let next_breaks = to_breaks(&next);
        if next_breaks == breaks {
            break;
        }
        breaks = next_breaks;
    }
    if !strictly_increasing(&breaks) {
        return Err("k-means centers collapsed".into());
    }
    Ok(breaks)
}

fn simple_breaks(method: DiscretizationMethod, sorted: &[f64], bins: usize) -> Result<Vec<f64>, String> {
    match method {
        DiscretizationMethod::Quantile => quantile_breaks(sorted, bins),
        DiscretizationMethod::Interval => interval_breaks(sorted, bins),
        DiscretizationMethod::Frequency => frequency_breaks(sorted, bins),
        DiscretizationMethod::Kmeans => kmeans_breaks(sorted, bins),
        _ => unreachable!(),
    }
}

fn numeric_values<'a>(ds: &'a Dataset, name: &str) -> Result<&'a [Option<f64>]> {
    ds.column(name)?
        .values()
        .ok_or_else(|| Error::NotNumeric(name.to_string()))
}

fn sorted_present(values: &[Option<f64>]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().flatten().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn to_factor(name: &str, values: &[Option<f64>], breaks: &[f64]) -> Result<Column> {
    let levels = interval_labels(breaks);
    let codes = values.iter().map(|v| v.map(|x| assign_bin(x, breaks) as u32)).collect();
    Column::factor(name, levels, codes)
}

/// Converts the `targets` numeric columns into interval-labelled factors.
pub fn discretize(ds: &Dataset, plan: &DiscretizationPlan, targets: &[&str]) -> Result<Dataset> {
    plan.validate()?;
    let mut breaks: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut hartemink_set: Vec<usize> = Vec::new();

    for &name in targets {
        let idx = ds.column_index(name)?;
        let sorted = sorted_present(numeric_values(ds, name)?);
        if sorted.is_empty() {
            return Err(Error::AllMissing(name.to_string()));
        }
        if distinct_count(&sorted) < 2 {
            return Err(Error::Degenerate(name.to_string()));
        }
        let fail = |reason: String| Error::Discretization {
            column: name.to_string(),
            reason,
        };
        match plan.method {
            DiscretizationMethod::Hartemink => {
                quantile_breaks(&sorted, plan.hartemink_ibreaks).map_err(fail)?;
                hartemink_set.push(idx);
            }
            DiscretizationMethod::Hybrid => {
                if quantile_breaks(&sorted, plan.hartemink_ibreaks).is_ok() {
                    hartemink_set.push(idx);
                } else {
                    let chosen = [
                        DiscretizationMethod::Kmeans,
                        DiscretizationMethod::Quantile,
                        DiscretizationMethod::Interval,
                    ]
                    .into_iter()
                    .find_map(|m| simple_breaks(m, &sorted, plan.bins).ok())
                    .ok_or_else(|| fail("every fallback method failed".into()))?;
                    breaks.push((idx, chosen));
                }
            }
            m => breaks.push((idx, simple_breaks(m, &sorted, plan.bins).map_err(fail)?)),
        }
    }

    let mut out = ds.clone();
    for (idx, b) in breaks {
        let col = &ds.columns[idx];
        out.columns[idx] = to_factor(col.name(), col.values().unwrap(), &b)?;
    }
    if !hartemink_set.is_empty() {
        let merged = hartemink(&out, &hartemink_set, plan.hartemink_breaks, plan.hartemink_ibreaks)?;
        for (idx, b) in hartemink_set.iter().zip(merged) {
            let col = &ds.columns[*idx];
            out.columns[*idx] = to_factor(col.name(), col.values().unwrap(), &b)?;
        }
    }
    Ok(out)
}

/// Plug-in mutual information (nats) of a joint count table.
pub(crate) fn mutual_information(counts: &[f64], rows: usize, cols: usize) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut rs = vec![0.0; rows];
    let mut cs = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            rs[r] += counts[r * cols + c];
            cs[c] += counts[r * cols + c];
        }
    }
    let mut mi = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let n = counts[r * cols + c];
            if n > 0.0 {
                mi += n / total * (n * total / (rs[r] * cs[c])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Hartemink's information-preserving discretization: start from an
/// `ibreaks`-level quantile split of each target and repeatedly merge the
/// adjacent pair of intervals whose fusion keeps the most total mutual
/// information with every other variable. Targets are reduced one level per
/// round, in column order, until each has `nbreaks` levels.
fn hartemink(ds: &Dataset, targets: &[usize], nbreaks: usize, ibreaks: usize) -> Result<Vec<Vec<f64>>> {
    let n = ds.n_rows;
    let skip = ds.interventions.as_ref().map(|s| s.column.as_str());
    let mut breaks: Vec<Vec<f64>> = Vec::new();
    let mut codes: Vec<Vec<Option<u32>>> = Vec::new();
    for &t in targets {
        let values = ds.columns[t].values().unwrap();
        let b = quantile_breaks(&sorted_present(values), ibreaks).map_err(|reason| Error::Discretization {
            column: ds.columns[t].name().to_string(),
            reason,
        })?;
        codes.push(values.iter().map(|v| v.map(|x| assign_bin(x, &b) as u32)).collect());
        breaks.push(b);
    }
    // other factor variables (targets are still numeric in `ds`)
    let others: Vec<(usize, &[Option<u32>])> = ds
        .columns
        .iter()
        .filter(|c| Some(c.name()) != skip)
        .filter_map(|c| match &c.data {
            ColumnData::Factor { levels, codes } => Some((levels.len(), codes.as_slice())),
            _ => None,
        })
        .collect();

    loop {
        let mut changed = false;
        for ti in 0..targets.len() {
            let levels = breaks[ti].len() - 1;
            if levels <= nbreaks {
                continue;
            }
            // joint tables of this target against every other variable
            let mut tables: Vec<(usize, Vec<f64>)> = Vec::new();
            let partners = others
                .iter()
                .copied()
                .chain((0..targets.len()).filter(|&o| o != ti).map(|o| (breaks[o].len() - 1, codes[o].as_slice())));
            for (card, other) in partners {
                let mut table = vec![0.0; levels * card];
                for r in 0..n {
                    if let (Some(a), Some(b)) = (codes[ti][r], other[r]) {
                        table[a as usize * card + b as usize] += 1.0;
                    }
                }
                tables.push((card, table));
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..levels - 1 {
                let total: f64 = tables
                    .iter()
                    .map(|(card, table)| {
                        let merged = merge_rows(table, levels, *card, j);
                        mutual_information(&merged, levels - 1, *card)
                    })
                    .sum();
                if best.is_none_or(|(_, b)| total > b + 1e-12) {
                    best = Some((j, total));
                }
            }
            let (j, _) = best.unwrap();
            breaks[ti].remove(j + 1);
            for c in codes[ti].iter_mut().flatten() {
                if *c as usize > j {
                    *c -= 1;
                }
            }
            changed = true;
        }
        if !changed {
            break;
        }
    }
    Ok(breaks)
}

/// Merges rows `j` and `j+1` of a `rows × cols` table.
fn merge_rows(table: &[f64], rows: usize, cols: usize, j: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((rows - 1) * cols);
    for r in 0..rows {
        if r == j + 1 {
            continue;
        }
        for c in 0..cols {
            let mut v = table[r * cols + c];
            if r == j {
                v += table[(j + 1) * cols + c];
            }
            out.push(v);
        }
    }
    out
}
