use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dataset::{Dataset, DiscreteData};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiTestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// G² test of `x ⟂ y | z`. Degrees of freedom are `(r_x − 1)(r_y − 1)`
/// per non-empty stratum of `z`; zero degrees of freedom gives p = 1.
pub fn ci_test_idx(data: &DiscreteData, x: usize, y: usize, z: &[usize]) -> CiTestResult {
    let rx = data.cardinality(x);
    let ry = data.cardinality(y);
    let cx = data.column(x);
    let cy = data.column(y);
    let (zidx, _) = data.config_indices(z);
    let mut strata: HashMap<u64, Vec<f64>> = HashMap::new();
    for row in 0..data.n_rows() {
        let t = strata.entry(zidx[row]).or_insert_with(|| vec![0.0; rx * ry]);
        t[cx[row] as usize * ry + cy[row] as usize] += 1.0;
    }
    let mut g2 = 0.0;
    let mut df = 0.0;
    for table in strata.values() {
        let mut row_tot = vec![0.0; rx];
        let mut col_tot = vec![0.0; ry];
        let mut n = 0.0;
        for i in 0..rx {
            for j in 0..ry {
                let c = table[i * ry + j];
                row_tot[i] += c;
                col_tot[j] += c;
                n += c;
            }
        }
        for i in 0..rx {
            for j in 0..ry {
                let c = table[i * ry + j];
                if c > 0.0 {
                    g2 += c * (c * n / (row_tot[i] * col_tot[j])).ln();
                }
            }
        }
        df += ((rx - 1) * (ry - 1)) as f64;
    }
    let statistic = (2.0 * g2).max(0.0);
    let p_value = if df <= 0.0 {
        1.0
    } else {
        ChiSquared::new(df).map(|d| d.sf(statistic)).unwrap_or(1.0)
    };
    CiTestResult { statistic, df, p_value }
}

pub fn ci_test(ds: &Dataset, x: &str, y: &str, z: &[&str]) -> Result<CiTestResult> {
    let data = DiscreteData::from_dataset(ds)?;
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let xi = data.index_of(x)?;
    let yi = data.index_of(y)?;
    let zi = z.iter().map(|v| data.index_of(v)).collect::<Result<Vec<_>>>()?;
    if xi == yi || zi.contains(&xi) || zi.contains(&yi) {
        return Err(Error::invalid("x, y and the conditioning set must be disjoint"));
    }
    Ok(ci_test_idx(&data, xi, yi, &zi))
}
