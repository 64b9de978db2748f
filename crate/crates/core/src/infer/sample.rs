use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Column, Dataset};
use crate::error::Result;
use crate::fit::FittedBn;

pub(crate) fn draw<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left u above the cumulative total: last level with mass
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// Ancestral sampling of `n` rows as level codes per node.
fn sample_codes<R: Rng>(bn: &FittedBn, n: usize, rng: &mut R) -> Vec<Vec<u16>> {
    let order = bn.dag.topological_order().expect("fitted graph is acyclic");
    let p = bn.len();
    let mut cols = vec![vec![0u16; n]; p];
    let mut assignment = vec![0usize; p];
    for row in 0..n {
        for &v in &order {
            let level = draw(bn.cpts[v].row(bn.config_of(v, &assignment)), rng);
            assignment[v] = level;
            cols[v][row] = level as u16;
        }
    }
    cols
}

/// `n` ancestral samples as a factor-typed dataset; deterministic per seed.
pub fn sample(bn: &FittedBn, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = sample_codes(bn, n, &mut rng);
    let columns = cols
        .into_iter()
        .enumerate()
        .map(|(v, c)| {
            Column::factor(
                bn.nodes()[v].clone(),
                bn.levels[v].clone(),
                c.into_iter().map(|x| Some(x as u32)).collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new("sample", columns)
}
