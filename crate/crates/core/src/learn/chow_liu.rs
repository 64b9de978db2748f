use std::collections::VecDeque;

use super::{enforce_constraints, Problem, SearchConfig};
use crate::dataset::{Dataset, DiscreteData};
use crate::error::Result;
use crate::graph::Dag;

/// Empirical mutual information (nats) between two variables.
pub(crate) fn pair_mi(data: &DiscreteData, a: usize, b: usize) -> f64 {
    let (ra, rb) = (data.cardinality(a), data.cardinality(b));
    let mut counts = vec![0.0; ra * rb];
    for (&x, &y) in data.column(a).iter().zip(data.column(b)) {
        counts[x as usize * rb + y as usize] += 1.0;
    }
    crate::dataset::mutual_information(&counts, ra, rb)
}

pub(crate) fn chow_liu_parents(p: &Problem) -> Vec<Vec<usize>> {
    let data = &*p.data;
    let c = &p.constraints;
    let n = data.n_vars();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if !(c.blacklisted(a, b) && c.blacklisted(b, a)) {
                pairs.push((pair_mi(data, a, b), a, b));
            }
        }
    }
    // stable sort keeps index order among equal weights
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while uf[r] != r {
            r = uf[r];
        }
        uf[x] = r;
        r
    }
    let mut tree: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (_, a, b) in pairs {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra != rb {
            uf[ra] = rb;
            tree[a].push(b);
            tree[b].push(a);
        }
    }
    // orient away from the first node of each component
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &y in &tree[x] {
                if !seen[y] {
                    seen[y] = true;
                    parents[y].push(x);
                    queue.push_back(y);
                }
            }
        }
    }
    enforce_constraints(parents, c)
}

/// Maximum mutual-information spanning tree rooted at the first variable.
pub fn chow_liu(ds: &Dataset) -> Result<Dag> {
    chow_liu_with(ds, &SearchConfig::new(super::Algorithm::ChowLiu))
}

/// Chow–Liu honoring the arc constraints in `cfg`.
pub fn chow_liu_with(ds: &Dataset, cfg: &SearchConfig) -> Result<Dag> {
    let p = Problem::new(ds, cfg)?;
    Ok(p.dag(chow_liu_parents(&p)))
}
