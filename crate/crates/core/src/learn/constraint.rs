use std::collections::HashMap;
use std::sync::atomic::AtomicBool;

use super::{check_cancel, enforce_constraints, Problem, SearchConfig};
use crate::dataset::{Dataset, DiscreteData};
use crate::error::Result;
use crate::graph::{Dag, IndexedConstraints, Pdag};
use crate::score::ci_test_idx;

/// Conditioning sets larger than this are only searched up to size 3.
const FULL_SUBSET_LIMIT: usize = 10;

struct Tester<'a> {
    data: &'a DiscreteData,
    alpha: f64,
}

impl Tester<'_> {
    fn independent(&self, x: usize, y: usize, z: &[usize]) -> bool {
        ci_test_idx(self.data, x, y, z).p_value >= self.alpha
    }

    /// First subset of `pool` (by size, then lexicographically) separating
    /// `x` and `y`.
    fn find_sepset(&self, x: usize, y: usize, pool: &[usize]) -> Option<Vec<usize>> {
        let max = if pool.len() <= FULL_SUBSET_LIMIT { pool.len() } else { 3 };
        (0..=max).find_map(|k| combinations(pool, k).into_iter().find(|s| self.independent(x, y, s)))
    }
}

pub(crate) fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            if pool.len() - i < k - cur.len() {
                break;
            }
            cur.push(pool[i]);
            rec(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(pool, k, 0, &mut cur, &mut out);
    out
}

fn constant_vars(data: &DiscreteData) -> (Vec<bool>, Vec<String>) {
    let mut constant = vec![false; data.n_vars()];
    let mut warnings = Vec::new();
    for (v, flag) in constant.iter_mut().enumerate() {
        let col = data.column(v);
        if col.iter().all(|&c| c == col[0]) {
            *flag = true;
            warnings.push(format!("`{}` is constant and was left unconnected", data.names()[v]));
        }
    }
    (constant, warnings)
}

fn pair_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Pairs that must stay adjacent / may never be adjacent.
fn forced(c: &IndexedConstraints, a: usize, b: usize) -> bool {
    c.whitelisted(a, b) || c.whitelisted(b, a)
}

fn forbidden(c: &IndexedConstraints, a: usize, b: usize) -> bool {
    c.blacklisted(a, b) && c.blacklisted(b, a)
}

/// Orients a skeleton: whitelisted arcs, then unshielded colliders whose
/// middle node is outside the separating set, then Meek's rules, then a
/// consistent extension that respects the constraints.
fn orient(
    n: usize,
    adj: &[Vec<bool>],
    c: &IndexedConstraints,
    mut sepset: impl FnMut(usize, usize) -> Vec<usize>,
) -> Vec<Vec<usize>> {
    let mut pdag = Pdag::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if adj[a][b] {
                pdag.add_undirected(a, b);
            }
        }
    }
    for (u, v) in c.whitelist_arcs() {
        pdag.orient(u, v);
    }
    pdag.orient_colliders(|a, b, mid| {
        !sepset(a, b).contains(&mid) && !c.blacklisted(a, mid) && !c.blacklisted(b, mid)
    });
    pdag.meek_closure();
    enforce_constraints(pdag.extend(Some(c)), c)
}

pub(crate) fn gs_parents(p: &Problem, cancel: Option<&AtomicBool>) -> Result<(Vec<Vec<usize>>, Vec<String>)> {
    let data = &*p.data;
    let n = data.n_vars();
    let t = Tester {
        data,
        alpha: p.cfg.alpha,
    };
    let (constant, warnings) = constant_vars(data);
    let mut blankets: Vec<Vec<usize>> = vec![Vec::new(); n];
    for x in 0..n {
        if constant[x] {
            continue;
        }
        check_cancel(cancel)?;
        let mut mb: Vec<usize> = Vec::new();
        loop {
            let mut grew = false;
            for y in 0..n {
                if y != x && !constant[y] && !mb.contains(&y) && !t.independent(x, y, &mb) {
                    mb.push(y);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        for y in mb.clone() {
            let rest: Vec<usize> = mb.iter().copied().filter(|&z| z != y).collect();
            if t.independent(x, y, &rest) {
                mb.retain(|&z| z != y);
            }
        }
        mb.sort_unstable();
        blankets[x] = mb;
    }
    let c = &p.constraints;
    let mut adj = vec![vec![false; n]; n];
    for x in 0..n {
        for y in x + 1..n {
            let both = blankets[x].contains(&y) && blankets[y].contains(&x);
            adj[x][y] = (both || forced(c, x, y)) && !forbidden(c, x, y);
            adj[y][x] = adj[x][y];
        }
    }
    let smaller_pool = |x: usize, y: usize| -> Vec<usize> {
        let bx: Vec<usize> = blankets[x].iter().copied().filter(|&z| z != y).collect();
        let by: Vec<usize> = blankets[y].iter().copied().filter(|&z| z != x).collect();
        if by.len() < bx.len() {
            by
        } else {
            bx
        }
    };
    let mut seps: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for x in 0..n {
        check_cancel(cancel)?;
        for y in x + 1..n {
            if !adj[x][y] || forced(c, x, y) {
                continue;
            }
            if let Some(s) = t.find_sepset(x, y, &smaller_pool(x, y)) {
                adj[x][y] = false;
                adj[y][x] = false;
                seps.insert((x, y), s);
            }
        }
    }
    let parents = orient(n, &adj, c, |a, b| {
        let key = pair_key(a, b);
        if let Some(s) = seps.get(&key) {
            return s.clone();
        }
        let s = t
            .find_sepset(key.0, key.1, &smaller_pool(key.0, key.1))
            .unwrap_or_else(|| blankets[key.0].iter().copied().filter(|&z| z != key.1).collect());
        seps.insert(key, s.clone());
        s
    });
    Ok((parents, warnings))
}

pub(crate) fn pc_parents(p: &Problem, cancel: Option<&AtomicBool>) -> Result<(Vec<Vec<usize>>, Vec<String>)> {
    let data = &*p.data;
    let n = data.n_vars();
    let t = Tester {
        data,
        alpha: p.cfg.alpha,
    };
    let c = &p.constraints;
    let (constant, warnings) = constant_vars(data);
    let mut adj = vec![vec![false; n]; n];
    for x in 0..n {
        for y in 0..n {
            adj[x][y] = x != y && !forbidden(c, x, y) && (forced(c, x, y) || !(constant[x] || constant[y]));
        }
    }
    let mut seps: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (x, y) in (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))) {
        if !adj[x][y] {
            seps.insert((x, y), Vec::new());
        }
    }
    let mut level = 0usize;
    loop {
        check_cancel(cancel)?;
        let frozen: Vec<Vec<usize>> = (0..n).map(|x| (0..n).filter(|&y| adj[x][y]).collect()).collect();
        let mut tested = false;
        for x in 0..n {
            for &y in &frozen[x] {
                if !adj[x][y] || forced(c, x, y) {
                    continue;
                }
                let pool: Vec<usize> = frozen[x].iter().copied().filter(|&z| z != y).collect();
                if pool.len() < level {
                    continue;
                }
                tested = true;
                if let Some(s) = combinations(&pool, level).into_iter().find(|s| t.independent(x, y, s)) {
                    adj[x][y] = false;
                    adj[y][x] = false;
                    seps.insert(pair_key(x, y), s);
                }
            }
        }
        if !tested {
            break;
        }
        level += 1;
    }
    let parents = orient(n, &adj, c, |a, b| seps.get(&pair_key(a, b)).cloned().unwrap_or_default());
    Ok((parents, warnings))
}

/// Grow-Shrink Markov-blanket learner, returned as a consistent DAG.
pub fn grow_shrink(ds: &Dataset, cfg: &SearchConfig) -> Result<Dag> {
    let p = Problem::new(ds, cfg)?;
    Ok(p.dag(gs_parents(&p, None)?.0))
}

/// PC with order-independent (stable) skeleton discovery.
pub fn pc_stable(ds: &Dataset, cfg: &SearchConfig) -> Result<Dag> {
    let p = Problem::new(ds, cfg)?;
    Ok(p.dag(pc_parents(&p, None)?.0))
}
