use std::collections::VecDeque;
use std::sync::atomic::AtomicBool;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_cancel, Problem, SearchConfig};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::graph::Dag;
use crate::score::Scorer;

/// Minimum score gain for a move to count as an improvement.
const EPS: f64 = 1e-9;
/// Deltas closer than this are treated as tied (first operator wins).
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

/// Search state: parent sets, cached local scores and single-arc toggle
/// deltas, plus descendant bitsets for O(1) cycle checks.
pub(crate) struct State<'a> {
    p: &'a Problem,
    scorer: &'a Scorer,
    n: usize,
    words: usize,
    pub parents: Vec<Vec<usize>>,
    local: Vec<f64>,
    /// `toggle[v * n + u]`: score change of node `v` when `u` joins or
    /// leaves its parent set.
    toggle: Vec<f64>,
    /// `reach[x]`: bitset of nodes reachable from `x`.
    reach: Vec<Vec<u64>>,
    zobrist: Vec<u64>,
    pub hash: u64,
}

impl<'a> State<'a> {
    pub fn new(p: &'a Problem, scorer: &'a Scorer, parents: Vec<Vec<usize>>) -> Self {
        let n = p.n();
        let words = n.div_ceil(64).max(1);
        let mut zrng = ChaCha8Rng::seed_from_u64(0x5eed_2b1d);
        let zobrist: Vec<u64> = (0..n * n).map(|_| zrng.random()).collect();
        let mut s = State {
            p,
            scorer,
            n,
            words,
            parents,
            local: vec![0.0; n],
            toggle: vec![0.0; n * n],
            reach: vec![vec![0; words]; n],
            zobrist,
            hash: 0,
        };
        for v in 0..n {
            s.refresh_node(v);
            for &u in &s.parents[v] {
                s.hash ^= s.zobrist[u * n + v];
            }
        }
        s.refresh_reach();
        s
    }

    pub fn score(&self) -> f64 {
        self.local.iter().sum()
    }

    fn has(&self, u: usize, v: usize) -> bool {
        self.parents[v].binary_search(&u).is_ok()
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        self.reach[from][to / 64] >> (to % 64) & 1 == 1
    }

    fn refresh_node(&mut self, v: usize) {
        let n = self.n;
        self.local[v] = self.scorer.local(v, &self.parents[v]);
        let mut buf = Vec::with_capacity(self.parents[v].len() + 1);
        for u in 0..n {
            if u == v {
                continue;
            }
            buf.clear();
            match self.parents[v].binary_search(&u) {
                Ok(i) => {
                    buf.extend_from_slice(&self.parents[v][..i]);
                    buf.extend_from_slice(&self.parents[v][i + 1..]);
                }
                Err(i) => {
                    buf.extend_from_slice(&self.parents[v][..i]);
                    buf.push(u);
                    buf.extend_from_slice(&self.parents[v][i..]);
                }
            }
            self.toggle[v * n + u] = self.scorer.local(v, &buf) - self.local[v];
        }
    }

    fn refresh_reach(&mut self) {
        let n = self.n;
        let order = crate::graph::topo_order(&self.parents).expect("search state stays acyclic");
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        for r in &mut self.reach {
            r.iter_mut().for_each(|w| *w = 0);
        }
        for &x in order.iter().rev() {
            let mut acc = vec![0u64; self.words];
            for &c in &children[x] {
                acc[c / 64] |= 1 << (c % 64);
                for (a, b) in acc.iter_mut().zip(&self.reach[c]) {
                    *a |= *b;
                }
            }
            self.reach[x] = acc;
        }
    }

    pub fn is_legal(&self, op: Op) -> bool {
        let c = &self.p.constraints;
        let mp = self.p.max_parents();
        match op {
            Op::Add(u, v) => {
                u != v
                    && !self.has(u, v)
                    && !self.has(v, u)
                    && !c.blacklisted(u, v)
                    && self.parents[v].len() < mp
                    && !self.reaches(v, u)
            }
            Op::Delete(u, v) => self.has(u, v) && !c.whitelisted(u, v),
            Op::Reverse(u, v) => {
                self.has(u, v)
                    && !c.whitelisted(u, v)
                    && !c.blacklisted(v, u)
                    && self.parents[u].len() < mp
                    && !self.parents_reach_other(u, v)
            }
        }
    }

    /// Whether `u` reaches `v` through something other than the arc `u → v`.
    fn parents_reach_other(&self, u: usize, v: usize) -> bool {
        (0..self.n).any(|c| c != v && self.has(u, c) && self.reaches(c, v))
    }

    pub fn delta(&self, op: Op) -> f64 {
        let n = self.n;
        match op {
            Op::Add(u, v) | Op::Delete(u, v) => self.toggle[v * n + u],
            Op::Reverse(u, v) => self.toggle[v * n + u] + self.toggle[u * n + v],
        }
    }

    pub fn hash_after(&self, op: Op) -> u64 {
        let n = self.n;
        match op {
            Op::Add(u, v) | Op::Delete(u, v) => self.hash ^ self.zobrist[u * n + v],
            Op::Reverse(u, v) => self.hash ^ self.zobrist[u * n + v] ^ self.zobrist[v * n + u],
        }
    }

    pub fn apply(&mut self, op: Op) {
        let insert = |ps: &mut Vec<usize>, x: usize| {
            if let Err(i) = ps.binary_search(&x) {
                ps.insert(i, x);
            }
        };
        match op {
            Op::Add(u, v) => {
                insert(&mut self.parents[v], u);
                self.refresh_node(v);
            }
            Op::Delete(u, v) => {
                self.parents[v].retain(|&p| p != u);
                self.refresh_node(v);
            }
            Op::Reverse(u, v) => {
                self.parents[v].retain(|&p| p != u);
                insert(&mut self.parents[u], v);
                self.refresh_node(v);
                self.refresh_node(u);
            }
        }
        self.hash = self.hash_after(op);
        self.refresh_reach();
    }

    /// Every legal operator in canonical order: adds, deletes, reverses, each
    /// by (from, to) index.
    pub fn legal_ops(&self) -> Vec<Op> {
        let n = self.n;
        let mut ops = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && self.is_legal(Op::Add(u, v)) {
                    ops.push(Op::Add(u, v));
                }
            }
        }
        for u in 0..n {
            for v in 0..n {
                if self.has(u, v) && self.is_legal(Op::Delete(u, v)) {
                    ops.push(Op::Delete(u, v));
                }
            }
        }
        for u in 0..n {
            for v in 0..n {
                if self.has(u, v) && self.is_legal(Op::Reverse(u, v)) {
                    ops.push(Op::Reverse(u, v));
                }
            }
        }
        ops
    }

    /// Best operator by delta among those accepted by `allow`.
    pub fn best_op(&self, mut allow: impl FnMut(&Self, Op) -> bool) -> Option<(Op, f64)> {
        let mut best: Option<(Op, f64)> = None;
        for op in self.legal_ops() {
            if !allow(self, op) {
                continue;
            }
            let d = self.delta(op);
            if best.is_none_or(|(_, bd)| d > bd + TIE * bd.abs().max(1.0)) {
                best = Some((op, d));
            }
        }
        best
    }
}

fn ascend(state: &mut State, cancel: Option<&AtomicBool>) -> Result<()> {
    while let Some((op, d)) = state.best_op(|_, _| true) {
        if d <= EPS {
            break;
        }
        check_cancel(cancel)?;
        state.apply(op);
    }
    Ok(())
}

pub(crate) fn hc_search(
    p: &Problem,
    scorer: &Scorer,
    start: Vec<Vec<usize>>,
    cancel: Option<&AtomicBool>,
) -> Result<Vec<Vec<usize>>> {
    let mut state = State::new(p, scorer, start);
    ascend(&mut state, cancel)?;
    let mut best = state.parents.clone();
    let mut best_score = state.score();
    if p.cfg.restarts == 0 {
        return Ok(best);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.cfg.seed);
    let perturb = 2 * p.n();
    for _ in 0..p.cfg.restarts {
        let mut s = State::new(p, scorer, best.clone());
        for _ in 0..perturb {
            let ops = s.legal_ops();
            if ops.is_empty() {
                break;
            }
            let op = ops[rng.random_range(0..ops.len())];
            s.apply(op);
        }
        ascend(&mut s, cancel)?;
        let sc = s.score();
        if sc > best_score + EPS {
            best_score = sc;
            best = s.parents.clone();
        }
    }
    Ok(best)
}

pub(crate) fn tabu_search(
    p: &Problem,
    scorer: &Scorer,
    start: Vec<Vec<usize>>,
    cancel: Option<&AtomicBool>,
) -> Result<Vec<Vec<usize>>> {
    let len = p.cfg.tabu_length.max(1);
    let mut state = State::new(p, scorer, start);
    let mut best = state.parents.clone();
    let mut best_score = state.score();
    let mut tabu: VecDeque<u64> = VecDeque::from([state.hash]);
    let mut stale = 0usize;
    while stale < len {
        check_cancel(cancel)?;
        let Some((op, _)) = state.best_op(|s, op| !tabu.contains(&s.hash_after(op))) else {
            break;
        };
        state.apply(op);
        tabu.push_back(state.hash);
        if tabu.len() > len {
            tabu.pop_front();
        }
        let sc = state.score();
        if sc > best_score + EPS {
            best_score = sc;
            best = state.parents.clone();
            stale = 0;
        } else {
            stale += 1;
        }
    }
    Ok(best)
}

/// Greedy hill climbing with optional random restarts.
pub fn hill_climb(ds: &Dataset, cfg: &SearchConfig) -> Result<Dag> {
    let p = Problem::new(ds, cfg)?;
    let scorer = p.scorer();
    let start = p.start_parents()?;
    Ok(p.dag(hc_search(&p, &scorer, start, None)?))
}

/// Tabu search; returns the best structure visited.
pub fn tabu(ds: &Dataset, cfg: &SearchConfig) -> Result<Dag> {
    let p = Problem::new(ds, cfg)?;
    let scorer = p.scorer();
    let start = p.start_parents()?;
    Ok(p.dag(tabu_search(&p, &scorer, start, None)?))
}
