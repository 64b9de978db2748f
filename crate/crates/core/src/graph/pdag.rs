use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{topo_order, Arc, Dag, IndexedConstraints};

/// Partially directed graph as an adjacency mark matrix: `m[u][v] && m[v][u]`
/// is an undirected edge `u − v`, `m[u][v]` alone is the arc `u → v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pdag {
    n: usize,
    m: Vec<bool>,
}

impl Pdag {
    pub fn new(n: usize) -> Self {
        Pdag { n, m: vec![false; n * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn mark(&self, u: usize, v: usize) -> bool {
        self.m[u * self.n + v]
    }

    fn set(&mut self, u: usize, v: usize, on: bool) {
        self.m[u * self.n + v] = on;
    }

    pub fn add_undirected(&mut self, u: usize, v: usize) {
        self.set(u, v, true);
        self.set(v, u, true);
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        self.set(u, v, false);
        self.set(v, u, false);
    }

    pub fn orient(&mut self, u: usize, v: usize) {
        self.set(u, v, true);
        self.set(v, u, false);
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.mark(u, v) || self.mark(v, u)
    }

    pub fn undirected(&self, u: usize, v: usize) -> bool {
        self.mark(u, v) && self.mark(v, u)
    }

    pub fn directed(&self, u: usize, v: usize) -> bool {
        self.mark(u, v) && !self.mark(v, u)
    }

    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        (0..self.n).filter(|&v| v != u && self.adjacent(u, v)).collect()
    }

    pub fn from_dag(dag: &Dag) -> Self {
        let mut p = Pdag::new(dag.len());
        for (u, v) in dag.arc_indices() {
            p.orient(u, v);
        }
        p
    }

    /// Orients every unshielded collider `a − c − b` (a, b non-adjacent) for
    /// which `is_collider(a, b, c)` holds. Edges already pointing the other
    /// way are left as they are.
    pub fn orient_colliders(&mut self, mut is_collider: impl FnMut(usize, usize, usize) -> bool) {
        let n = self.n;
        let mut to_orient = Vec::new();
        for c in 0..n {
            let nb = self.neighbors(c);
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if !self.adjacent(a, b) && is_collider(a, b, c) {
                        to_orient.push((a, c));
                        to_orient.push((b, c));
                    }
                }
            }
        }
        for (a, c) in to_orient {
            if self.undirected(a, c) {
                self.orient(a, c);
            }
        }
    }

    /// Applies Meek's rules R1–R3 until nothing changes.
    pub fn meek_closure(&mut self) {
        let n = self.n;
        loop {
            let mut changed = false;
            for a in 0..n {
                for b in 0..n {
                    if a == b || !self.undirected(a, b) {
                        continue;
                    }
                    if self.meek_orients(a, b) {
                        self.orient(a, b);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Whether one of R1–R3 orients the undirected edge `a − b` as `a → b`.
    fn meek_orients(&self, a: usize, b: usize) -> bool {
        let n = self.n;
        // R1: c → a − b, c and b non-adjacent
        if (0..n).any(|c| c != b && self.directed(c, a) && !self.adjacent(c, b)) {
            return true;
        }
        // R2: a → c → b
        if (0..n).any(|c| self.directed(a, c) && self.directed(c, b)) {
            return true;
        }
        // R3: a − c → b, a − d → b, c and d non-adjacent
        let cs: Vec<usize> = (0..n)
            .filter(|&c| c != a && c != b && self.undirected(a, c) && self.directed(c, b))
            .collect();
        for (i, &c) in cs.iter().enumerate() {
            for &d in &cs[i + 1..] {
                if !self.adjacent(c, d) {
                    return true;
                }
            }
        }
        false
    }

    /// Consistent DAG extension (Dor–Tarsi): repeatedly remove a sink whose
    /// undirected neighbors form a clique with its other neighbors, pointing
    /// those edges into it. Lowest index wins; sinks whose orientation avoids
    /// blacklisted arcs are preferred. When no extension exists, remaining
    /// edges are oriented by node order wherever that keeps the graph
    /// acyclic.
    pub(crate) fn extend(&self, constraints: Option<&IndexedConstraints>) -> Vec<Vec<usize>> {
        let n = self.n;
        let mut g = self.clone();
        let mut alive = vec![true; n];
        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
        for u in 0..n {
            for v in 0..n {
                if self.directed(u, v) {
                    parents[v].push(u);
                }
            }
        }
        let black = |u: usize, v: usize| constraints.is_some_and(|c| c.blacklisted(u, v));
        let mut remaining = n;
        while remaining > 0 {
            let candidates: Vec<usize> = (0..n)
                .filter(|&x| alive[x])
                .filter(|&x| !(0..n).any(|y| alive[y] && g.directed(x, y)))
                .filter(|&x| {
                    let nb: Vec<usize> = (0..n).filter(|&y| alive[y] && y != x && g.adjacent(x, y)).collect();
                    nb.iter()
                        .filter(|&&y| g.undirected(x, y))
                        .all(|&y| nb.iter().all(|&z| z == y || g.adjacent(y, z)))
                })
                .collect();
            let pick = candidates
                .iter()
                .copied()
                .find(|&x| (0..n).all(|y| !(alive[y] && g.undirected(x, y)) || !black(y, x)))
                .or_else(|| candidates.first().copied());
            let Some(x) = pick else { break };
            for y in 0..n {
                if alive[y] && y != x && g.undirected(x, y) {
                    parents[x].push(y);
                    g.orient(y, x);
                }
            }
            alive[x] = false;
            remaining -= 1;
        }
        if remaining > 0 {
            // no consistent extension: orient leftovers greedily
            for u in 0..n {
                for v in u + 1..n {
                    if !(alive[u] && alive[v] && g.undirected(u, v)) {
                        continue;
                    }
                    let prefer_uv = !black(u, v) || black(v, u);
                    let (first, second) = if prefer_uv { ((u, v), (v, u)) } else { ((v, u), (u, v)) };
                    parents[first.1].push(first.0);
                    if topo_order(&parents).is_none() {
                        parents[first.1].pop();
                        parents[second.1].push(second.0);
                        if topo_order(&parents).is_none() {
                            parents[second.1].pop();
                            continue;
                        }
                        g.orient(second.0, second.1);
                    } else {
                        g.orient(first.0, first.1);
                    }
                }
            }
            // directed arcs from the input can still close cycles; drop them
            while let Some(cycle_arc) = find_cycle_arc(&parents) {
                parents[cycle_arc.1].retain(|&p| p != cycle_arc.0);
            }
        }
        for p in &mut parents {
            p.sort_unstable();
            p.dedup();
        }
        parents
    }
}

fn find_cycle_arc(parents: &[Vec<usize>]) -> Option<(usize, usize)> {
    if topo_order(parents).is_some() {
        return None;
    }
    // any arc on a cycle: the last-added parent of a node on a cycle
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut removed = vec![false; n];
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..n {
            if !removed[v] && indeg[v] == 0 {
                removed[v] = true;
                changed = true;
                for (c, ps) in parents.iter().enumerate() {
                    if ps.contains(&v) {
                        indeg[c] -= 1;
                    }
                }
            }
        }
    }
    (0..n)
        .filter(|&v| !removed[v])
        .find_map(|v| parents[v].iter().rev().find(|&&p| !removed[p]).map(|&p| (p, v)))
}

/// Completed partially directed acyclic graph: the Markov equivalence class
/// of a DAG.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cpdag {
    pub nodes: Vec<String>,
    /// Compelled arcs.
    pub directed: BTreeSet<Arc>,
    /// Reversible edges, each stored once with endpoints in name order.
    pub undirected: BTreeSet<Arc>,
}

impl Cpdag {
    fn from_pdag(nodes: &[String], p: &Pdag) -> Self {
        let mut directed = BTreeSet::new();
        let mut undirected = BTreeSet::new();
        for u in 0..p.n {
            for v in 0..p.n {
                if p.directed(u, v) {
                    directed.insert((nodes[u].clone(), nodes[v].clone()));
                } else if u < v && p.undirected(u, v) {
                    let (a, b) = (nodes[u].clone(), nodes[v].clone());
                    undirected.insert(if a <= b { (a, b) } else { (b, a) });
                }
            }
        }
        Cpdag {
            nodes: nodes.to_vec(),
            directed,
            undirected,
        }
    }

    fn to_pdag(&self) -> Pdag {
        let idx = |s: &str| self.nodes.iter().position(|n| n == s).expect("cpdag node");
        let mut p = Pdag::new(self.nodes.len());
        for (a, b) in &self.directed {
            p.orient(idx(a), idx(b));
        }
        for (a, b) in &self.undirected {
            p.add_undirected(idx(a), idx(b));
        }
        p
    }

    /// A DAG in the class.
    pub fn extension(&self) -> Dag {
        let parents = self.to_pdag().extend(None);
        Dag::from_parents(self.nodes.clone(), parents)
    }

    /// Skeleton as sorted unordered name pairs.
    pub fn skeleton(&self) -> BTreeSet<Arc> {
        self.directed
            .iter()
            .map(|(a, b)| if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) })
            .chain(self.undirected.iter().cloned())
            .collect()
    }
}

/// Equivalence-class representative: v-structures stay directed, the rest of
/// the skeleton is undirected, then Meek's rules are closed over.
pub fn to_cpdag(dag: &Dag) -> Cpdag {
    let n = dag.len();
    let mut p = Pdag::new(n);
    for (u, v) in dag.arc_indices() {
        p.add_undirected(u, v);
    }
    let mut colliders = Vec::new();
    for c in 0..n {
        let ps = dag.parents(c);
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                if !dag.adjacent_idx(a, b) {
                    colliders.push((a, c));
                    colliders.push((b, c));
                }
            }
        }
    }
    for (a, c) in colliders {
        p.orient(a, c);
    }
    p.meek_closure();
    Cpdag::from_pdag(dag.nodes(), &p)
}
