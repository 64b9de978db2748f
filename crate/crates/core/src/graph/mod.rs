//! Directed acyclic graphs over named variables, arc constraints, structural
//! edits, CPDAG conversion and edge-list interchange.

mod pdag;

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pdag::{to_cpdag, Cpdag, Pdag};

pub type Arc = (String, String);

/// A DAG with a fixed node order. Parent lists are kept sorted by node index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: Vec<String>,
    parents: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct DagDoc {
    nodes: Vec<String>,
    arcs: Vec<Arc>,
}

impl Serialize for Dag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DagDoc {
            nodes: self.nodes.clone(),
            arcs: self.arcs(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = DagDoc::deserialize(d)?;
        Dag::from_arcs(doc.nodes, &doc.arcs).map_err(serde::de::Error::custom)
    }
}

impl Dag {
    pub fn empty(nodes: Vec<String>) -> Self {
        let n = nodes.len();
        Dag {
            nodes,
            parents: vec![Vec::new(); n],
        }
    }

    pub fn from_arcs(nodes: Vec<String>, arcs: &[Arc]) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for n in &nodes {
            if !seen.insert(n) {
                return Err(Error::invalid(format!("duplicate node `{n}`")));
            }
        }
        let mut g = Dag::empty(nodes);
        for (a, b) in arcs {
            let (u, v) = (g.index_of(a)?, g.index_of(b)?);
            if u == v {
                return Err(Error::Cycle(vec![a.clone()]));
            }
            if !g.parents[v].contains(&u) {
                g.parents[v].push(u);
            }
        }
        for p in &mut g.parents {
            p.sort_unstable();
        }
        if let Some(cycle) = g.find_cycle() {
            return Err(Error::Cycle(cycle.into_iter().map(|i| g.nodes[i].clone()).collect()));
        }
        Ok(g)
    }

    /// Builds from index arcs; the caller guarantees acyclicity.
    pub(crate) fn from_parents(nodes: Vec<String>, mut parents: Vec<Vec<usize>>) -> Self {
        for p in &mut parents {
            p.sort_unstable();
            p.dedup();
        }
        let g = Dag { nodes, parents };
        debug_assert!(g.find_cycle().is_none());
        g
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn parent_sets(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn parent_names(&self, name: &str) -> Result<Vec<&str>> {
        let v = self.index_of(name)?;
        Ok(self.parents[v].iter().map(|&p| self.nodes[p].as_str()).collect())
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.parents[c].contains(&v)).collect()
    }

    pub fn has_arc_idx(&self, u: usize, v: usize) -> bool {
        self.parents[v].binary_search(&u).is_ok()
    }

    pub fn has_arc(&self, from: &str, to: &str) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Ok(u), Ok(v)) => self.has_arc_idx(u, v),
            _ => false,
        }
    }

    pub fn adjacent_idx(&self, u: usize, v: usize) -> bool {
        self.has_arc_idx(u, v) || self.has_arc_idx(v, u)
    }

    pub fn n_arcs(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Arcs as index pairs ordered by (from, to).
    pub fn arc_indices(&self) -> Vec<(usize, usize)> {
        let mut arcs: Vec<(usize, usize)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(v, ps)| ps.iter().map(move |&u| (u, v)))
            .collect();
        arcs.sort_unstable();
        arcs
    }

    /// Arcs by name, canonically ordered by (from, to) names.
    pub fn arcs(&self) -> Vec<Arc> {
        let mut arcs: Vec<Arc> = self
            .arc_indices()
            .into_iter()
            .map(|(u, v)| (self.nodes[u].clone(), self.nodes[v].clone()))
            .collect();
        arcs.sort();
        arcs
    }

    pub fn arc_set(&self) -> BTreeSet<Arc> {
        self.arcs().into_iter().collect()
    }

    /// Kahn's algorithm; ties broken by node index. `None` when cyclic.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        topo_order(&self.parents)
    }

    /// Directed path `from ⇝ to` as node indices (inclusive), if any.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let n = self.len();
        let mut children = vec![Vec::new(); n];
        for (v, ps) in self.parents.iter().enumerate() {
            for &u in ps {
                children[u].push(v);
            }
        }
        let mut prev = vec![usize::MAX; n];
        let mut stack = vec![from];
        prev[from] = from;
        while let Some(x) = stack.pop() {
            if x == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &c in children[x].iter().rev() {
                if prev[c] == usize::MAX {
                    prev[c] = x;
                    stack.push(c);
                }
            }
        }
        None
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        if self.topological_order().is_some() {
            return None;
        }
        for (v, ps) in self.parents.iter().enumerate() {
            for &u in ps {
                if let Some(path) = self.path(v, u) {
                    return Some(path);
                }
            }
        }
        None
    }

    fn names_of(&self, idx: &[usize]) -> Vec<String> {
        idx.iter().map(|&i| self.nodes[i].clone()).collect()
    }

    pub fn add_arc(&self, from: &str, to: &str) -> Result<Dag> {
        let (u, v) = (self.index_of(from)?, self.index_of(to)?);
        if u == v {
            return Err(Error::Cycle(vec![from.to_string()]));
        }
        if self.has_arc_idx(u, v) {
            return Ok(self.clone());
        }
        if let Some(path) = self.path(v, u) {
            return Err(Error::Cycle(self.names_of(&path)));
        }
        let mut g = self.clone();
        g.parents[v].push(u);
        g.parents[v].sort_unstable();
        Ok(g)
    }

    pub fn remove_arc(&self, from: &str, to: &str) -> Result<Dag> {
        let (u, v) = (self.index_of(from)?, self.index_of(to)?);
        if !self.has_arc_idx(u, v) {
            return Err(Error::MissingArc(from.to_string(), to.to_string()));
        }
        let mut g = self.clone();
        g.parents[v].retain(|&p| p != u);
        Ok(g)
    }

    pub fn reverse_arc(&self, from: &str, to: &str) -> Result<Dag> {
        self.remove_arc(from, to)?.add_arc(to, from)
    }

    /// Keeps only the listed nodes (in the given order) and arcs among them.
    pub fn induced(&self, keep: &[usize]) -> Dag {
        let mut pos = vec![usize::MAX; self.len()];
        for (i, &k) in keep.iter().enumerate() {
            pos[k] = i;
        }
        let parents = keep
            .iter()
            .map(|&k| {
                self.parents[k]
                    .iter()
                    .filter(|&&p| pos[p] != usize::MAX)
                    .map(|&p| pos[p])
                    .collect()
            })
            .collect();
        Dag::from_parents(self.names_of(keep), parents)
    }

    /// Nodes that are ancestors of any node in `targets` (targets included),
    /// in index order.
    pub fn ancestral_set(&self, targets: &[usize]) -> Vec<usize> {
        let mut keep = vec![false; self.len()];
        let mut stack: Vec<usize> = targets.to_vec();
        while let Some(x) = stack.pop() {
            if !keep[x] {
                keep[x] = true;
                stack.extend(self.parents[x].iter().copied());
            }
        }
        (0..self.len()).filter(|&i| keep[i]).collect()
    }
}

pub(crate) fn topo_order(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (v, ps) in parents.iter().enumerate() {
        for &u in ps {
            children[u].push(v);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&x) = ready.iter().next() {
        ready.remove(&x);
        order.push(x);
        for &c in &children[x] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Arcs that structure learning must avoid (`blacklist`) or keep (`whitelist`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcConstraints {
    #[serde(default)]
    pub blacklist: BTreeSet<Arc>,
    #[serde(default)]
    pub whitelist: BTreeSet<Arc>,
}

impl ArcConstraints {
    pub fn new(blacklist: impl IntoIterator<Item = Arc>, whitelist: impl IntoIterator<Item = Arc>) -> Self {
        ArcConstraints {
            blacklist: blacklist.into_iter().collect(),
            whitelist: whitelist.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.blacklist.is_empty() && self.whitelist.is_empty()
    }

    /// Checks names, disjointness and whitelist acyclicity.
    pub fn validate(&self, nodes: &[String]) -> Result<()> {
        for (a, b) in self.blacklist.iter().chain(&self.whitelist) {
            for n in [a, b] {
                if !nodes.contains(n) {
                    return Err(Error::UnknownNode(n.clone()));
                }
            }
        }
        if let Some(arc) = self.whitelist.intersection(&self.blacklist).next() {
            return Err(Error::Constraints(format!(
                "{} -> {} is both whitelisted and blacklisted",
                arc.0, arc.1
            )));
        }
        let arcs: Vec<Arc> = self.whitelist.iter().cloned().collect();
        match Dag::from_arcs(nodes.to_vec(), &arcs) {
            Ok(_) => Ok(()),
            Err(Error::Cycle(c)) => Err(Error::Constraints(format!("whitelist is cyclic: {}", c.join(" -> ")))),
            Err(e) => Err(e),
        }
    }

    pub fn allows(&self, dag: &Dag) -> bool {
        let arcs = dag.arc_set();
        self.blacklist.iter().all(|a| !arcs.contains(a)) && self.whitelist.iter().all(|a| arcs.contains(a))
    }

    pub(crate) fn indexed(&self, nodes: &[String]) -> Result<IndexedConstraints> {
        self.validate(nodes)?;
        let index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let n = nodes.len();
        let mut black = vec![false; n * n];
        let mut white = vec![false; n * n];
        for (a, b) in &self.blacklist {
            black[index[a.as_str()] * n + index[b.as_str()]] = true;
        }
        for (a, b) in &self.whitelist {
            white[index[a.as_str()] * n + index[b.as_str()]] = true;
        }
        Ok(IndexedConstraints { n, black, white })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct IndexedConstraints {
    n: usize,
    black: Vec<bool>,
    white: Vec<bool>,
}

impl IndexedConstraints {
    pub fn blacklisted(&self, u: usize, v: usize) -> bool {
        self.black[u * self.n + v]
    }

    pub fn whitelisted(&self, u: usize, v: usize) -> bool {
        self.white[u * self.n + v]
    }

    pub fn whitelist_arcs(&self) -> Vec<(usize, usize)> {
        (0..self.n * self.n)
            .filter(|&i| self.white[i])
            .map(|i| (i / self.n, i % self.n))
            .collect()
    }
}

/// Reads a `from,to` arc list (header required; extra columns ignored).
pub fn read_arc_list(csv_bytes: &[u8]) -> Result<Vec<Arc>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(csv_bytes);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse {
                row: 1,
                message: format!("edge list needs a `{name}` column"),
            })
    };
    let (fi, ti) = (col("from")?, col("to")?);
    let mut arcs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |j: usize| {
            rec.get(j).map(|s| s.trim().to_string()).ok_or_else(|| Error::Parse {
                row: i + 2,
                message: "missing field".into(),
            })
        };
        arcs.push((get(fi)?, get(ti)?));
    }
    Ok(arcs)
}

/// Builds a DAG from an edge-list CSV. With `nodes`, every endpoint must be
/// listed and isolated nodes are kept; otherwise nodes appear in first-seen
/// order.
pub fn import_edgelist(csv_bytes: &[u8], nodes: Option<&[String]>) -> Result<Dag> {
    let arcs = read_arc_list(csv_bytes)?;
    let nodes: Vec<String> = match nodes {
        Some(n) => n.to_vec(),
        None => {
            let mut seen = Vec::new();
            for (a, b) in &arcs {
                for x in [a, b] {
                    if !seen.contains(x) {
                        seen.push(x.clone());
                    }
                }
            }
            seen
        }
    };
    Dag::from_arcs(nodes, &arcs)
}

/// `from,to` CSV, arcs in canonical name order.
pub fn export_edgelist(dag: &Dag) -> Vec<u8> {
    write_arc_list(&dag.arcs())
}

pub fn write_arc_list(arcs: &[Arc]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["from", "to"]).expect("in-memory write");
    for (a, b) in arcs {
        w.write_record([a, b]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Inclusion probability for each ordered pair in [`random_dag`].
pub fn random_arc_probability(n: usize, max_parents: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    (max_parents as f64 / (n - 1) as f64).min(0.5)
}

/// Random DAG: uniform random topological order; each forward pair becomes
/// an arc independently with [`random_arc_probability`], parents capped at
/// `max_parents`. Deterministic per seed.
pub fn random_dag(nodes: &[String], max_parents: usize, seed: u64) -> Dag {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parents = random_parents(nodes.len(), max_parents, None, &mut rng);
    Dag::from_parents(nodes.to_vec(), parents)
}

/// Random parent sets honoring constraints: whitelisted arcs first, then
/// random forward arcs that are not blacklisted and keep the graph acyclic.
pub(crate) fn random_parents<R: Rng>(
    n: usize,
    max_parents: usize,
    constraints: Option<&IndexedConstraints>,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let p = random_arc_probability(n, max_parents);
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    if let Some(c) = constraints {
        for (u, v) in c.whitelist_arcs() {
            parents[v].push(u);
        }
    }
    for j in 1..n {
        let child = order[j];
        for &parent in &order[..j] {
            let draw = rng.random::<f64>() < p;
            if !draw || parents[child].len() >= max_parents || parents[child].contains(&parent) {
                continue;
            }
            if let Some(c) = constraints {
                if c.blacklisted(parent, child) || parents[parent].contains(&child) {
                    continue;
                }
                parents[child].push(parent);
                if topo_order(&parents).is_none() {
                    parents[child].pop();
                }
            } else {
                parents[child].push(parent);
            }
        }
    }
    for ps in &mut parents {
        ps.sort_unstable();
    }
    parents
}
