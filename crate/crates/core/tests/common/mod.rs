#![allow(dead_code)]

use std::collections::BTreeMap;

use cbench_core::dataset::{Column, Dataset};
use cbench_core::fit::{parse_bif, Cpt, FitMethod, FittedBn};
use cbench_core::graph::Dag;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn s(x: &str) -> String {
    x.to_string()
}

pub fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

pub fn alarm() -> FittedBn {
    parse_bif(include_str!("../data/alarm.bif")).unwrap()
}

pub fn sachs() -> FittedBn {
    parse_bif(include_str!("../data/sachs.bif")).unwrap()
}

/// Factor dataset from per-row labels.
pub fn table(cols: &[&str], rows: &[Vec<&str>]) -> Dataset {
    let columns = cols
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let labels: Vec<Option<&str>> = rows.iter().map(|r| Some(r[j])).collect();
            Column::factor_from_labels(*name, &labels).unwrap()
        })
        .collect();
    Dataset::new("t", columns).unwrap()
}

/// `count` copies of each labelled row.
pub fn weighted(cols: &[&str], rows: &[(Vec<&str>, usize)]) -> Dataset {
    let mut all = Vec::new();
    for (r, count) in rows {
        for _ in 0..*count {
            all.push(r.clone());
        }
    }
    table(cols, &all)
}

fn random_row(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // bounded away from zero so every evidence pattern has mass
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// A random network over `n` nodes with `k` levels each. Node indices are
/// shuffled relative to the topological order so index order is not a
/// valid elimination or sampling order.
pub fn random_bn(n: usize, k: usize, arc_prob: f64, seed: u64) -> FittedBn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let nodes: Vec<String> = (0..n).map(|i| format!("X{i}")).collect();
    let mut arcs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < arc_prob {
                arcs.push((nodes[perm[i]].clone(), nodes[perm[j]].clone()));
            }
        }
    }
    let dag = Dag::from_arcs(nodes.clone(), &arcs).unwrap();
    let levels: Vec<Vec<String>> = (0..n).map(|_| (0..k).map(|l| format!("l{l}")).collect()).collect();
    let cpts = (0..n)
        .map(|v| {
            let parents: Vec<String> = dag.parents(v).iter().map(|&p| nodes[p].clone()).collect();
            let q = k.pow(parents.len() as u32);
            Cpt {
                node: nodes[v].clone(),
                parents,
                table: (0..q).map(|_| random_row(k, &mut rng)).collect(),
            }
        })
        .collect();
    FittedBn::from_cpts(dag, levels, cpts, FitMethod::Mle, 0.0).unwrap()
}

/// P(assignment) as the product of CPT entries; parent configurations are
/// mixed-radix with the first listed parent varying fastest.
pub fn joint_probability(bn: &FittedBn, assignment: &[usize]) -> f64 {
    let mut p = 1.0;
    for (v, cpt) in bn.cpts.iter().enumerate() {
        let mut config = 0;
        let mut stride = 1;
        for parent in &cpt.parents {
            let u = bn.index_of(parent).unwrap();
            config += assignment[u] * stride;
            stride *= bn.levels[u].len();
        }
        p *= cpt.table[config][assignment[v]];
    }
    p
}

/// Every joint assignment of the network, as level indices.
pub fn all_assignments(bn: &FittedBn) -> Vec<Vec<usize>> {
    let cards: Vec<usize> = bn.levels.iter().map(Vec::len).collect();
    let total: usize = cards.iter().product();
    (0..total)
        .map(|mut i| {
            cards
                .iter()
                .map(|&r| {
                    let l = i % r;
                    i /= r;
                    l
                })
                .collect()
        })
        .collect()
}

/// Posterior of `event` given `evidence` by summing the full joint.
pub fn brute_force(bn: &FittedBn, event: &str, evidence: &BTreeMap<String, String>) -> Vec<f64> {
    let e = bn.index_of(event).unwrap();
    let ev: Vec<(usize, usize)> = evidence
        .iter()
        .map(|(n, l)| (bn.index_of(n).unwrap(), bn.level_index(n, l).unwrap()))
        .collect();
    let mut acc = vec![0.0; bn.levels[e].len()];
    for a in all_assignments(bn) {
        if ev.iter().all(|&(v, l)| a[v] == l) {
            acc[a[e]] += joint_probability(bn, &a);
        }
    }
    let total: f64 = acc.iter().sum();
    acc.into_iter().map(|x| x / total).collect()
}

/// P(utility = s | do(decisions)) by summing the joint of the network whose
/// decision nodes are replaced by point masses.
pub fn brute_force_do(bn: &FittedBn, utility: &str, clamp: &[(&str, &str)]) -> Vec<f64> {
    let u = bn.index_of(utility).unwrap();
    let fixed: Vec<(usize, usize)> = clamp
        .iter()
        .map(|(n, l)| (bn.index_of(n).unwrap(), bn.level_index(n, l).unwrap()))
        .collect();
    let mut acc = vec![0.0; bn.levels[u].len()];
    for a in all_assignments(bn) {
        if !fixed.iter().all(|&(v, l)| a[v] == l) {
            continue;
        }
        let mut p = 1.0;
        for (v, cpt) in bn.cpts.iter().enumerate() {
            if fixed.iter().any(|f| f.0 == v) {
                continue;
            }
            let mut config = 0;
            let mut stride = 1;
            for parent in &cpt.parents {
                let w = bn.index_of(parent).unwrap();
                config += a[w] * stride;
                stride *= bn.levels[w].len();
            }
            p *= cpt.table[config][a[v]];
        }
        acc[a[u]] += p;
    }
    acc
}

/// All DAGs over three labelled nodes, by enumerating parent sets.
pub fn all_three_node_dags(nodes: &[String]) -> Vec<Dag> {
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut out = Vec::new();
    // each unordered pair: absent, forward, backward
    for code in 0..27u32 {
        let mut c = code;
        let mut arcs = Vec::new();
        for &(a, b) in &pairs {
            match c % 3 {
                1 => arcs.push((nodes[a].clone(), nodes[b].clone())),
                2 => arcs.push((nodes[b].clone(), nodes[a].clone())),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(d) = Dag::from_arcs(nodes.to_vec(), &arcs) {
            if d.topological_order().is_some() {
                out.push(d);
            }
        }
    }
    out
}

/// Skeleton plus unshielded colliders, the Markov-equivalence signature.
pub fn equivalence_key(dag: &Dag) -> (Vec<(usize, usize)>, Vec<(usize, usize, usize)>) {
    let n = dag.len();
    let mut skeleton = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if dag.adjacent_idx(a, b) {
                skeleton.push((a, b));
            }
        }
    }
    let mut colliders = Vec::new();
    for c in 0..n {
        let ps = dag.parents(c);
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                if !dag.adjacent_idx(a, b) {
                    colliders.push((a.min(b), a.max(b), c));
                }
            }
        }
    }
    colliders.sort();
    (skeleton, colliders)
}

/// A and B fair and independent, C = A xor B flipped 10% of the time.
/// No single arc improves on the empty graph.
pub fn noisy_xor() -> Dataset {
    let mut rows = Vec::new();
    for (a, b) in [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")] {
        let xor = if a == b { "0" } else { "1" };
        let other = if xor == "0" { "1" } else { "0" };
        rows.push((vec![a, b, xor], 450));
        rows.push((vec![a, b, other], 50));
    }
    weighted(&["A", "B", "C"], &rows)
}

/// Three-node datasets: samples of random networks with two and three
/// levels, plus the xor table.
pub fn three_node_corpus() -> Vec<Dataset> {
    let mut out: Vec<Dataset> = (0..6)
        .map(|seed| {
            let bn = random_bn(3, 2 + (seed as usize % 2), 0.6, 100 + seed);
            cbench_core::infer::sample(&bn, 2_000, seed).unwrap()
        })
        .collect();
    out.push(noisy_xor());
    out
}

/// The network after the intervention do(node = level): incoming arcs cut
/// and the node's table replaced by a point mass.
pub fn mutilate(bn: &FittedBn, node: &str, level: &str) -> FittedBn {
    let arcs: Vec<(String, String)> = bn.dag.arcs().into_iter().filter(|(_, b)| b != node).collect();
    let dag = Dag::from_arcs(bn.nodes().to_vec(), &arcs).unwrap();
    let l = bn.level_index(node, level).unwrap();
    let mut cpts = bn.cpts.clone();
    let v = bn.index_of(node).unwrap();
    let mut row = vec![0.0; bn.levels[v].len()];
    row[l] = 1.0;
    cpts[v] = Cpt {
        node: node.to_string(),
        parents: Vec::new(),
        table: vec![row],
    };
    FittedBn::from_cpts(dag, bn.levels.clone(), cpts, bn.method, bn.iss).unwrap()
}

pub const SACHS_ORDER: [&str; 11] = ["Raf", "Mek", "Plcg", "PIP2", "PIP3", "Erk", "Akt", "PKA", "PKC", "P38", "Jnk"];

/// 5400-row interventional stand-in for the flow-cytometry data: 1800
/// observational rows and 600 rows per (target, level) intervention. The
/// `INT` column holds the 1-based position of the target in
/// [`SACHS_ORDER`] (0 = observational).
pub fn sachs_interventional(seed: u64) -> Dataset {
    let bn = sachs();
    let blocks: [(&str, Option<(&str, &str)>, usize); 7] = [
        ("0", None, 1800),
        ("2", Some(("Mek", "LOW")), 600),
        ("4", Some(("PIP2", "LOW")), 600),
        ("7", Some(("Akt", "LOW")), 600),
        ("8", Some(("PKA", "HIGH")), 600),
        ("9", Some(("PKC", "LOW")), 600),
        ("9", Some(("PKC", "HIGH")), 600),
    ];
    let mut codes: Vec<Vec<Option<u32>>> = vec![Vec::new(); SACHS_ORDER.len()];
    let mut int = Vec::new();
    for (i, (label, target, n)) in blocks.iter().enumerate() {
        let net = match target {
            Some((node, level)) => mutilate(&bn, node, level),
            None => bn.clone(),
        };
        let part = cbench_core::infer::sample(&net, *n, seed.wrapping_add(i as u64)).unwrap();
        for (j, name) in SACHS_ORDER.iter().enumerate() {
            codes[j].extend_from_slice(part.column(name).unwrap().codes().unwrap());
        }
        int.extend(std::iter::repeat_n(Some(*label), *n));
    }
    let mut columns: Vec<Column> = SACHS_ORDER
        .iter()
        .zip(codes)
        .map(|(name, c)| Column::factor(*name, bn.levels_of(name).unwrap().to_vec(), c).unwrap())
        .collect();
    columns.push(Column::factor_from_labels("INT", &int).unwrap());
    let ds = Dataset::new("sachs", columns).unwrap();
    let spec = cbench_core::dataset::InterventionSpec::by_position(&ds, "INT").unwrap();
    cbench_core::dataset::attach_interventions(&ds, spec).unwrap()
}
