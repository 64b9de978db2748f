use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::AssocGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Single,
    Complete,
    Average,
    /// Ward's criterion applied to unsquared distances (`ward.D`).
    Ward,
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "single" => Linkage::Single,
            "complete" => Linkage::Complete,
            "average" => Linkage::Average,
            "ward" | "ward.d" => Linkage::Ward,
            other => return Err(Error::invalid(format!("unknown linkage `{other}`"))),
        })
    }
}

/// One agglomeration step. Leaves are edges `0..M`; the cluster created by
/// merge `k` has id `M + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    /// Edges in the order of `AssocGraph::edges`.
    pub edges: Vec<(String, String)>,
    /// Community id per edge, numbered by first appearance.
    pub community: Vec<usize>,
    pub n_communities: usize,
    pub partition_density: f64,
    /// Height of the chosen cut.
    pub cut_height: f64,
    pub dendrogram: Vec<Merge>,
}

/// Edge similarity: for edges sharing exactly one endpoint, the Jaccard index
/// of the inclusive neighbourhoods of the two other endpoints.
fn similarity_matrix(g: &AssocGraph) -> Vec<Vec<f64>> {
    let idx = |name: &str| g.nodes.iter().position(|n| n == name).expect("edge endpoint is a node");
    let n = g.nodes.len();
    let mut nbr: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
    let ends: Vec<(usize, usize)> = g.edges.iter().map(|e| (idx(&e.a), idx(&e.b))).collect();
    for &(a, b) in &ends {
        nbr[a].insert(b);
        nbr[b].insert(a);
    }
    let m = ends.len();
    let mut s = vec![vec![0.0; m]; m];
    for x in 0..m {
        for y in x + 1..m {
            let (a1, b1) = ends[x];
            let (a2, b2) = ends[y];
            let others = if a1 == a2 {
                Some((b1, b2))
            } else if a1 == b2 {
                Some((b1, a2))
            } else if b1 == a2 {
                Some((a1, b2))
            } else if b1 == b2 {
                Some((a1, a2))
            } else {
                None
            };
            if let Some((i, j)) = others {
                let inter = nbr[i].intersection(&nbr[j]).count() as f64;
                let union = nbr[i].union(&nbr[j]).count() as f64;
                s[x][y] = inter / union;
                s[y][x] = s[x][y];
            }
        }
    }
    s
}

/// Agglomerative clustering over a full distance matrix. Ties in the
/// minimum distance go to the pair with the smallest active indices.
pub(crate) fn agglomerate(dist: &[Vec<f64>], linkage: Linkage) -> Vec<Merge> {
    let m = dist.len();
    let mut d: Vec<Vec<f64>> = dist.to_vec();
    let mut size = vec![1usize; m];
    let mut id: Vec<usize> = (0..m).collect();
    let mut active: Vec<bool> = vec![true; m];
    let mut merges = Vec::with_capacity(m.saturating_sub(1));
    for step in 0..m.saturating_sub(1) {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for i in 0..m {
            if !active[i] {
                continue;
            }
            for j in i + 1..m {
                if active[j] && d[i][j] < best.0 {
                    best = (d[i][j], i, j);
                }
            }
        }
        let (h, i, j) = best;
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..m {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let v = match linkage {
                Linkage::Single => d[i][k].min(d[j][k]),
                Linkage::Complete => d[i][k].max(d[j][k]),
                Linkage::Average => (ni * d[i][k] + nj * d[j][k]) / (ni + nj),
                Linkage::Ward => ((ni + nk) * d[i][k] + (nj + nk) * d[j][k] - nk * h) / (ni + nj + nk),
            };
            d[i][k] = v;
            d[k][i] = v;
        }
        merges.push(Merge {
            left: id[i].min(id[j]),
            right: id[i].max(id[j]),
            height: h,
            size: size[i] + size[j],
        });
        size[i] += size[j];
        id[i] = m + step;
        active[j] = false;
    }
    merges
}

/// Cluster labels of every leaf after applying the first `k` merges.
pub(crate) fn labels_after(m: usize, merges: &[Merge], k: usize) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..m + k).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for (step, mg) in merges[..k].iter().enumerate() {
        let new = m + step;
        let a = find(&mut parent, mg.left);
        let b = find(&mut parent, mg.right);
        parent[a] = new;
        parent[b] = new;
    }
    (0..m).map(|x| find(&mut parent, x)).collect()
}

/// Partition density of an edge partition given endpoints per edge.
pub fn partition_density(ends: &[(usize, usize)], labels: &[usize]) -> f64 {
    let m = ends.len();
    if m == 0 {
        return 0.0;
    }
    let mut groups: std::collections::BTreeMap<usize, (usize, BTreeSet<usize>)> = Default::default();
    for (e, &l) in ends.iter().zip(labels) {
        let g = groups.entry(l).or_default();
        g.0 += 1;
        g.1.insert(e.0);
        g.1.insert(e.1);
    }
    let mut sum = 0.0;
    for (mc, nodes) in groups.values() {
        let nc = nodes.len() as f64;
        if nc > 2.0 {
            let mc = *mc as f64;
            sum += mc * (mc - nc + 1.0) / ((nc - 2.0) * (nc - 1.0));
        }
    }
    2.0 / m as f64 * sum
}

/// Clusters edges by neighbourhood similarity and cuts the dendrogram where
/// partition density peaks. Among equal densities the coarsest cut wins.
pub fn link_communities(g: &AssocGraph, linkage: Linkage) -> CommunityAssignment {
    let m = g.edges.len();
    let edges: Vec<(String, String)> = g.edges.iter().map(|e| (e.a.clone(), e.b.clone())).collect();
    if m == 0 {
        return CommunityAssignment {
            edges,
            community: Vec::new(),
            n_communities: 0,
            partition_density: 0.0,
            cut_height: 0.0,
            dendrogram: Vec::new(),
        };
    }
    let sim = similarity_matrix(g);
    let dist: Vec<Vec<f64>> = sim
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, s)| if i == j { 0.0 } else { 1.0 - s }).collect())
        .collect();
    let merges = agglomerate(&dist, linkage);
    let idx = |name: &str| g.nodes.iter().position(|n| n == name).expect("edge endpoint is a node");
    let ends: Vec<(usize, usize)> = g.edges.iter().map(|e| (idx(&e.a), idx(&e.b))).collect();

    // candidate cuts: no merges, then after the last merge at each distinct height
    let mut cuts = vec![(0usize, 0.0f64)];
    for (k, mg) in merges.iter().enumerate() {
        let last_at_height = merges.get(k + 1).is_none_or(|next| next.height != mg.height);
        if last_at_height {
            cuts.push((k + 1, mg.height));
        }
    }
    let mut best: Option<(f64, usize, f64)> = None;
    for &(k, h) in &cuts {
        let dens = partition_density(&ends, &labels_after(m, &merges, k));
        if best.is_none_or(|(bd, _, _)| dens >= bd - 1e-12) {
            best = Some((dens, k, h));
        }
    }
    let (density, k, cut_height) = best.expect("at least one cut");
    let raw = labels_after(m, &merges, k);
    let mut renumber: Vec<(usize, usize)> = Vec::new();
    let community: Vec<usize> = raw
        .iter()
        .map(|&r| match renumber.iter().find(|(from, _)| *from == r) {
            Some(&(_, to)) => to,
            None => {
                let to = renumber.len();
                renumber.push((r, to));
                to
            }
        })
        .collect();
    CommunityAssignment {
        edges,
        community,
        n_communities: renumber.len(),
        partition_density: density,
        cut_height,
        dendrogram: merges,
    }
}
