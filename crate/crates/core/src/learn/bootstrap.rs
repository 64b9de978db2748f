use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_cancel, learn_with_scorer, Problem, SearchConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{random_parents, topo_order, Dag};
use crate::score::Scorer;

/// Parent cap for random starting graphs when the search itself is
/// unconstrained.
const RANDOM_START_MAX_PARENTS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub sample_fraction: f64,
    /// `false` keeps the full data and re-initializes the search from a
    /// fresh random graph each iteration.
    pub resample: bool,
    pub edge_threshold: f64,
    pub direction_threshold: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            iterations: 51,
            sample_fraction: 1.0,
            resample: true,
            edge_threshold: 0.51,
            direction_threshold: 0.51,
            seed: 0,
            workers: 1,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("bootstrap needs at least one iteration"));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::invalid("sample_fraction must lie in (0, 1]"));
        }
        for t in [self.edge_threshold, self.direction_threshold] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid("thresholds must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// One ordered pair of the strength table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcStrength {
    pub from: String,
    pub to: String,
    /// Fraction of iterations with `from` and `to` adjacent.
    pub strength: f64,
    /// Fraction of those iterations with the arc pointing `from → to`.
    pub direction: f64,
}

/// Bootstrap arc frequencies. Holds both orientations of every pair seen
/// at least once, ordered by (from, to) node index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthTable {
    pub nodes: Vec<String>,
    pub iterations: usize,
    pub arcs: Vec<ArcStrength>,
}

impl StrengthTable {
    /// Tallies arc occurrences over a list of DAGs on the same node set.
    pub fn from_dags(nodes: &[String], dags: &[Dag]) -> Result<Self> {
        let n = nodes.len();
        let mut counts = vec![0usize; n * n];
        for dag in dags {
            for (a, b) in dag.arcs() {
                let u = index(nodes, &a)?;
                let v = index(nodes, &b)?;
                counts[u * n + v] += 1;
            }
        }
        let total = dags.len().max(1) as f64;
        let mut arcs = Vec::new();
        for u in 0..n {
            for v in 0..n {
                let pair = counts[u * n + v] + counts[v * n + u];
                if u == v || pair == 0 {
                    continue;
                }
                arcs.push(ArcStrength {
                    from: nodes[u].clone(),
                    to: nodes[v].clone(),
                    strength: pair as f64 / total,
                    direction: counts[u * n + v] as f64 / pair as f64,
                });
            }
        }
        Ok(StrengthTable {
            nodes: nodes.to_vec(),
            iterations: dags.len(),
            arcs,
        })
    }

    fn entry(&self, a: &str, b: &str) -> Option<&ArcStrength> {
        self.arcs.iter().find(|e| e.from == a && e.to == b)
    }

    pub fn strength(&self, a: &str, b: &str) -> f64 {
        self.entry(a, b).map_or(0.0, |e| e.strength)
    }

    /// 0.5 for pairs never seen.
    pub fn direction(&self, a: &str, b: &str) -> f64 {
        self.entry(a, b).map_or(0.5, |e| e.direction)
    }

    /// CSV with columns from,to,strength,direction.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["from", "to", "strength", "direction"]).expect("in-memory write");
        for e in &self.arcs {
            w.write_record([&e.from, &e.to, &e.strength.to_string(), &e.direction.to_string()])
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }
}

fn index(nodes: &[String], name: &str) -> Result<usize> {
    nodes
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::UnknownNode(name.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub strengths: StrengthTable,
    pub dags: Vec<Dag>,
}

/// Learns one structure per iteration and tallies arc frequencies.
/// Iteration `i` draws its rows and random start from seed `seed + i`, so
/// results do not depend on the worker count.
pub fn bootstrap_learn(ds: &Dataset, cfg: &SearchConfig, bcfg: &BootstrapConfig) -> Result<BootstrapResult> {
    bootstrap_learn_with(ds, cfg, bcfg, None, None)
}

/// [`bootstrap_learn`] with cooperative cancellation and a completed-
/// iteration counter.
pub fn bootstrap_learn_with(
    ds: &Dataset,
    cfg: &SearchConfig,
    bcfg: &BootstrapConfig,
    cancel: Option<&AtomicBool>,
    progress: Option<&AtomicUsize>,
) -> Result<BootstrapResult> {
    bcfg.validate()?;
    let base = Problem::new(ds, cfg)?;
    let data = Arc::clone(&base.data);
    let n_rows = data.n_rows();
    let draw = ((bcfg.sample_fraction * n_rows as f64).ceil() as usize).max(1);
    let shared = Scorer::new(Arc::clone(&data), cfg.score);
    let run = |i: usize| -> Result<Dag> {
        check_cancel(cancel)?;
        let seed = bcfg.seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut icfg = cfg.clone();
        icfg.seed = seed;
        let dag = if bcfg.resample {
            let rows: Vec<usize> = (0..draw).map(|_| rng.random_range(0..n_rows)).collect();
            let p = Problem::from_data(Arc::new(data.resample(&rows)), &icfg)?;
            let scorer = p.scorer();
            let (parents, _) = learn_with_scorer(&p, &scorer, None, cancel)?;
            p.dag(parents)
        } else {
            let p = Problem {
                data: Arc::clone(&data),
                constraints: base.constraints.clone(),
                cfg: icfg,
            };
            let mp = cfg.max_parents.unwrap_or(RANDOM_START_MAX_PARENTS);
            let start = random_parents(p.n(), mp, Some(&p.constraints), &mut rng);
            let (parents, _) = learn_with_scorer(&p, &shared, Some(start), cancel)?;
            p.dag(parents)
        };
        if let Some(c) = progress {
            c.fetch_add(1, Ordering::Relaxed);
        }
        Ok(dag)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(bcfg.workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let dags = pool.install(|| (0..bcfg.iterations).into_par_iter().map(run).collect::<Result<Vec<Dag>>>())?;
    let strengths = StrengthTable::from_dags(data.names(), &dags)?;
    Ok(BootstrapResult { strengths, dags })
}

/// Averaged network from a strength table. Pairs with strength above
/// `edge_threshold` are kept and point in their dominant direction (ties go
/// to node order); arcs whose direction clears `direction_threshold` are
/// therefore kept as is. Cycles lose their weakest arcs.
pub fn averaged_network(st: &StrengthTable, edge_threshold: f64, direction_threshold: f64) -> Dag {
    let n = st.nodes.len();
    let mut kept: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for u in 0..n {
        for v in u + 1..n {
            let (a, b) = (&st.nodes[u], &st.nodes[v]);
            let s = st.strength(a, b);
            if s <= edge_threshold {
                continue;
            }
            let (d_ab, d_ba) = (st.direction(a, b), st.direction(b, a));
            let forward = if d_ab > direction_threshold && d_ba > direction_threshold {
                d_ab >= d_ba
            } else if d_ab > direction_threshold {
                true
            } else if d_ba > direction_threshold {
                false
            } else {
                d_ab >= d_ba
            };
            kept.insert(if forward { (u, v) } else { (v, u) }, s);
        }
    }
    let build = |kept: &BTreeMap<(usize, usize), f64>| {
        let mut parents = vec![Vec::new(); n];
        for &(u, v) in kept.keys() {
            parents[v].push(u);
        }
        parents
    };
    loop {
        let parents = build(&kept);
        if topo_order(&parents).is_some() {
            return Dag::from_parents(st.nodes.clone(), parents);
        }
        let weakest = kept
            .iter()
            .filter(|(&(u, v), _)| super::on_cycle(&parents, u, v))
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(&k, _)| k)
            .expect("a cyclic graph has an arc on a cycle");
        kept.remove(&weakest);
    }
}
