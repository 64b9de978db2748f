//! Structure learning: greedy and tabu search over DAGs, constraint-based
//! learners, Chow–Liu trees, bootstrap averaging and cross-validation.

mod bootstrap;
mod chow_liu;
mod constraint;
mod model;
mod search;
mod validate;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DiscreteData};
use crate::error::{Error, Result};
use crate::graph::{topo_order, ArcConstraints, Dag, IndexedConstraints};
use crate::score::{ScoreSpec, Scorer};

pub use bootstrap::{
    averaged_network, bootstrap_learn, bootstrap_learn_with, ArcStrength, BootstrapConfig, BootstrapResult, StrengthTable,
};
pub use chow_liu::{chow_liu, chow_liu_with};
pub use constraint::{grow_shrink, pc_stable};
pub use model::ModelDocument;
pub use search::{hill_climb, tabu};
pub use validate::{validate, validate_with, StructureSource, ValidationMode, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Hc,
    Tabu,
    Gs,
    PcStable,
    ChowLiu,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "hc" | "hill_climb" | "hill_climbing" => Algorithm::Hc,
            "tabu" => Algorithm::Tabu,
            "gs" | "grow_shrink" => Algorithm::Gs,
            "pc" | "pc_stable" => Algorithm::PcStable,
            "chow_liu" | "chowliu" => Algorithm::ChowLiu,
            other => return Err(Error::invalid(format!("unknown algorithm `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub score: ScoreSpec,
    pub constraints: ArcConstraints,
    pub start: Option<Dag>,
    /// `None` means unlimited.
    pub max_parents: Option<usize>,
    pub tabu_length: usize,
    pub restarts: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::Hc,
            score: ScoreSpec::default(),
            constraints: ArcConstraints::default(),
            start: None,
            max_parents: None,
            tabu_length: 10,
            restarts: 0,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SearchConfig {
            algorithm,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.score.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha must lie in (0, 1)"));
        }
        if self.max_parents == Some(0) && !self.constraints.whitelist.is_empty() {
            return Err(Error::Constraints("max_parents = 0 leaves no room for whitelisted arcs".into()));
        }
        Ok(())
    }
}

/// Output of [`learn`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnResult {
    pub dag: Dag,
    /// Network score of `dag` under the configured score.
    pub score: f64,
    pub warnings: Vec<String>,
}

/// Shared inputs of every learner, in data-column index space.
pub(crate) struct Problem {
    pub data: Arc<DiscreteData>,
    pub constraints: IndexedConstraints,
    pub cfg: SearchConfig,
}

impl Problem {
    pub fn new(ds: &Dataset, cfg: &SearchConfig) -> Result<Self> {
        let data = DiscreteData::from_dataset(ds)?;
        Problem::from_data(Arc::new(data), cfg)
    }

    pub fn from_data(data: Arc<DiscreteData>, cfg: &SearchConfig) -> Result<Self> {
        cfg.validate()?;
        if data.n_rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        let constraints = cfg.constraints.indexed(data.names())?;
        Ok(Problem {
            data,
            constraints,
            cfg: cfg.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.data.n_vars()
    }

    pub fn max_parents(&self) -> usize {
        self.cfg.max_parents.unwrap_or(usize::MAX)
    }

    pub fn dag(&self, parents: Vec<Vec<usize>>) -> Dag {
        Dag::from_parents(self.data.names().to_vec(), parents)
    }

    /// Parent sets of the configured start graph (whitelist only when absent).
    pub fn start_parents(&self) -> Result<Vec<Vec<usize>>> {
        let n = self.n();
        let mut parents = vec![Vec::new(); n];
        match &self.cfg.start {
            Some(start) => {
                let mut names: Vec<&String> = start.nodes().iter().collect();
                names.sort();
                let mut ours: Vec<&String> = self.data.names().iter().collect();
                ours.sort();
                if names != ours {
                    return Err(Error::invalid("start graph nodes differ from the data's variables"));
                }
                for (a, b) in start.arcs() {
                    let (u, v) = (self.data.index_of(&a)?, self.data.index_of(&b)?);
                    if self.constraints.blacklisted(u, v) {
                        return Err(Error::Constraints(format!("start graph contains blacklisted arc {a} -> {b}")));
                    }
                    parents[v].push(u);
                }
                for (u, v) in self.constraints.whitelist_arcs() {
                    if !parents[v].contains(&u) {
                        let (a, b) = (&self.data.names()[u], &self.data.names()[v]);
                        return Err(Error::Constraints(format!("start graph lacks whitelisted arc {a} -> {b}")));
                    }
                }
            }
            None => {
                for (u, v) in self.constraints.whitelist_arcs() {
                    parents[v].push(u);
                }
            }
        }
        for ps in &mut parents {
            ps.sort_unstable();
        }
        if parents.iter().any(|p| p.len() > self.max_parents()) {
            return Err(Error::Constraints("start graph exceeds max_parents".into()));
        }
        Ok(parents)
    }

    pub fn scorer(&self) -> Scorer {
        Scorer::new(Arc::clone(&self.data), self.cfg.score)
    }
}

/// Makes `parents` satisfy the constraints: blacklisted arcs are reversed
/// when allowed and otherwise dropped, whitelisted arcs are added, and any
/// remaining cycle loses a non-whitelisted arc.
pub(crate) fn enforce_constraints(mut parents: Vec<Vec<usize>>, c: &IndexedConstraints) -> Vec<Vec<usize>> {
    let n = parents.len();
    for v in 0..n {
        let bad: Vec<usize> = parents[v].iter().copied().filter(|&u| c.blacklisted(u, v)).collect();
        for u in bad {
            parents[v].retain(|&p| p != u);
            if !c.blacklisted(v, u) && !parents[u].contains(&v) {
                parents[u].push(v);
                if topo_order(&parents).is_none() {
                    parents[u].pop();
                }
            }
        }
    }
    for (u, v) in c.whitelist_arcs() {
        parents[u].retain(|&p| p != v);
        if !parents[v].contains(&u) {
            parents[v].push(u);
        }
    }
    while topo_order(&parents).is_none() {
        let removed = (0..n).find_map(|v| {
            parents[v]
                .iter()
                .copied()
                .find(|&u| !c.whitelisted(u, v) && on_cycle(&parents, u, v))
                .map(|u| (u, v))
        });
        match removed {
            Some((u, v)) => parents[v].retain(|&p| p != u),
            None => break,
        }
    }
    for ps in &mut parents {
        ps.sort_unstable();
        ps.dedup();
    }
    parents
}

/// Whether the arc `u → v` lies on a directed cycle (v reaches u).
fn on_cycle(parents: &[Vec<usize>], u: usize, v: usize) -> bool {
    let n = parents.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![v];
    while let Some(x) = stack.pop() {
        if x == u {
            return true;
        }
        if !std::mem::replace(&mut seen[x], true) {
            stack.extend(children[x].iter().copied());
        }
    }
    false
}

pub(crate) fn check_cancel(cancel: Option<&AtomicBool>) -> Result<()> {
    if cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
        Err(Error::Cancelled)
    } else {
        Ok(())
    }
}

/// Runs the configured algorithm. `start` overrides the configured start
/// graph (bootstrap re-initialization).
pub(crate) fn learn_with_scorer(
    p: &Problem,
    scorer: &Scorer,
    start: Option<Vec<Vec<usize>>>,
    cancel: Option<&AtomicBool>,
) -> Result<(Vec<Vec<usize>>, Vec<String>)> {
    match p.cfg.algorithm {
        Algorithm::Hc | Algorithm::Tabu => {
            let start = match start {
                Some(s) => s,
                None => p.start_parents()?,
            };
            let parents = if p.cfg.algorithm == Algorithm::Hc {
                search::hc_search(p, scorer, start, cancel)?
            } else {
                search::tabu_search(p, scorer, start, cancel)?
            };
            Ok((parents, Vec::new()))
        }
        Algorithm::Gs => constraint::gs_parents(p, cancel),
        Algorithm::PcStable => constraint::pc_parents(p, cancel),
        Algorithm::ChowLiu => Ok((chow_liu::chow_liu_parents(p), Vec::new())),
    }
}

/// Learns a structure with the configured algorithm and scores it.
pub fn learn(ds: &Dataset, cfg: &SearchConfig) -> Result<LearnResult> {
    learn_cancellable(ds, cfg, None)
}

pub fn learn_cancellable(ds: &Dataset, cfg: &SearchConfig, cancel: Option<&AtomicBool>) -> Result<LearnResult> {
    let p = Problem::new(ds, cfg)?;
    let scorer = p.scorer();
    let (parents, warnings) = learn_with_scorer(&p, &scorer, None, cancel)?;
    let score = scorer.network_idx(&parents);
    Ok(LearnResult {
        dag: p.dag(parents),
        score,
        warnings,
    })
}
