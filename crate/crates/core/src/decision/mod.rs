//! Influence diagrams on a fitted network: a payoff over the states of one
//! utility variable, a set of decision variables, and a table of expected
//! payoffs for every joint decision.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FittedBn;
use crate::infer::{draw, relevant, ve_marginal, EXACT_NODE_LIMIT};

/// Largest joint decision space [`learn_policy`] will enumerate.
pub const MAX_ASSIGNMENTS: usize = 1_000_000;

/// The serializable description of a diagram, rebuilt against a network
/// with [`DecisionSpec::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSpec {
    pub utility: String,
    /// Payoff per level of the utility variable, each in [-1, 1].
    pub payoffs: BTreeMap<String, f64>,
    pub decisions: Vec<String>,
}

impl DecisionSpec {
    pub fn build(&self, bn: &FittedBn) -> Result<InfluenceDiagram> {
        build_diagram(bn, &self.utility, &self.payoffs, &self.decisions)
    }
}

#[derive(Debug, Clone)]
pub struct InfluenceDiagram {
    bn: FittedBn,
    utility: usize,
    /// Indexed by utility level.
    payoffs: Vec<f64>,
    decisions: Vec<usize>,
}

impl InfluenceDiagram {
    pub fn bn(&self) -> &FittedBn {
        &self.bn
    }

    pub fn utility_var(&self) -> &str {
        &self.bn.nodes()[self.utility]
    }

    pub fn payoff(&self, level: &str) -> Option<f64> {
        let i = self.bn.levels[self.utility].iter().position(|l| l == level)?;
        Some(self.payoffs[i])
    }

    pub fn decision_vars(&self) -> Vec<&str> {
        self.decisions.iter().map(|&d| self.bn.nodes()[d].as_str()).collect()
    }

    pub fn spec(&self) -> DecisionSpec {
        DecisionSpec {
            utility: self.utility_var().to_string(),
            payoffs: self.bn.levels[self.utility]
                .iter()
                .cloned()
                .zip(self.payoffs.iter().copied())
                .collect(),
            decisions: self.decision_vars().into_iter().map(String::from).collect(),
        }
    }

    /// Size of the joint decision space (saturating).
    pub fn n_assignments(&self) -> usize {
        self.decisions
            .iter()
            .fold(1usize, |acc, &d| acc.saturating_mul(self.bn.levels[d].len()))
    }

    /// Levels of the `idx`-th joint assignment; the last decision varies fastest.
    fn assignment_at(&self, mut idx: usize) -> Vec<usize> {
        let mut levels = vec![0; self.decisions.len()];
        for (i, &d) in self.decisions.iter().enumerate().rev() {
            let r = self.bn.levels[d].len();
            levels[i] = idx % r;
            idx /= r;
        }
        levels
    }

    fn resolve(&self, assignment: &BTreeMap<String, String>) -> Result<Vec<usize>> {
        for name in assignment.keys() {
            if !self.decision_vars().contains(&name.as_str()) {
                return Err(Error::invalid(format!("`{name}` is not a decision variable")));
            }
        }
        self.decisions
            .iter()
            .map(|&d| {
                let name = &self.bn.nodes()[d];
                let level = assignment
                    .get(name)
                    .ok_or_else(|| Error::invalid(format!("no level given for decision `{name}`")))?;
                self.bn.level_index(name, level)
            })
            .collect()
    }

    fn clamp(&self, levels: &[usize]) -> Vec<(usize, usize)> {
        self.decisions.iter().copied().zip(levels.iter().copied()).collect()
    }

    fn method_for(&self, opts: &PolicyOptions) -> PayoffMethod {
        opts.method.unwrap_or_else(|| {
            let keep = relevant(&self.bn, &[self.utility], &self.decisions);
            if keep.iter().filter(|&&k| k).count() <= EXACT_NODE_LIMIT {
                PayoffMethod::Exact
            } else {
                PayoffMethod::MonteCarlo
            }
        })
    }

    fn evaluate(&self, levels: &[usize], method: PayoffMethod, mc_samples: usize, seed: u64) -> Result<f64> {
        let clamp = self.clamp(levels);
        match method {
            PayoffMethod::Exact => {
                let dist = ve_marginal(&self.bn, self.utility, &[], &clamp)?;
                Ok(dist.iter().zip(&self.payoffs).map(|(p, u)| p * u).sum())
            }
            PayoffMethod::MonteCarlo => Ok(self.simulate(&clamp, mc_samples, seed)),
        }
    }

    /// Mean payoff over ancestral samples of the mutilated network.
    fn simulate(&self, clamp: &[(usize, usize)], samples: usize, seed: u64) -> f64 {
        let cut: Vec<usize> = clamp.iter().map(|c| c.0).collect();
        let keep = relevant(&self.bn, &[self.utility], &cut);
        let order: Vec<usize> = self
            .bn
            .dag
            .topological_order()
            .expect("fitted graph is acyclic")
            .into_iter()
            .filter(|&v| keep[v])
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut assignment = vec![0usize; self.bn.len()];
        let mut total = 0.0;
        for _ in 0..samples {
            for &v in &order {
                assignment[v] = match clamp.iter().find(|c| c.0 == v) {
                    Some(&(_, l)) => l,
                    None => draw(self.bn.cpts[v].row(self.bn.config_of(v, &assignment)), &mut rng),
                };
            }
            total += self.payoffs[assignment[self.utility]];
        }
        total / samples as f64
    }
}

/// Checks and assembles an influence diagram over `bn`.
pub fn build_diagram(
    bn: &FittedBn,
    utility_var: &str,
    payoffs: &BTreeMap<String, f64>,
    decision_vars: &[String],
) -> Result<InfluenceDiagram> {
    let utility = bn.index_of(utility_var)?;
    if decision_vars.is_empty() {
        return Err(Error::invalid("at least one decision variable is required"));
    }
    let mut decisions = Vec::with_capacity(decision_vars.len());
    for name in decision_vars {
        let d = bn.index_of(name)?;
        if d == utility {
            return Err(Error::invalid(format!("utility variable `{name}` cannot also be a decision")));
        }
        if decisions.contains(&d) {
            return Err(Error::invalid(format!("decision `{name}` listed twice")));
        }
        decisions.push(d);
    }
    for (level, &u) in payoffs {
        bn.level_index(utility_var, level)?;
        if !(-1.0..=1.0).contains(&u) {
            return Err(Error::invalid(format!("payoff {u} for `{level}` lies outside [-1, 1]")));
        }
    }
    let payoffs = bn.levels[utility]
        .iter()
        .map(|l| {
            payoffs
                .get(l)
                .copied()
                .ok_or_else(|| Error::invalid(format!("no payoff given for level `{l}` of `{utility_var}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InfluenceDiagram {
        bn: bn.clone(),
        utility,
        payoffs,
        decisions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffMethod {
    Exact,
    MonteCarlo,
}

impl std::str::FromStr for PayoffMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "exact" => Ok(PayoffMethod::Exact),
            "monte_carlo" | "mc" => Ok(PayoffMethod::MonteCarlo),
            other => Err(Error::invalid(format!("unknown payoff method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyOptions {
    /// `None` evaluates exactly when the utility's ancestral subnetwork,
    /// after cutting arcs into the decisions, has at most
    /// [`EXACT_NODE_LIMIT`] nodes.
    pub method: Option<PayoffMethod>,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        PolicyOptions {
            method: None,
            mc_samples: 100_000,
            seed: 0,
        }
    }
}

/// Expected payoff of setting every decision to the assigned level as an
/// intervention.
pub fn expected_payoff(id: &InfluenceDiagram, assignment: &BTreeMap<String, String>, opts: &PolicyOptions) -> Result<f64> {
    if opts.mc_samples == 0 {
        return Err(Error::invalid("mc_samples must be positive"));
    }
    let levels = id.resolve(assignment)?;
    id.evaluate(&levels, id.method_for(opts), opts.mc_samples, opts.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    /// One level per decision variable, in the diagram's decision order.
    pub levels: Vec<String>,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub decisions: Vec<String>,
    pub method: PayoffMethod,
    /// Sorted by payoff, highest first.
    pub rows: Vec<PolicyRow>,
}

impl PolicyTable {
    pub fn best(&self) -> Option<&PolicyRow> {
        self.rows.first()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.decisions.iter().map(String::as_str).collect();
        header.push("payoff");
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = row.levels.clone();
            rec.push(row.payoff.to_string());
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Evaluates every joint decision and sorts by expected payoff. Assignment
/// `i` (last decision fastest) is simulated with seed `seed + i`; equal
/// payoffs keep that enumeration order.
pub fn learn_policy(id: &InfluenceDiagram, opts: &PolicyOptions) -> Result<PolicyTable> {
    if opts.mc_samples == 0 {
        return Err(Error::invalid("mc_samples must be positive"));
    }
    let total = id.n_assignments();
    if total > MAX_ASSIGNMENTS {
        return Err(Error::invalid(format!(
            "{total} joint decisions exceed the limit of {MAX_ASSIGNMENTS}; use fewer decision variables"
        )));
    }
    let method = id.method_for(opts);
    let mut rows = (0..total)
        .into_par_iter()
        .map(|i| {
            let levels = id.assignment_at(i);
            let payoff = id.evaluate(&levels, method, opts.mc_samples, opts.seed.wrapping_add(i as u64))?;
            let names = id
                .decisions
                .iter()
                .zip(&levels)
                .map(|(&d, &l)| id.bn.levels[d][l].clone())
                .collect();
            Ok(PolicyRow { levels: names, payoff })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.payoff.total_cmp(&a.payoff));
    Ok(PolicyTable {
        decisions: id.decision_vars().into_iter().map(String::from).collect(),
        method,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{Cpt, FitMethod};
    use crate::graph::Dag;

    fn s(x: &str) -> String {
        x.to_string()
    }

    /// D → U with P(U=+ | D=a) = 0.8, P(U=+ | D=b) = 0.3.
    fn binary() -> FittedBn {
        let dag = Dag::from_arcs(vec![s("D"), s("U")], &[(s("D"), s("U"))]).unwrap();
        let cpts = vec![
            Cpt {
                node: s("D"),
                parents: vec![],
                table: vec![vec![0.5, 0.5]],
            },
            Cpt {
                node: s("U"),
                parents: vec![s("D")],
                table: vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            },
        ];
        let levels = vec![vec![s("a"), s("b")], vec![s("+"), s("-")]];
        FittedBn::from_cpts(dag, levels, cpts, FitMethod::Mle, 0.0).unwrap()
    }

    fn pm(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (s(k), *v)).collect()
    }

    #[test]
    fn binary_decision_payoffs() {
        let id = build_diagram(&binary(), "U", &pm(&[("+", 1.0), ("-", -1.0)]), &[s("D")]).unwrap();
        let table = learn_policy(&id, &PolicyOptions::default()).unwrap();
        assert_eq!(table.method, PayoffMethod::Exact);
        assert_eq!(table.rows[0].levels, vec![s("a")]);
        assert!((table.rows[0].payoff - 0.6).abs() < 1e-12);
        assert!((table.rows[1].payoff + 0.4).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_close_to_exact() {
        let id = build_diagram(&binary(), "U", &pm(&[("+", 1.0), ("-", -1.0)]), &[s("D")]).unwrap();
        let opts = PolicyOptions {
            method: Some(PayoffMethod::MonteCarlo),
            mc_samples: 20_000,
            seed: 3,
        };
        let a: BTreeMap<String, String> = [(s("D"), s("a"))].into();
        let est = expected_payoff(&id, &a, &opts).unwrap();
        // Var = 1 - 0.6^2 for a ±1 payoff
        let se = ((1.0 - 0.36) / 20_000f64).sqrt();
        assert!((est - 0.6).abs() < 3.0 * se, "{est}");
        assert_eq!(est, expected_payoff(&id, &a, &opts).unwrap());
    }

    #[test]
    fn diagram_errors() {
        let bn = binary();
        let ok = pm(&[("+", 1.0), ("-", -1.0)]);
        assert!(build_diagram(&bn, "U", &ok, &[]).is_err());
        assert!(build_diagram(&bn, "U", &ok, &[s("U")]).is_err());
        assert!(build_diagram(&bn, "U", &ok, &[s("D"), s("D")]).is_err());
        assert!(build_diagram(&bn, "U", &pm(&[("+", 1.5), ("-", 0.0)]), &[s("D")]).is_err());
        assert!(build_diagram(&bn, "U", &pm(&[("+", 1.0)]), &[s("D")]).is_err());
        assert!(build_diagram(&bn, "U", &pm(&[("+", 1.0), ("-", 0.0), ("?", 0.0)]), &[s("D")]).is_err());
        assert!(build_diagram(&bn, "X", &ok, &[s("D")]).is_err());
    }

    #[test]
    fn spec_round_trip_and_csv() {
        let id = build_diagram(&binary(), "U", &pm(&[("+", 1.0), ("-", -1.0)]), &[s("D")]).unwrap();
        let again = id.spec().build(id.bn()).unwrap();
        assert_eq!(again.spec(), id.spec());
        let table = learn_policy(&id, &PolicyOptions::default()).unwrap();
        let csv = String::from_utf8(table.to_csv().unwrap()).unwrap();
        assert_eq!(csv.lines().next(), Some("D,payoff"));
        assert!(csv.lines().nth(1).unwrap().starts_with("a,0.6"));
    }

    #[test]
    fn assignment_enumeration_is_lexicographic() {
        let bn = binary();
        let id = InfluenceDiagram {
            payoffs: vec![0.0, 0.0],
            utility: 1,
            decisions: vec![0],
            bn,
        };
        assert_eq!(id.assignment_at(0), vec![0]);
        assert_eq!(id.assignment_at(1), vec![1]);
    }
}
