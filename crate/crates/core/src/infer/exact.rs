use super::{Factor, InferenceMethod, InferenceResult, Query};
use crate::error::{Error, Result};
use crate::fit::FittedBn;

fn cpt_factor(bn: &FittedBn, v: usize) -> Factor {
    let parents = bn.dag.parents(v);
    let mut vars = vec![v];
    vars.extend_from_slice(parents);
    let card: Vec<usize> = vars.iter().map(|&x| bn.levels[x].len()).collect();
    let values = bn.cpts[v].table.iter().flatten().copied().collect();
    Factor { vars, card, values }
}

/// Ancestors (inclusive) of `targets` when the nodes in `cut` lose their
/// parents.
pub(crate) fn relevant(bn: &FittedBn, targets: &[usize], cut: &[usize]) -> Vec<bool> {
    let mut keep = vec![false; bn.len()];
    let mut stack: Vec<usize> = targets.to_vec();
    while let Some(x) = stack.pop() {
        if std::mem::replace(&mut keep[x], true) {
            continue;
        }
        if !cut.contains(&x) {
            stack.extend_from_slice(bn.dag.parents(x));
        }
    }
    keep
}

/// Greedy min-fill elimination order over `vars`; ties by node index.
fn min_fill_order(factors: &[Factor], vars: &[usize], n: usize) -> Vec<usize> {
    let mut adj = vec![vec![false; n]; n];
    for f in factors {
        for &a in &f.vars {
            for &b in &f.vars {
                if a != b {
                    adj[a][b] = true;
                }
            }
        }
    }
    let mut remaining: Vec<usize> = vars.to_vec();
    remaining.sort_unstable();
    let mut order = Vec::with_capacity(remaining.len());
    let mut gone = vec![false; n];
    while !remaining.is_empty() {
        let (best_pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let nb: Vec<usize> = (0..n).filter(|&u| !gone[u] && adj[v][u]).collect();
                let mut fill = 0;
                for (k, &a) in nb.iter().enumerate() {
                    for &b in &nb[k + 1..] {
                        if !adj[a][b] {
                            fill += 1;
                        }
                    }
                }
                (i, fill)
            })
            .min_by_key(|&(i, fill)| (fill, remaining[i]))
            .expect("non-empty");
        let v = remaining.remove(best_pos);
        let nb: Vec<usize> = (0..n).filter(|&u| !gone[u] && adj[v][u]).collect();
        for &a in &nb {
            for &b in &nb {
                if a != b {
                    adj[a][b] = true;
                }
            }
        }
        gone[v] = true;
        order.push(v);
    }
    order
}

/// Posterior of `event` given `evidence` in the network where each node in
/// `clamp` is forced to its level with incoming arcs removed.
pub(crate) fn ve_marginal(
    bn: &FittedBn,
    event: usize,
    evidence: &[(usize, usize)],
    clamp: &[(usize, usize)],
) -> Result<Vec<f64>> {
    let n = bn.len();
    let cut: Vec<usize> = clamp.iter().map(|c| c.0).collect();
    let mut targets = vec![event];
    targets.extend(evidence.iter().map(|e| e.0));
    let keep = relevant(bn, &targets, &cut);
    let mut factors: Vec<Factor> = Vec::new();
    for v in (0..n).filter(|&v| keep[v]) {
        let f = match clamp.iter().find(|c| c.0 == v) {
            Some(&(_, level)) => {
                let mut values = vec![0.0; bn.levels[v].len()];
                values[level] = 1.0;
                Factor {
                    vars: vec![v],
                    card: vec![bn.levels[v].len()],
                    values,
                }
            }
            None => cpt_factor(bn, v),
        };
        factors.push(f);
    }
    for &(v, level) in evidence {
        for f in &mut factors {
            if f.contains(v) {
                *f = f.reduce(v, level);
            }
        }
    }
    let hidden: Vec<usize> = (0..n)
        .filter(|&v| keep[v] && v != event && !evidence.iter().any(|e| e.0 == v))
        .collect();
    for v in min_fill_order(&factors, &hidden, n) {
        let (with, without): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.contains(v));
        factors = without;
        let prod = with.iter().fold(Factor::scalar(1.0), |acc, f| acc.product(f));
        factors.push(prod.sum_out(v));
    }
    let joint = factors.iter().fold(Factor::scalar(1.0), |acc, f| acc.product(f));
    let total: f64 = joint.values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ImpossibleEvidence);
    }
    Ok(joint.values.iter().map(|x| x / total).collect())
}

fn exact_marginal(bn: &FittedBn, event: usize, evidence: &[(usize, usize)]) -> Result<Vec<f64>> {
    ve_marginal(bn, event, evidence, &[])
}

/// Exact posterior by variable elimination on the relevant subnetwork.
pub fn exact_query(bn: &FittedBn, q: &Query) -> Result<InferenceResult> {
    let (event, evidence) = q.resolve(bn)?;
    let distribution = exact_marginal(bn, event, &evidence)?;
    Ok(InferenceResult {
        method: InferenceMethod::Exact,
        event: q.event.clone(),
        levels: bn.levels[event].clone(),
        distribution,
        error_bars: None,
        repeats: 1,
        samples_per_repeat: 0,
    })
}
