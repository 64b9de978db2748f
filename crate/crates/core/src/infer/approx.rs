use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sample::draw;
use super::{mean_and_sd, InferenceMethod, InferenceResult, Query};
use crate::error::{Error, Result};
use crate::fit::FittedBn;

/// One likelihood-weighting estimate of the event's posterior.
fn lw_repeat(
    bn: &FittedBn,
    order: &[usize],
    event: usize,
    evidence: &[(usize, usize)],
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; bn.len()];
    let mut acc = vec![0.0; bn.levels[event].len()];
    for &(v, l) in evidence {
        assignment[v] = l;
    }
    for _ in 0..samples {
        let mut w = 1.0;
        for &v in order {
            let row = bn.cpts[v].row(bn.config_of(v, &assignment));
            match evidence.iter().find(|e| e.0 == v) {
                Some(&(_, l)) => w *= row[l],
                None => assignment[v] = draw(row, &mut rng),
            }
        }
        acc[assignment[event]] += w;
    }
    let total: f64 = acc.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EvidenceUnreachable);
    }
    Ok(acc.into_iter().map(|x| x / total).collect())
}

/// Likelihood weighting repeated `repeats` times (repeat `i` seeded with
/// `seed + i`); reports the mean estimate and per-level standard deviation.
pub fn approx_query(
    bn: &FittedBn,
    q: &Query,
    samples_per_repeat: usize,
    repeats: usize,
    seed: u64,
) -> Result<InferenceResult> {
    if samples_per_repeat == 0 || repeats == 0 {
        return Err(Error::invalid("samples_per_repeat and repeats must be positive"));
    }
    let (event, evidence) = q.resolve(bn)?;
    let mut targets = vec![event];
    targets.extend(evidence.iter().map(|e| e.0));
    let relevant = bn.dag.ancestral_set(&targets);
    let order: Vec<usize> = bn
        .dag
        .topological_order()
        .expect("fitted graph is acyclic")
        .into_iter()
        .filter(|v| relevant.contains(v))
        .collect();
    let estimates = (0..repeats)
        .into_par_iter()
        .map(|i| lw_repeat(bn, &order, event, &evidence, samples_per_repeat, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let (distribution, sd) = mean_and_sd(&estimates);
    Ok(InferenceResult {
        method: InferenceMethod::Approximate,
        event: q.event.clone(),
        levels: bn.levels[event].clone(),
        distribution,
        error_bars: Some(sd),
        repeats,
        samples_per_repeat,
    })
}
