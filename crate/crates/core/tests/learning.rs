mod common;

use cbench_core::dataset::Dataset;
use cbench_core::graph::{to_cpdag, ArcConstraints, Dag};
use cbench_core::infer::sample;
use cbench_core::learn::{
    averaged_network, bootstrap_learn, chow_liu, grow_shrink, hill_climb, learn, pc_stable, tabu, validate,
    Algorithm, BootstrapConfig, SearchConfig, StructureSource, ValidationMode,
};
use cbench_core::score::{network_score, ScoreKind, ScoreSpec};
use common::*;

fn cfg(algorithm: Algorithm) -> SearchConfig {
    SearchConfig::new(algorithm)
}

fn dependent_pair(seed: u64) -> Dataset {
    let mut bn = random_bn(2, 2, 1.0, seed);
    // make the dependence strong regardless of the random draw
    let child = if bn.dag.parents(0).is_empty() { 1 } else { 0 };
    bn.cpts[child].table = vec![vec![0.9, 0.1], vec![0.15, 0.85]];
    sample(&bn, 10_000, seed).unwrap()
}

fn best_score(ds: &Dataset, spec: &ScoreSpec) -> f64 {
    let nodes: Vec<String> = ds.variable_names().iter().map(|s| s.to_string()).collect();
    let dags = all_three_node_dags(&nodes);
    assert_eq!(dags.len(), 25);
    dags.iter()
        .map(|d| network_score(ds, d, spec).unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn hc_recovers_the_dependent_pair_up_to_equivalence() {
    let ds = dependent_pair(1);
    let dag = hill_climb(&ds, &cfg(Algorithm::Hc)).unwrap();
    let cp = to_cpdag(&dag);
    assert!(cp.directed.is_empty());
    assert_eq!(cp.undirected.len(), 1);
}

#[test]
fn blacklisting_every_pair_gives_the_empty_graph() {
    let ds = sample(&random_bn(3, 2, 1.0, 4), 2_000, 0).unwrap();
    let nodes = ds.variable_names();
    let mut black = Vec::new();
    for a in &nodes {
        for b in &nodes {
            if a != b {
                black.push((a.to_string(), b.to_string()));
            }
        }
    }
    let mut c = cfg(Algorithm::Hc);
    c.constraints = ArcConstraints::new(black, []);
    for alg in [Algorithm::Hc, Algorithm::Tabu, Algorithm::Gs, Algorithm::PcStable, Algorithm::ChowLiu] {
        c.algorithm = alg;
        assert_eq!(learn(&ds, &c).unwrap().dag.n_arcs(), 0, "{alg:?}");
    }
}

#[test]
fn whitelisted_arc_survives_on_independent_data() {
    let ds = weighted(
        &["A", "B"],
        &[(vec!["x", "x"], 25), (vec!["x", "y"], 25), (vec!["y", "x"], 25), (vec!["y", "y"], 25)],
    );
    let mut c = cfg(Algorithm::Hc);
    c.constraints = ArcConstraints::new([], [(s("A"), s("B"))]);
    for alg in [Algorithm::Hc, Algorithm::Tabu, Algorithm::Gs, Algorithm::PcStable, Algorithm::ChowLiu] {
        c.algorithm = alg;
        let dag = learn(&ds, &c).unwrap().dag;
        assert!(dag.has_arc("A", "B"), "{alg:?}");
    }
}

#[test]
fn tabu_escapes_the_xor_trap() {
    let ds = noisy_xor();
    let spec = ScoreSpec::new(ScoreKind::Bic);
    let hc = learn(&ds, &cfg(Algorithm::Hc)).unwrap();
    assert_eq!(hc.dag.n_arcs(), 0, "greedy ascent from the empty graph is stuck");
    let tb = learn(&ds, &cfg(Algorithm::Tabu)).unwrap();
    assert!((tb.score - best_score(&ds, &spec)).abs() < 1e-9);
    assert!(tb.score > hc.score);
}

#[test]
fn tabu_never_worse_than_hc_from_the_same_start() {
    for (i, ds) in three_node_corpus().iter().enumerate() {
        for kind in [ScoreKind::Bic, ScoreKind::Bde, ScoreKind::Aic] {
            let mut c = cfg(Algorithm::Hc);
            c.score = ScoreSpec::new(kind);
            let hc = learn(ds, &c).unwrap();
            c.algorithm = Algorithm::Tabu;
            let tb = learn(ds, &c).unwrap();
            assert!(tb.score >= hc.score - 1e-9, "dataset {i} {kind:?}");
        }
    }
}

#[test]
fn search_reaches_the_enumerated_optimum() {
    for (i, ds) in three_node_corpus().iter().enumerate() {
        for spec in [ScoreSpec::new(ScoreKind::Bic), ScoreSpec::new(ScoreKind::Bde)] {
            let best = best_score(ds, &spec);
            let mut c = cfg(Algorithm::Hc);
            c.score = spec;
            c.restarts = 3;
            let hc = learn(ds, &c).unwrap();
            c.algorithm = Algorithm::Tabu;
            let tb = learn(ds, &c).unwrap();
            assert!((hc.score - best).abs() < 1e-9, "hc dataset {i} {spec:?}: {} vs {best}", hc.score);
            assert!((tb.score - best).abs() < 1e-9, "tabu dataset {i} {spec:?}: {} vs {best}", tb.score);
        }
    }
}

#[test]
fn bdeu_is_score_equivalent() {
    for (i, ds) in three_node_corpus().iter().enumerate() {
        let nodes: Vec<String> = ds.variable_names().iter().map(|s| s.to_string()).collect();
        let dags = all_three_node_dags(&nodes);
        for iss in [1.0, 10.0] {
            let spec = ScoreSpec::with_iss(ScoreKind::Bde, iss);
            for a in &dags {
                for b in &dags {
                    if equivalence_key(a) == equivalence_key(b) {
                        let (sa, sb) = (network_score(ds, a, &spec).unwrap(), network_score(ds, b, &spec).unwrap());
                        assert!((sa - sb).abs() < 1e-9, "dataset {i}: {sa} vs {sb}");
                    }
                }
            }
        }
    }
}

#[test]
fn every_learner_respects_constraints_and_acyclicity() {
    let bn = random_bn(5, 2, 0.5, 21);
    let ds = sample(&bn, 3_000, 2).unwrap();
    let constraints = ArcConstraints::new([(s("X0"), s("X1")), (s("X2"), s("X3"))], [(s("X4"), s("X0"))]);
    for alg in [Algorithm::Hc, Algorithm::Tabu, Algorithm::Gs, Algorithm::PcStable, Algorithm::ChowLiu] {
        let mut c = cfg(alg);
        c.constraints = constraints.clone();
        c.restarts = 2;
        let dag = learn(&ds, &c).unwrap().dag;
        assert!(dag.topological_order().is_some(), "{alg:?}");
        assert!(constraints.allows(&dag), "{alg:?}");
    }
}

#[test]
fn max_parents_is_honoured_by_search() {
    let ds = sample(&random_bn(5, 2, 0.9, 8), 5_000, 1).unwrap();
    let mut c = cfg(Algorithm::Hc);
    c.max_parents = Some(1);
    c.score = ScoreSpec::new(ScoreKind::Aic);
    for alg in [Algorithm::Hc, Algorithm::Tabu] {
        c.algorithm = alg;
        let dag = learn(&ds, &c).unwrap().dag;
        assert!((0..dag.len()).all(|v| dag.parents(v).len() <= 1));
    }
}

#[test]
fn search_is_deterministic_per_seed() {
    let ds = sample(&random_bn(6, 2, 0.4, 3), 2_000, 3).unwrap();
    let mut c = cfg(Algorithm::Hc);
    c.restarts = 4;
    c.seed = 17;
    assert_eq!(learn(&ds, &c).unwrap(), learn(&ds, &c).unwrap());
    let t = tabu(&ds, &c).unwrap();
    assert_eq!(t, tabu(&ds, &c).unwrap());
}

fn v_structure() -> Dataset {
    let dag = Dag::from_arcs(names(&["X0", "X1", "X2"]), &[(s("X0"), s("X2")), (s("X1"), s("X2"))]).unwrap();
    let mut bn = random_bn(3, 2, 0.0, 0);
    bn.dag = dag;
    bn.cpts[0].table = vec![vec![0.5, 0.5]];
    bn.cpts[1].table = vec![vec![0.5, 0.5]];
    bn.cpts[2].parents = names(&["X0", "X1"]);
    bn.cpts[2].table = vec![vec![0.95, 0.05], vec![0.3, 0.7], vec![0.3, 0.7], vec![0.05, 0.95]];
    let bn = cbench_core::fit::FittedBn::from_cpts(bn.dag, bn.levels, bn.cpts, bn.method, 0.0).unwrap();
    let ds = sample(&bn, 10_000, 4).unwrap();
    rename(ds, &["A", "B", "C"])
}

fn chain_data() -> Dataset {
    let mut bn = random_bn(3, 2, 0.0, 0);
    bn.dag = Dag::from_arcs(names(&["X0", "X1", "X2"]), &[(s("X0"), s("X1")), (s("X1"), s("X2"))]).unwrap();
    bn.cpts[0].table = vec![vec![0.5, 0.5]];
    bn.cpts[1].parents = names(&["X0"]);
    bn.cpts[1].table = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
    bn.cpts[2].parents = names(&["X1"]);
    bn.cpts[2].table = vec![vec![0.85, 0.15], vec![0.2, 0.8]];
    let bn = cbench_core::fit::FittedBn::from_cpts(bn.dag, bn.levels, bn.cpts, bn.method, 0.0).unwrap();
    rename(sample(&bn, 10_000, 5).unwrap(), &["A", "B", "C"])
}

fn rename(ds: Dataset, to: &[&str]) -> Dataset {
    let cols = ds
        .columns()
        .iter()
        .zip(to)
        .map(|(c, n)| {
            cbench_core::dataset::Column::factor(*n, c.levels().unwrap().to_vec(), c.codes().unwrap().to_vec())
                .unwrap()
        })
        .collect();
    Dataset::new("renamed", cols).unwrap()
}

#[test]
fn constraint_learners_on_textbook_structures() {
    let independent = weighted(
        &["A", "B"],
        &[(vec!["x", "x"], 250), (vec!["x", "y"], 250), (vec!["y", "x"], 250), (vec!["y", "y"], 250)],
    );
    let vs = v_structure();
    let ch = chain_data();
    for learner in [grow_shrink, pc_stable] {
        let c = cfg(Algorithm::Gs);
        assert_eq!(learner(&independent, &c).unwrap().n_arcs(), 0);

        let d = learner(&vs, &c).unwrap();
        assert!(d.has_arc("A", "C") && d.has_arc("B", "C"));
        assert_eq!(d.n_arcs(), 2);

        let d = learner(&ch, &c).unwrap();
        assert_eq!(d.n_arcs(), 2);
        assert!(d.adjacent_idx(0, 1) && d.adjacent_idx(1, 2) && !d.adjacent_idx(0, 2));
    }
}

#[test]
fn pc_on_five_independent_variables() {
    let bn = random_bn(5, 2, 0.0, 6);
    let ds = sample(&bn, 5_000, 6).unwrap();
    assert_eq!(pc_stable(&ds, &cfg(Algorithm::PcStable)).unwrap().n_arcs(), 0);
}

#[test]
fn pc_extension_respects_the_blacklist() {
    // chain A - B - C has no v-structure, so orientation comes from the
    // extension step alone
    let ds = chain_data();
    let mut c = cfg(Algorithm::PcStable);
    c.constraints = ArcConstraints::new([(s("A"), s("B")), (s("C"), s("B"))], []);
    let d = pc_stable(&ds, &c).unwrap();
    assert!(d.has_arc("B", "A") && d.has_arc("B", "C"));
}

#[test]
fn chow_liu_trees() {
    let two = dependent_pair(2);
    assert_eq!(chow_liu(&two).unwrap().n_arcs(), 1);

    // A strongly tied to B, more loosely to C; B and C only through A
    let ds = chain_data();
    let ds = rename(ds, &["B", "A", "C"]);
    let t = chow_liu(&ds).unwrap();
    assert_eq!(t.n_arcs(), 2);
    assert!(t.adjacent_idx(0, 1) && t.adjacent_idx(1, 2));
    // rooted at the first column
    assert!(t.has_arc("B", "A") && t.has_arc("A", "C"));

    let indep = sample(&random_bn(4, 2, 0.0, 3), 500, 0).unwrap();
    assert_eq!(chow_liu(&indep).unwrap().n_arcs(), 3);
}

#[test]
fn bootstrap_is_worker_count_invariant() {
    let ds = sample(&random_bn(5, 2, 0.5, 12), 1_000, 12).unwrap();
    for resample in [true, false] {
        let mut b = BootstrapConfig {
            iterations: 12,
            resample,
            seed: 99,
            ..Default::default()
        };
        let reference = bootstrap_learn(&ds, &cfg(Algorithm::Hc), &b).unwrap();
        for workers in [4, 8] {
            b.workers = workers;
            let other = bootstrap_learn(&ds, &cfg(Algorithm::Hc), &b).unwrap();
            assert_eq!(other.strengths, reference.strengths);
            assert_eq!(other.dags, reference.dags);
        }
    }
}

#[test]
fn averaged_network_shrinks_with_the_edge_threshold() {
    let ds = sample(&random_bn(6, 2, 0.5, 13), 600, 13).unwrap();
    let b = BootstrapConfig {
        iterations: 20,
        ..Default::default()
    };
    let st = bootstrap_learn(&ds, &cfg(Algorithm::Hc), &b).unwrap().strengths;
    for e in &st.arcs {
        assert!((0.0..=1.0).contains(&e.strength) && (0.0..=1.0).contains(&e.direction));
        let back = st.direction(&e.to, &e.from);
        assert!((e.direction + back - 1.0).abs() < 1e-12);
    }
    let mut previous: Option<Vec<(usize, usize)>> = None;
    for step in 0..=20 {
        let t = step as f64 / 20.0;
        let dag = averaged_network(&st, t, 0.51);
        let mut pairs: Vec<(usize, usize)> = dag.arc_indices().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        pairs.sort();
        if let Some(prev) = &previous {
            assert!(pairs.iter().all(|p| prev.contains(p)), "threshold {t} added a pair");
        }
        previous = Some(pairs);
    }
}

#[test]
fn fair_coin_loss_is_ln2() {
    let rows: Vec<(Vec<&str>, usize)> = vec![(vec!["h"], 2_000), (vec!["t"], 2_000)];
    let ds = weighted(&["coin"], &rows);
    let r = validate(&ds, &StructureSource::Learn(cfg(Algorithm::Hc)), ValidationMode::default(), 0).unwrap();
    assert!((r.loss - std::f64::consts::LN_2).abs() < 0.02);
    assert_eq!(r.fold_losses.len(), 10);
}

#[test]
fn deterministic_variable_has_no_loss() {
    let rows: Vec<(Vec<&str>, usize)> = vec![(vec!["a", "x"], 500), (vec!["b", "y"], 500)];
    let ds = weighted(&["A", "B"], &rows);
    let dag = Dag::from_arcs(names(&["A", "B"]), &[(s("A"), s("B"))]).unwrap();
    let r = validate(&ds, &StructureSource::Fixed(dag), ValidationMode::Holdout { fraction: 0.2 }, 1).unwrap();
    assert!(r.variable_loss("B").unwrap() < 0.01);
    let total: f64 = r.per_variable.iter().map(|(_, l)| l).sum();
    assert!((total - r.loss).abs() < 1e-9);
}

#[test]
fn true_structure_beats_the_empty_graph() {
    for trial in 0..5 {
        let bn = random_bn(4, 2, 0.7, 300 + trial);
        let ds = sample(&bn, 1_000, trial).unwrap();
        let truth = validate(&ds, &StructureSource::Fixed(bn.dag.clone()), ValidationMode::default(), trial).unwrap();
        let empty = Dag::empty(bn.nodes().to_vec());
        let base = validate(&ds, &StructureSource::Fixed(empty), ValidationMode::default(), trial).unwrap();
        assert!(truth.loss <= base.loss, "trial {trial}");
    }
}
