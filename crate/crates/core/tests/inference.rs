mod common;

use std::collections::BTreeMap;

use cbench_core::fit::{fit, Cpt, FitMethod, FittedBn};
use cbench_core::graph::Dag;
use cbench_core::infer::{
    approx_query, exact_query, joint_evidence_query, query, sample, InferenceMethod, Query, QueryOptions,
};
use cbench_core::Error;
use common::*;

/// A → B with P(A=t) = 0.5, P(B=t | A=t) = 0.9, P(B=t | A=f) = 0.2.
fn chain() -> FittedBn {
    let dag = Dag::from_arcs(names(&["A", "B"]), &[(s("A"), s("B"))]).unwrap();
    let levels = vec![names(&["t", "f"]), names(&["t", "f"])];
    let cpts = vec![
        Cpt {
            node: s("A"),
            parents: vec![],
            table: vec![vec![0.5, 0.5]],
        },
        Cpt {
            node: s("B"),
            parents: vec![s("A")],
            table: vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        },
    ];
    FittedBn::from_cpts(dag, levels, cpts, FitMethod::Mle, 0.0).unwrap()
}

/// A → C ← B, all binary; C is likely when either parent is on.
fn collider() -> FittedBn {
    let dag = Dag::from_arcs(names(&["A", "B", "C"]), &[(s("A"), s("C")), (s("B"), s("C"))]).unwrap();
    let levels = vec![names(&["t", "f"]); 3];
    let cpts = vec![
        Cpt {
            node: s("A"),
            parents: vec![],
            table: vec![vec![0.3, 0.7]],
        },
        Cpt {
            node: s("B"),
            parents: vec![],
            table: vec![vec![0.4, 0.6]],
        },
        Cpt {
            node: s("C"),
            parents: vec![s("A"), s("B")],
            // (A,B) = (t,t), (f,t), (t,f), (f,f)
            table: vec![vec![0.95, 0.05], vec![0.8, 0.2], vec![0.7, 0.3], vec![0.05, 0.95]],
        },
    ];
    FittedBn::from_cpts(dag, levels, cpts, FitMethod::Mle, 0.0).unwrap()
}

#[test]
fn chain_exact_values() {
    let bn = chain();
    let b = exact_query(&bn, &Query::new("B")).unwrap();
    assert_eq!(b.method, InferenceMethod::Exact);
    assert!((b.prob("t").unwrap() - 0.55).abs() < 1e-12);
    let b_given_a = exact_query(&bn, &Query::new("B").given("A", "t")).unwrap();
    assert!((b_given_a.prob("t").unwrap() - 0.9).abs() < 1e-12);
    let a_given_b = exact_query(&bn, &Query::new("A").given("B", "t")).unwrap();
    assert!((a_given_b.prob("t").unwrap() - 9.0 / 11.0).abs() < 1e-12);
}

#[test]
fn chain_approximate_within_tolerance() {
    let bn = chain();
    let r = approx_query(&bn, &Query::new("B"), 10_000, 30, 7).unwrap();
    assert_eq!(r.method, InferenceMethod::Approximate);
    assert!((r.prob("t").unwrap() - 0.55).abs() <= 0.05);
    let bars = r.error_bars.as_ref().unwrap();
    assert!(bars.iter().all(|&sd| sd > 0.0 && sd < 0.05));
    assert_eq!(r, approx_query(&bn, &Query::new("B"), 10_000, 30, 7).unwrap());
}

#[test]
fn single_repeat_has_zero_error_bars() {
    let r = approx_query(&chain(), &Query::new("B"), 500, 1, 0).unwrap();
    assert_eq!(r.error_bars, Some(vec![0.0, 0.0]));
}

#[test]
fn evidence_on_all_parents_reads_the_cpt_row() {
    let bn = collider();
    let ev: BTreeMap<String, String> = [(s("A"), s("f")), (s("B"), s("t"))].into();
    let exact = joint_evidence_query(&bn, "C", &ev, &QueryOptions::default()).unwrap();
    assert!((exact.distribution[0] - 0.8).abs() < 1e-12);
    let opts = QueryOptions {
        method: Some(InferenceMethod::Approximate),
        ..Default::default()
    };
    let approx = joint_evidence_query(&bn, "C", &ev, &opts).unwrap();
    assert!((approx.distribution[0] - 0.8).abs() <= 0.05);
}

#[test]
fn explaining_away() {
    let bn = collider();
    let c = exact_query(&bn, &Query::new("A").given("C", "t")).unwrap();
    let cb = exact_query(&bn, &Query::new("A").given("C", "t").given("B", "t")).unwrap();
    // P(A=t, C=t) = 0.3 (0.4·0.95 + 0.6·0.7), P(A=f, C=t) = 0.7 (0.4·0.8 + 0.6·0.05)
    assert!((c.prob("t").unwrap() - 0.24 / 0.485).abs() < 1e-12);
    // with B=t: 0.3·0.4·0.95 against 0.7·0.4·0.8
    assert!((cb.prob("t").unwrap() - 0.114 / 0.338).abs() < 1e-12);
    assert!(cb.prob("t").unwrap() < c.prob("t").unwrap());
}

#[test]
fn empty_evidence_is_the_marginal() {
    let bn = collider();
    let joint = joint_evidence_query(&bn, "C", &BTreeMap::new(), &QueryOptions::default()).unwrap();
    assert_eq!(joint.distribution, exact_query(&bn, &Query::new("C")).unwrap().distribution);
}

#[test]
fn impossible_and_unreachable_evidence() {
    let dag = Dag::from_arcs(names(&["A", "B"]), &[(s("A"), s("B"))]).unwrap();
    let levels = vec![names(&["t", "f"]), names(&["t", "f"])];
    let cpts = vec![
        Cpt {
            node: s("A"),
            parents: vec![],
            table: vec![vec![1.0, 0.0]],
        },
        Cpt {
            node: s("B"),
            parents: vec![s("A")],
            table: vec![vec![1.0, 0.0], vec![0.5, 0.5]],
        },
    ];
    let bn = FittedBn::from_cpts(dag, levels, cpts, FitMethod::Mle, 0.0).unwrap();
    let q = Query::new("A").given("B", "f");
    assert!(matches!(exact_query(&bn, &q), Err(Error::ImpossibleEvidence)));
    assert!(matches!(approx_query(&bn, &q, 100, 2, 0), Err(Error::EvidenceUnreachable)));
}

#[test]
fn query_argument_errors() {
    let bn = chain();
    assert!(exact_query(&bn, &Query::new("Z")).is_err());
    assert!(exact_query(&bn, &Query::new("B").given("A", "maybe")).is_err());
    assert!(exact_query(&bn, &Query::new("B").given("B", "t")).is_err());
    assert!(approx_query(&bn, &Query::new("B"), 0, 3, 0).is_err());
}

#[test]
fn exact_matches_full_joint_on_random_networks() {
    for seed in 0..40 {
        let bn = random_bn(5, 3, 0.5, seed);
        for (i, event) in bn.nodes().iter().enumerate() {
            let other = &bn.nodes()[(i + 2) % bn.len()];
            let third = &bn.nodes()[(i + 3) % bn.len()];
            let ev: BTreeMap<String, String> = [(other.clone(), s("l1")), (third.clone(), s("l2"))].into();
            let got = exact_query(&bn, &Query { event: event.clone(), evidence: ev.clone() }).unwrap();
            let want = brute_force(&bn, event, &ev);
            for (g, w) in got.distribution.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9, "seed {seed} event {event}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn error_bars_shrink_with_samples() {
    let bn = random_bn(6, 2, 0.5, 11);
    let q = Query::new("X0").given("X3", "l0");
    let mean_sd = |n: usize| {
        let r = approx_query(&bn, &q, n, 30, 5).unwrap();
        let bars = r.error_bars.unwrap();
        bars.iter().sum::<f64>() / bars.len() as f64
    };
    let ratio = mean_sd(2_000) / mean_sd(8_000);
    assert!((ratio - 2.0).abs() < 0.6, "ratio {ratio}");
}

#[test]
fn default_method_switches_on_size() {
    let small = chain();
    assert_eq!(QueryOptions::default().method_for(&small), InferenceMethod::Exact);
    let alarm = alarm();
    assert_eq!(QueryOptions::default().method_for(&alarm), InferenceMethod::Approximate);
    let r = query(&small, &Query::new("B"), &QueryOptions::default()).unwrap();
    assert_eq!(r.method, InferenceMethod::Exact);
}

#[test]
fn exact_inference_on_alarm_is_local() {
    let bn = alarm();
    let r = exact_query(&bn, &Query::new("BP").given("CO", "NORMAL").given("TPR", "NORMAL")).unwrap();
    let row = {
        let cpt = bn.cpt("BP").unwrap();
        let co = bn.index_of("CO").unwrap();
        let tpr = bn.index_of("TPR").unwrap();
        let lc = bn.level_index("CO", "NORMAL").unwrap();
        let lt = bn.level_index("TPR", "NORMAL").unwrap();
        let (first, second) = (bn.index_of(&cpt.parents[0]).unwrap(), bn.index_of(&cpt.parents[1]).unwrap());
        let level = |v: usize| if v == co { lc } else if v == tpr { lt } else { unreachable!() };
        cpt.table[level(first) + bn.levels[first].len() * level(second)].clone()
    };
    for (g, w) in r.distribution.iter().zip(&row) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn sampling_reproduces_marginals() {
    let bn = random_bn(5, 3, 0.5, 2);
    let ds = sample(&bn, 100_000, 9).unwrap();
    assert_eq!(ds.n_rows(), 100_000);
    assert_eq!(ds, sample(&bn, 100_000, 9).unwrap());
    for node in bn.nodes() {
        let exact = exact_query(&bn, &Query::new(node.clone())).unwrap();
        let col = ds.column(node).unwrap();
        let codes = col.codes().unwrap();
        for (l, p) in exact.distribution.iter().enumerate() {
            let freq = codes.iter().filter(|c| **c == Some(l as u32)).count() as f64 / 1e5;
            assert!((freq - p).abs() < 0.02, "{node} level {l}: {freq} vs {p}");
        }
    }
}

#[test]
fn deterministic_network_samples_a_constant_table() {
    let dag = Dag::from_arcs(names(&["A", "B"]), &[(s("A"), s("B"))]).unwrap();
    let levels = vec![names(&["x", "y"]), names(&["x", "y"])];
    let cpts = vec![
        Cpt {
            node: s("A"),
            parents: vec![],
            table: vec![vec![0.0, 1.0]],
        },
        Cpt {
            node: s("B"),
            parents: vec![s("A")],
            table: vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        },
    ];
    let bn = FittedBn::from_cpts(dag, levels, cpts, FitMethod::Mle, 0.0).unwrap();
    let ds = sample(&bn, 200, 1).unwrap();
    assert!(ds.column("A").unwrap().codes().unwrap().iter().all(|c| *c == Some(1)));
    assert!(ds.column("B").unwrap().codes().unwrap().iter().all(|c| *c == Some(0)));
}

#[test]
fn fit_then_query_end_to_end() {
    // rows chosen so the fitted chain is exactly the hand example
    let ds = weighted(
        &["A", "B"],
        &[
            (vec!["t", "t"], 45),
            (vec!["t", "f"], 5),
            (vec!["f", "t"], 10),
            (vec!["f", "f"], 40),
        ],
    );
    let dag = Dag::from_arcs(names(&["A", "B"]), &[(s("A"), s("B"))]).unwrap();
    let bn = fit(&ds, &dag, FitMethod::Mle, 1.0).unwrap();
    let r = exact_query(&bn, &Query::new("B")).unwrap();
    assert!((r.prob("t").unwrap() - 0.55).abs() < 1e-12);
}
