use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use cfgtest::coverage::{build_coverage_map, dependents_closure, CoverageMap};
use cfgtest::harness::{ReadEvent, ValueSource};
use cfgtest::io::{parse_properties, serialize_properties};
use cfgtest::{
    compute_diff, register_params, typed_get, AccessTrace, ConfigStore, DependencyKind, ModelError, ParamId, ParamSpec,
    ParamType, Provenance,
};

fn id(s: &str) -> ParamId {
    ParamId::new(s).unwrap()
}

fn node(i: usize) -> ParamId {
    id(&format!("n{i}"))
}

fn key() -> impl Strategy<Value = ParamId> {
    "[a-d]{1,2}(\\.[a-c0-9_-]{1,3}){0,2}".prop_map(|s| id(&s))
}

fn store_with(value: impl Strategy<Value = String>) -> impl Strategy<Value = ConfigStore> {
    prop::collection::btree_map(key(), value, 0..8).prop_map(|m| ConfigStore::from_entries(m, Provenance::Deployed))
}

/// Values the properties format can carry: no line breaks, no surrounding whitespace.
fn serializable_value() -> impl Strategy<Value = String> {
    "([!-~]([ -~]{0,10}[!-~])?)?"
}

/// Reachability by repeated relaxation over an adjacency matrix; edges point
/// from dependee to dependent.
fn reach(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(dependee, dependent) in edges {
        r[dependee][dependent] = true;
    }
    loop {
        let mut changed = false;
        for a in 0..n {
            for b in 0..n {
                if r[a][b] {
                    let row = r[b].clone();
                    for (c, reachable) in row.into_iter().enumerate() {
                        if reachable && !r[a][c] {
                            r[a][c] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return r;
        }
    }
}

fn build(n: usize, edges: &[(usize, usize)]) -> Result<cfgtest::ParamRegistry, ModelError> {
    let specs = (0..n)
        .map(|i| {
            let mut spec = ParamSpec::new(node(i), ParamType::Int);
            for &(dependee, dependent) in edges {
                if dependent == i {
                    spec.add_dependency(DependencyKind::Derives, node(dependee));
                }
            }
            spec
        })
        .collect();
    register_params(specs)
}

fn dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..=7).prop_flat_map(|n| {
        let slots = n * (n - 1) / 2;
        (Just(n), prop::collection::vec(any::<bool>(), slots), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|(n, bits, perm)| {
                let pairs = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
                let edges = pairs.zip(bits).filter(|(_, on)| *on).map(|((a, b), _)| (perm[a], perm[b])).collect();
                (n, edges)
            })
    })
}

fn trace(test: &str, reads: &[ParamId]) -> AccessTrace {
    let mut t = AccessTrace::new(test);
    for p in reads {
        t.reads.push(ReadEvent { param: p.clone(), value: None, source: ValueSource::Default });
    }
    t
}

proptest! {
    #[test]
    fn diff_with_self_is_empty(s in store_with("[a-z0-9 ]{0,5}")) {
        prop_assert!(compute_diff(&s, &s).is_empty());
    }

    #[test]
    fn diff_apply_reconstructs(a in store_with("[a-z0-9]{0,4}"), b in store_with("[a-z0-9]{0,4}")) {
        let d = compute_diff(&a, &b);
        prop_assert_eq!(d.apply(&a), b.clone());
        prop_assert_eq!(d.keys(), compute_diff(&b, &a).keys());
        let touched: BTreeSet<ParamId> = a.keys().chain(b.keys()).filter(|k| a.get_raw(k) != b.get_raw(k)).cloned().collect();
        prop_assert_eq!(d.keys(), touched);
    }

    #[test]
    fn properties_roundtrip(s in store_with(serializable_value())) {
        let parsed = parse_properties(&serialize_properties(&s)).unwrap();
        prop_assert!(parsed.warnings.is_empty());
        prop_assert_eq!(parsed.store, s);
    }

    #[test]
    fn typed_get_is_deterministic(raw in "[ -~]{0,6}", ty in prop::sample::select(vec![
        ParamType::Int, ParamType::Float, ParamType::Bool, ParamType::Port, ParamType::DurationMs, ParamType::String,
    ])) {
        let reg = register_params(vec![ParamSpec::new(id("p"), ty.clone())]).unwrap();
        let store = ConfigStore::default().with_value("p", raw.clone()).unwrap();
        let first = typed_get(&store, &reg, &id("p"));
        prop_assert_eq!(&first, &typed_get(&store, &reg, &id("p")));
        prop_assert_eq!(first.ok(), ty.parse(&raw));
    }

    /// Acceptance agrees with an independent classifier: accepted exactly
    /// when names are unique, defaults parse, dependees exist and the graph
    /// has no cycle.
    #[test]
    fn register_params_matches_classifier(
        n in 1usize..6,
        dup in any::<bool>(),
        edges in prop::collection::vec((0usize..7, 0usize..6), 0..8),
        defaults in prop::collection::vec(prop::option::of(prop::sample::select(vec!["1", "-4", "x", "1.5"])), 6),
    ) {
        let mut specs = Vec::new();
        for (i, default) in defaults.iter().enumerate().take(n) {
            let mut spec = ParamSpec::new(node(i), ParamType::Int);
            if let Some(d) = default {
                spec = spec.with_default(*d);
            }
            for &(dependee, dependent) in &edges {
                if dependent == i {
                    spec.add_dependency(DependencyKind::Enables, node(dependee));
                }
            }
            specs.push(spec);
        }
        if dup {
            specs.push(ParamSpec::new(node(0), ParamType::Bool));
        }
        let bad_default = defaults[..n].iter().flatten().any(|d| d.parse::<i64>().is_err());
        let live: Vec<(usize, usize)> = edges.iter().copied().filter(|&(_, b)| b < n).collect();
        let dangling = live.iter().any(|&(a, _)| a >= n);
        let cyclic = !dangling && {
            let r = reach(n, &live);
            live.iter().any(|&(a, b)| r[b][a])
        };
        let expect_ok = !dup && !bad_default && !dangling && !cyclic;
        let got = register_params(specs);
        prop_assert_eq!(got.is_ok(), expect_ok, "{:?}", got.err());
    }

    #[test]
    fn closure_matches_reachability((n, edges) in dag(), seeds in prop::collection::btree_set(0usize..7, 0..4)) {
        let reg = build(n, &edges).unwrap();
        let seeds: BTreeSet<usize> = seeds.into_iter().filter(|s| *s < n).collect();
        let r = reach(n, &edges);
        let expect: BTreeSet<ParamId> = (0..n).filter(|t| seeds.iter().any(|s| r[*s][*t])).map(node).collect();
        let got = dependents_closure(&seeds.iter().map(|s| node(*s)).collect(), &reg).unwrap();
        prop_assert_eq!(&got, &expect);
        prop_assert_eq!(dependents_closure(&got, &reg).unwrap(), got);
    }

    #[test]
    fn closure_is_monotone((n, edges) in dag(), a in prop::collection::btree_set(0usize..7, 0..4), b in prop::collection::btree_set(0usize..7, 0..4)) {
        let reg = build(n, &edges).unwrap();
        let small: BTreeSet<ParamId> = a.iter().filter(|s| **s < n).map(|s| node(*s)).collect();
        let large: BTreeSet<ParamId> = small.iter().cloned().chain(b.iter().filter(|s| **s < n).map(|s| node(*s))).collect();
        let cs = dependents_closure(&small, &reg).unwrap();
        let cl = dependents_closure(&large, &reg).unwrap();
        prop_assert!(cs.is_subset(&cl));
        prop_assert!(small.is_subset(&cs));
    }

    #[test]
    fn coverage_only_grows(
        reads in prop::collection::vec(prop::collection::vec(0usize..5, 0..4), 1..6),
        pinned in prop::collection::btree_set(0usize..5, 0..3),
    ) {
        let traces: Vec<AccessTrace> = reads
            .iter()
            .enumerate()
            .map(|(i, r)| trace(&format!("t{i}"), &r.iter().map(|p| node(*p)).collect::<Vec<_>>()))
            .collect();
        let pins: BTreeMap<String, BTreeSet<ParamId>> =
            BTreeMap::from([("t0".to_string(), pinned.iter().map(|p| node(*p)).collect())]);
        let mut prev = CoverageMap::new().pairs();
        for k in 1..=traces.len() {
            let map = build_coverage_map(&traces[..k], &pins);
            prop_assert!(prev.is_subset(&map.pairs()));
            prev = map.pairs();
        }
        let full = build_coverage_map(&traces, &pins);
        let (head, tail) = traces.split_at(traces.len() / 2);
        let mut left = build_coverage_map(head, &pins);
        let right = build_coverage_map(tail, &pins);
        let mut swapped = right.clone();
        swapped.merge(&left);
        left.merge(&right);
        prop_assert_eq!(&left, &full);
        prop_assert_eq!(&swapped, &full);
        for p in &pinned {
            prop_assert!(!full.covers(&node(*p), "t0"));
        }
    }
}
