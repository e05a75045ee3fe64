mod common;

use common::{context, from_rows, permutation, read_fixture};
use lattice_reduce::compare::{
    is_isomorphic, quality_score, quality_score_lattices, redundancy_check, Element,
};
use lattice_reduce::context::{parse_cxt, FormalContext};
use lattice_reduce::lattice::{build_addintent, invariants, ConceptLattice};
use petgraph::graph::DiGraph;
use proptest::prelude::*;

fn hasse(l: &ConceptLattice) -> DiGraph<(), ()> {
    let mut g = DiGraph::new();
    let nodes: Vec<_> = (0..l.len()).map(|_| g.add_node(())).collect();
    for &(lo, up) in l.covers() {
        g.add_edge(nodes[lo], nodes[up], ());
    }
    g
}

fn rows_of(c: &FormalContext) -> Vec<Vec<bool>> {
    (0..c.n_objects())
        .map(|i| (0..c.n_attributes()).map(|j| c.has(i, j)).collect())
        .collect()
}

fn with_duplicate_column(c: &FormalContext, j: usize) -> FormalContext {
    let rows: Vec<Vec<bool>> = rows_of(c)
        .into_iter()
        .map(|mut r| {
            r.push(r[j]);
            r
        })
        .collect();
    from_rows(&rows, c.n_attributes() + 1)
}

/// Second context: unrelated, a relabeling, or one flipped cell.
fn pair() -> impl Strategy<Value = (FormalContext, FormalContext)> {
    context(1, 5, 5).prop_flat_map(|c| {
        let (n, m) = (c.n_objects(), c.n_attributes());
        let c2 = c.clone();
        let c3 = c.clone();
        prop_oneof![
            (Just(c.clone()), context(1, 5, 5)),
            (permutation(n), permutation(m))
                .prop_map(move |(po, pa)| (c2.clone(), c2.permuted(&po, &pa))),
            (0..n, 0..m).prop_map(move |(i, j)| {
                let mut rows = rows_of(&c3);
                rows[i][j] = !rows[i][j];
                (c3.clone(), from_rows(&rows, c3.n_attributes()))
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn isomorphism_matches_vf2((a, b) in pair()) {
        let (la, lb) = (build_addintent(&a), build_addintent(&b));
        let ours = is_isomorphic(&la, &lb).unwrap();
        prop_assert_eq!(ours, petgraph::algo::is_isomorphic(&hasse(&la), &hasse(&lb)));
        prop_assert_eq!(ours, is_isomorphic(&lb, &la).unwrap());
        if ours {
            prop_assert_eq!(invariants(&la), invariants(&lb));
        }
        let q = quality_score_lattices(&la, &lb);
        prop_assert_eq!(q.score, quality_score_lattices(&lb, &la).score);
        prop_assert!((0.0..=1.0).contains(&q.score));
        prop_assert!(q.per_invariant.values().all(|r| (0.0..=1.0).contains(r)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn permutation_invariance((c, po, pa) in context(1, 8, 8).prop_flat_map(|c| {
        let (n, m) = (c.n_objects(), c.n_attributes());
        (Just(c), permutation(n), permutation(m))
    })) {
        let l = build_addintent(&c);
        prop_assert!(is_isomorphic(&l, &l).unwrap());
        prop_assert!(is_isomorphic(&l, &build_addintent(&c.permuted(&po, &pa))).unwrap());
        let r = invariants(&l);
        prop_assert_eq!(quality_score(&r, &r).score, 1.0);
    }

    #[test]
    fn duplicated_attribute_is_redundant((c, j) in context(1, 6, 6).prop_flat_map(|c| {
        let m = c.n_attributes();
        (Just(c), 0..m)
    })) {
        let d = with_duplicate_column(&c, j);
        prop_assert!(redundancy_check(&d, Element::Attribute(c.n_attributes())).unwrap());
        prop_assert!(redundancy_check(&d, Element::Attribute(j)).unwrap());
    }
}

#[test]
fn fixtures_are_self_isomorphic() {
    for name in [
        "cxt/contranominal_4x4.cxt",
        "cxt/full_2x2.cxt",
        "cxt/empty_2x2.cxt",
        "replay/context.cxt",
        "adversarial/context.cxt",
    ] {
        let l = build_addintent(&parse_cxt(&read_fixture(name)).unwrap());
        assert!(is_isomorphic(&l, &l).unwrap(), "{name}");
        assert_eq!(quality_score_lattices(&l, &l).score, 1.0, "{name}");
    }
}
