//! Ladder trees, pairings and Anderson–Feynman multigraphs.
//!
//! A ladder tree `I_n` is a directed path with two leaves and `n` noise
//! vertices. Pairing noise vertices and quotienting produces a diagram whose
//! internal vertices have degree four; unpaired noise vertices survive as
//! noise leaves. Labels follow a fixed traversal: each tree is walked from its
//! bottom leaf upward and every newly visited vertex gets the next integer.

mod graph;
pub mod iso;
pub mod named;
mod trees;

pub use graph::{
    anderson_type, cardinality, contains, members, parse_rational, rational_to_string, set_of, singleton, Edge,
    FeynmanDiagram, Label, Leg, VertexSet, MAX_LABEL,
};
pub use iso::{canonical_form, canonical_form_with, canonical_key, canonicalize, is_isomorphic, CanonicalLabel, DiagramKey, IsoOptions, LegMode};
pub use named::named;
pub use trees::{
    build, build_paired_diagram, enumerate_pairings, label_positions, ladder_tree, moment_expansion, pairing_from, trees_from_sizes,
    LadderTree, PairedDiagram, Pairing, PairingMode, TreeVertex,
};

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial(n: usize) -> usize {
        (1..=n).rev().step_by(2).product::<usize>().max(1)
    }

    #[test]
    fn ladder_trees_have_expected_shape() {
        let t0 = ladder_tree(0);
        assert_eq!(t0.internal().count(), 0);
        assert_eq!(t0.edges(), vec![(0, 1)]);
        let t2 = ladder_tree(2);
        assert_eq!(t2.internal().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(t2.leaves(), [0, 3]);
        assert_eq!(t2.edges().len(), 3);
        let t5 = ladder_tree(5);
        assert_eq!(t5.internal().count(), 5);
        assert_eq!(t5.edges().len(), 6);
        assert_eq!(t5.leaves(), [0, 6]);
    }

    #[test]
    fn pairing_counts() {
        let internal2 = enumerate_pairings(&[ladder_tree(2)], PairingMode::Internal).unwrap();
        assert_eq!(internal2.len(), 2);
        let internal3 = enumerate_pairings(&[ladder_tree(3)], PairingMode::Internal).unwrap();
        assert_eq!(internal3.len(), 4);
        let c22 = enumerate_pairings(&trees_from_sizes(&[2, 2]), PairingMode::Complete).unwrap();
        assert_eq!(c22.len(), 3);
        let odd = enumerate_pairings(&trees_from_sizes(&[1, 2]), PairingMode::Complete).unwrap();
        assert!(odd.is_empty());
        assert!(enumerate_pairings(&trees_from_sizes(&[1, 1]), PairingMode::Internal).is_err());
    }

    #[test]
    fn complete_pairing_count_is_double_factorial() {
        for n in 0..=10usize {
            for m in 0..=(10 - n) {
                let got = enumerate_pairings(&trees_from_sizes(&[n, m]), PairingMode::Complete).unwrap().len();
                let want = match n + m {
                    0 => 1,
                    t if t % 2 == 0 => double_factorial(t - 1),
                    _ => 0,
                };
                assert_eq!(got, want, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn internal_pairings_match_brute_force() {
        // partial matchings of an n-set counted by the telephone recursion
        let mut tel = vec![1usize, 1];
        for n in 2..=8 {
            tel.push(tel[n - 1] + (n - 1) * tel[n - 2]);
        }
        for n in 0..=8 {
            let got = enumerate_pairings(&[ladder_tree(n)], PairingMode::Internal).unwrap().len();
            assert_eq!(got, tel[n]);
        }
    }

    #[test]
    fn tadpole_shape() {
        let d = named("tadpole").unwrap();
        assert_eq!(d.internal(), &[1]);
        assert_eq!(d.leaves(), &[0, 2]);
        assert_eq!(d.edges(), &[Edge::new(1, 1, 1)]);
        assert_eq!(d.legs().len(), 2);
        assert_eq!(d.vertex_degree(1), 4);
    }

    #[test]
    fn star_and_bubble_shapes() {
        let star = named("star").unwrap();
        assert_eq!(star.internal().len(), 1);
        assert_eq!(star.legs().len(), 4);
        assert!(star.edges().is_empty());
        let bubble = named("bubble4").unwrap();
        assert_eq!(bubble.internal().len(), 2);
        assert_eq!(bubble.edge_count(), 2);
        assert_eq!(bubble.legs().len(), 4);
    }

    #[test]
    fn chain2sunset_labels_follow_traversal() {
        let d = named("chain2sunset").unwrap();
        assert_eq!(d.internal(), &[1, 2, 3, 4]);
        assert_eq!(d.leaves(), &[0, 5]);
        let want = vec![
            Edge::new(1, 2, 2),
            Edge::new(2, 1, 1),
            Edge::new(2, 3, 1),
            Edge::new(3, 4, 2),
            Edge::new(4, 3, 1),
        ];
        assert_eq!(d.edges(), want.as_slice());
    }

    #[test]
    fn nested4_edges() {
        let d = named("nested4").unwrap();
        assert_eq!(d.internal(), &[1, 2, 3, 4]);
        let want = vec![
            Edge::new(1, 2, 2),
            Edge::new(2, 3, 1),
            Edge::new(2, 4, 1),
            Edge::new(3, 1, 1),
            Edge::new(3, 4, 1),
        ];
        assert_eq!(d.edges(), want.as_slice());
    }

    #[test]
    fn complete_pairings_give_degree_four() {
        for sizes in [vec![2, 2], vec![3, 3], vec![1, 3, 2], vec![6]] {
            for d in moment_expansion(&trees_from_sizes(&sizes)).unwrap() {
                for &v in d.internal() {
                    assert_eq!(d.vertex_degree(v), 4);
                }
            }
        }
    }

    #[test]
    fn moment_expansion_counts() {
        assert_eq!(moment_expansion(&trees_from_sizes(&[1, 1])).unwrap().len(), 1);
        assert_eq!(moment_expansion(&trees_from_sizes(&[2, 2])).unwrap().len(), 3);
        assert_eq!(moment_expansion(&trees_from_sizes(&[3, 3])).unwrap().len(), 15);
    }

    #[test]
    fn malformed_pairing_is_rejected() {
        let trees = trees_from_sizes(&[2]);
        assert!(pairing_from(&trees, &[((0, 1), (0, 3))]).is_err());
        assert!(pairing_from(&trees, &[((0, 1), (1, 1))]).is_err());
        let other = pairing_from(&trees_from_sizes(&[3]), &[((0, 1), (0, 2))]).unwrap();
        assert!(build_paired_diagram(&trees, &other).is_err());
    }

    #[test]
    fn connected_complete_is_subset() {
        let trees = trees_from_sizes(&[2, 2]);
        let all = enumerate_pairings(&trees, PairingMode::Complete).unwrap();
        let conn = enumerate_pairings(&trees, PairingMode::ConnectedComplete).unwrap();
        assert_eq!(conn.len(), 2);
        for p in &conn {
            assert!(all.contains(p));
            assert!(build(&trees, p).unwrap().is_connected());
        }
    }

    #[test]
    fn isomorphism_examples() {
        let t = named("tadpole").unwrap();
        let moved = t.relabel(&[(1, 7)].into_iter().collect()).unwrap();
        assert!(is_isomorphic(&t, &moved, true));
        assert!(!is_isomorphic(&named("bubble4").unwrap(), &named("sunset2").unwrap(), false));
        let bubble = named("bubble4").unwrap();
        let crossed = named("crossed4").unwrap();
        assert!(!is_isomorphic(&bubble, &crossed, true));
        // the crossed shape reverses one bubble edge, so only the undirected
        // comparison identifies them
        assert!(!is_isomorphic(&bubble, &crossed, false));
        assert_eq!(canonical_key(&bubble, IsoOptions::LOOSE), canonical_key(&crossed, IsoOptions::LOOSE));
    }

    #[test]
    fn canonical_form_is_idempotent() {
        for name in named::NAMES {
            let d = named(name).unwrap();
            for opts in [IsoOptions::STRICT, IsoOptions::LOOSE] {
                let c1 = canonicalize(&d, opts);
                let c2 = canonicalize(&c1, opts);
                assert_eq!(c1, c2, "{name}");
                assert_eq!(canonical_key(&d, opts), canonical_key(&c1, opts));
            }
        }
    }

    #[test]
    fn json_roundtrip_of_named_diagrams() {
        for name in named::NAMES {
            let d = named(name).unwrap();
            let back = FeynmanDiagram::from_json_str(&d.to_json_string()).unwrap();
            assert_eq!(d, back);
        }
    }

    #[test]
    fn json_field_order_and_types() {
        let d = FeynmanDiagram::new(
            4,
            vec![1, 2],
            vec![0, 3],
            vec![Edge::typed(1, 2, 1, num_rational::Rational64::new(-3, 2)), Edge::new(2, 1, 1)],
            vec![Leg { tail: 0, head: 1 }, Leg { tail: 2, head: 3 }],
        )
        .unwrap();
        let s = d.to_json_string();
        assert_eq!(
            s,
            r#"{"d":4,"internal":[1,2],"leaves":[0,3],"edges":[[1,2,1],[2,1,1]],"legs":[[0,1],[2,3]],"types":{"0":"-3/2"}}"#
        );
        assert_eq!(FeynmanDiagram::from_json_str(&s).unwrap(), d);
    }
}
