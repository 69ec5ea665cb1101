//! Randomised invariants across the public API.

use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::sample::Index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use anderson_core::bphz::{extract, rational, zimmermann, FormalSum, Matching};
use anderson_core::bubbles::{heap_orderings, hooklength_count, RootedTree};
use anderson_core::degrees::{
    boundary_counts, classify, compatible, connected_subsets, enumerate_divergences, enumerate_forests, full_degree, Class,
};
use anderson_core::diagrams::{
    build, canonical_key, canonicalize, enumerate_pairings, trees_from_sizes, FeynmanDiagram, IsoOptions, PairingMode,
};
use anderson_core::greens::GreensEvaluator;
use anderson_core::hepp::{
    compatible_assignments, enumerate_hepp_trees, in_sector, locate_sector_for, null_count, sectors_containing, trees_over,
    HeppTree,
};
use anderson_core::valuation::{evaluate_diagram, evaluate_formal_sum, MCConfig, TestFunction};

fn pick(sizes: &[usize], mode: PairingMode, at: Index) -> Option<FeynmanDiagram> {
    let trees = trees_from_sizes(sizes);
    let all = enumerate_pairings(&trees, mode).unwrap();
    if all.is_empty() {
        return None;
    }
    Some(build(&trees, &all[at.index(all.len())]).unwrap())
}

/// A complete pairing of two ladder trees with an even total of at most 8.
fn two_tree_diagram() -> impl Strategy<Value = FeynmanDiagram> {
    (1usize..=4, 1usize..=4, any::<Index>())
        .prop_filter("odd total", |(a, b, _)| (a + b) % 2 == 0)
        .prop_map(|(a, b, at)| pick(&[a, b], PairingMode::Complete, at).unwrap())
}

fn double_factorial(n: usize) -> usize {
    (1..=n).rev().step_by(2).product()
}

fn internal_edge_count(d: &FeynmanDiagram) -> u32 {
    d.edges().iter().map(|e| e.mult).sum()
}

fn random_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..4).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complete_pairings_are_four_regular(d in two_tree_diagram()) {
        for &v in d.internal() {
            prop_assert_eq!(d.vertex_degree(v), 4);
        }
    }

    #[test]
    fn complete_pairing_count_is_double_factorial(a in 1usize..=5, b in 1usize..=5) {
        let all = enumerate_pairings(&trees_from_sizes(&[a, b]), PairingMode::Complete).unwrap();
        let expected = if (a + b) % 2 == 0 { double_factorial(a + b - 1) } else { 0 };
        prop_assert_eq!(all.len(), expected);
    }

    #[test]
    fn connected_pairings_are_connected(a in 1usize..=4, b in 1usize..=4) {
        let trees = trees_from_sizes(&[a, b]);
        let complete = enumerate_pairings(&trees, PairingMode::Complete).unwrap();
        for k in enumerate_pairings(&trees, PairingMode::ConnectedComplete).unwrap() {
            prop_assert!(complete.contains(&k));
            prop_assert!(build(&trees, &k).unwrap().is_connected());
        }
    }

    #[test]
    fn canonical_key_ignores_relabelling(d in two_tree_diagram(), seed in any::<u64>()) {
        let mut labels: Vec<usize> = (0..d.label_bound()).map(|l| l + 7).collect();
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let map: BTreeMap<usize, usize> = (0..d.label_bound()).zip(labels).collect();
        let moved = d.relabel(&map).unwrap();
        for opts in [IsoOptions::STRICT, IsoOptions::LOOSE] {
            prop_assert_eq!(canonical_key(&d, opts), canonical_key(&moved, opts));
            let once = canonicalize(&moved, opts);
            prop_assert_eq!(canonicalize(&once, opts), once);
        }
    }

    #[test]
    fn connected_degree_counts_boundary(d in two_tree_diagram()) {
        for set in connected_subsets(&d) {
            let (inn, out) = boundary_counts(&d, set);
            prop_assert!(inn >= 1 && out >= 1);
            let expected = Rational64::from_integer(-4 + i64::from(inn + out));
            prop_assert_eq!(full_degree(&d, set), expected);
        }
    }

    #[test]
    fn whole_diagram_degree_grows_with_tree_count(sizes in prop::collection::vec(1usize..=3, 2..=3), at in any::<Index>()) {
        prop_assume!(sizes.iter().sum::<usize>() % 2 == 0);
        let d = pick(&sizes, PairingMode::ConnectedComplete, at).unwrap();
        let k = sizes.len() as i64;
        prop_assert_eq!(full_degree(&d, d.internal_set()), Rational64::from_integer(2 * k - 4));
    }

    #[test]
    fn forests_match_brute_force(d in two_tree_diagram()) {
        let divs = enumerate_divergences(&d);
        prop_assume!(divs.len() <= 12);
        let mut brute = 0usize;
        for mask in 0u32..(1 << divs.len()) {
            let members: Vec<u64> = (0..divs.len()).filter(|i| mask >> i & 1 == 1).map(|i| divs[i]).collect();
            let ok = members.iter().enumerate().all(|(i, &a)| members[i + 1..].iter().all(|&b| compatible(a, b)));
            brute += usize::from(ok);
        }
        prop_assert_eq!(enumerate_forests(&d).len(), brute);
        prop_assert_eq!(zimmermann(&d).len(), brute);
    }

    #[test]
    fn extraction_ignores_forest_order(d in two_tree_diagram()) {
        for f in enumerate_forests(&d) {
            let mut rev = f.clone();
            rev.reverse();
            let a = FormalSum::from_terms(vec![(rational(1), extract(&d, &f).unwrap())]);
            let b = FormalSum::from_terms(vec![(rational(1), extract(&d, &rev).unwrap())]);
            prop_assert_eq!(a.signature(Matching::Strict), b.signature(Matching::Strict));
        }
    }

    #[test]
    fn formal_sums_are_linear(d in two_tree_diagram(), a in -5i64..=5, b in -5i64..=5) {
        let fs = zimmermann(&d);
        prop_assert!(fs.add(&fs.scale(&rational(-1))).is_formally_zero());
        let lhs = fs.scale(&rational(a)).add(&fs.scale(&rational(b)));
        let rhs = fs.scale(&rational(a + b));
        prop_assert_eq!(lhs.signature(Matching::Strict), rhs.signature(Matching::Strict));
    }

    #[test]
    fn self_loops_renormalise_to_zero(n in 2usize..=6, at in any::<Index>()) {
        let d = pick(&[n], PairingMode::Internal, at).unwrap();
        prop_assume!(d.has_self_loop());
        prop_assert!(zimmermann(&d).is_formally_zero());
    }

    #[test]
    fn null_count_bounded_on_non_negative(d in two_tree_diagram()) {
        prop_assume!(classify(&d) != Class::Negative);
        let half = internal_edge_count(&d) as usize / 2;
        for t in enumerate_hepp_trees(&d) {
            prop_assert!(null_count(&t, &d).null <= half);
        }
    }

    #[test]
    fn compatible_assignments_are_monotone(m in 2usize..=5, pick_tree in any::<Index>(), cap in 1u32..=5, distinct in any::<bool>()) {
        let labels: Vec<usize> = (1..=m).collect();
        let trees = trees_over(&labels);
        let t = &trees[pick_tree.index(trees.len())];
        for n in compatible_assignments(t, cap, distinct).unwrap() {
            prop_assert!(n.is_compatible(t));
            prop_assert!(n.values.iter().all(|&v| v < cap));
            if distinct {
                prop_assert!(n.is_distinct());
            }
        }
    }

    #[test]
    fn located_sectors_contain_the_points(m in 2usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (1..=m).collect();
        let x: Vec<Vec<f64>> = (0..m).map(|_| random_point(&mut rng)).collect();
        match locate_sector_for(&labels, &x) {
            Ok((t, n)) => prop_assert!(in_sector(&t, &n, &labels, &x).unwrap()),
            // only multi-point configurations can fall outside every sector
            Err(_) => prop_assert!(m >= 3),
        }
    }

    #[test]
    fn distinct_scale_sectors_are_disjoint(m in 3usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (1..=m).collect();
        let x: Vec<Vec<f64>> = (0..m).map(|_| random_point(&mut rng)).collect();
        let hits = sectors_containing(&labels, &x).unwrap();
        prop_assert!(hits.iter().filter(|(_, n)| n.is_distinct()).count() <= 1);
    }

    #[test]
    fn hooklength_counts_heap_orderings(parents in prop::collection::vec(any::<Index>(), 0..9)) {
        let mut parent = vec![None];
        for (i, p) in parents.iter().enumerate() {
            parent.push(Some(p.index(i + 1)));
        }
        let t = RootedTree::from_parents(parent).unwrap();
        prop_assert_eq!(heap_orderings(&t).unwrap(), hooklength_count(&t));
    }

    #[test]
    fn greens_has_lattice_symmetry(x in prop::array::uniform4(-3.0f64..3.0), seed in any::<u64>()) {
        prop_assume!(x.iter().map(|c| c * c).sum::<f64>() > 1e-4);
        let eval = GreensEvaluator::exact();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm = [0usize, 1, 2, 3];
        perm.shuffle(&mut rng);
        let y: [f64; 4] = std::array::from_fn(|i| if rng.gen() { -x[perm[i]] } else { x[perm[i]] });
        let (gx, gy) = (eval.greens(x).unwrap(), eval.greens(y).unwrap());
        prop_assert!(gx > 0.0);
        prop_assert!((gx - gy).abs() <= 1e-10 * gx.abs().max(1.0), "{} vs {}", gx, gy);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn valuation_is_deterministic_and_linear(seed in any::<u64>(), a in -3i64..=3, b in -3i64..=3) {
        let cfg = MCConfig { samples: 4096, seed, ..MCConfig::default() };
        let eps = 2f64.powi(-4);
        let phi = TestFunction::ConstantOne;
        let bubble = anderson_core::diagrams::named("bubble4").unwrap();
        let crossed = anderson_core::diagrams::named("crossed4").unwrap();
        let first = evaluate_diagram(&bubble, eps, &phi, &cfg).unwrap();
        let again = evaluate_diagram(&bubble, eps, &phi, &cfg).unwrap();
        prop_assert_eq!(first.estimate.to_bits(), again.estimate.to_bits());

        let f1 = FormalSum::single(bubble);
        let f2 = FormalSum::single(crossed);
        let mix = f1.scale(&rational(a)).add(&f2.scale(&rational(b)));
        let e1 = evaluate_formal_sum(&f1, eps, &phi, &cfg).unwrap().estimate;
        let e2 = evaluate_formal_sum(&f2, eps, &phi, &cfg).unwrap().estimate;
        let em = evaluate_formal_sum(&mix, eps, &phi, &cfg).unwrap().estimate;
        let expected = a as f64 * e1 + b as f64 * e2;
        prop_assert!((em - expected).abs() <= 1e-9 * (e1.abs() + e2.abs()).max(1.0), "{} vs {}", em, expected);
    }
}

#[test]
fn single_pair_configurations_always_locate() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let x = vec![random_point(&mut rng), random_point(&mut rng)];
        let (t, n) = locate_sector_for(&[1, 2], &x).unwrap();
        assert_eq!(t, HeppTree::parse("(1,2)").unwrap());
        assert!(in_sector(&t, &n, &[1, 2], &x).unwrap());
    }
}

#[test]
fn degree_zero_iff_in_and_out_single() {
    for sizes in [[2usize, 2], [1, 3], [3, 3], [2, 4]] {
        let trees = trees_from_sizes(&sizes);
        for k in enumerate_pairings(&trees, PairingMode::Complete).unwrap() {
            let d = build(&trees, &k).unwrap();
            for set in connected_subsets(&d) {
                let (inn, out) = boundary_counts(&d, set);
                let minus_two = full_degree(&d, set) == Rational64::from_integer(-2);
                assert_eq!(minus_two, inn == 1 && out == 1);
                assert!(!(full_degree(&d, set) + Rational64::from_integer(4)).is_zero());
            }
        }
    }
}
