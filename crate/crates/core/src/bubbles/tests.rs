use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::*;
use crate::bphz::contract;
use crate::degrees::{classify, Class};
use crate::diagrams::{build, enumerate_pairings, ladder_tree, named, set_of, trees_from_sizes, PairingMode};
use crate::error::Error;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Two distinct vertices, nothing inside but two edges between them.
fn oracle_bubble(d: &FeynmanDiagram, v: Label, w: Label) -> bool {
    let inside: Vec<_> = d.edges().iter().filter(|e| e.inside(set_of([v, w]))).collect();
    inside.iter().all(|e| !e.is_loop()) && inside.iter().map(|e| e.mult).sum::<u32>() == 2
}

/// Count contraction chains by contracting bubbles one at a time.
fn count_by_contraction(d: &FeynmanDiagram) -> u128 {
    let v = d.internal();
    if v.len() == 1 {
        return u128::from(d.edges().is_empty());
    }
    let mut total = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if oracle_bubble(d, v[i], v[j]) {
                total += count_by_contraction(&contract(d, set_of([v[i], v[j]])).unwrap());
            }
        }
    }
    total
}

fn connected_complete(max_total: usize) -> Vec<FeynmanDiagram> {
    let mut out = Vec::new();
    for total in (2..=max_total).step_by(2) {
        for n1 in 1..total {
            let trees = trees_from_sizes(&[n1, total - n1]);
            for p in enumerate_pairings(&trees, PairingMode::ConnectedComplete).unwrap() {
                out.push(build(&trees, &p).unwrap());
            }
        }
    }
    out
}

#[test]
fn single_bubbles_are_nested() {
    for name in ["bubble4", "crossed4"] {
        let d = named(name).unwrap();
        assert!(is_nested_bubble(&d), "{name}");
        assert_eq!(count_extraction_sequences(&d), 1);
        let w = nested_bubble_witness(&d).unwrap();
        assert_eq!(w.bubbles, vec![(1, 2)]);
        assert_eq!(w.diagrams.len(), 2);
    }
}

#[test]
fn nested_chain_witness_is_forced() {
    let d = named("c42").unwrap();
    let w = nested_bubble_witness(&d).unwrap();
    assert_eq!(w.bubbles, vec![(1, 2), (1, 3), (1, 4)]);
    let last = w.diagrams.last().unwrap();
    assert_eq!(last.internal(), &[1]);
    assert!(last.edges().is_empty());
    assert_eq!(last.legs().len(), 4);
    assert_eq!(extraction_sequences(&d).len(), 1);
}

#[test]
fn negative_diagrams_are_not_nested() {
    for name in ["sunset2", "chain2sunset", "tadpole", "k4"] {
        let d = named(name).unwrap();
        assert!(!is_nested_bubble(&d), "{name}");
        assert!(nested_bubble_witness(&d).is_none());
        assert!(extraction_sequences(&d).is_empty());
    }
}

#[test]
fn extraction_counts_of_named_examples() {
    assert_eq!(extraction_sequences(&named("cc42plain").unwrap()).len(), 6);
    assert_eq!(extraction_sequences(&named("c42").unwrap()).len(), 1);
    assert_eq!(extraction_sequences(&named("bubble4").unwrap()).len(), 1);
    let star = named("star").unwrap();
    let s = extraction_sequences(&star);
    assert_eq!(s.len(), 1);
    assert!(s[0].is_empty());
}

#[test]
fn parallel_sequences_are_the_six_orders() {
    let d = named("parallel").unwrap();
    let seqs = extraction_sequences(&d);
    let firsts: BTreeSet<_> = seqs.iter().map(|s| s.bubbles[0]).collect();
    // the middle bubble can go first, as can either end
    assert_eq!(firsts.len(), 3);
    for s in &seqs {
        assert_eq!(s.chain.len(), 3);
        assert_eq!(s.chain[2].vertices, d.internal_set());
        assert!(is_valid_sequence(&d, s));
    }
}

#[test]
fn three_formulations_agree() {
    let mut diagrams: Vec<FeynmanDiagram> = crate::diagrams::named::NAMES.iter().map(|n| named(n).unwrap()).collect();
    diagrams.extend(connected_complete(8));
    for d in &diagrams {
        let seqs = extraction_sequences(d);
        assert_eq!(seqs.len() as u128, count_extraction_sequences(d));
        assert_eq!(seqs.len() as u128, count_by_contraction(d));
        let distinct: BTreeSet<_> = seqs.iter().map(|s| s.bubbles.clone()).collect();
        assert_eq!(distinct.len(), seqs.len());
        assert!(seqs.iter().all(|s| is_valid_sequence(d, s)));
    }
}

#[test]
fn corrupted_sequences_are_rejected() {
    let d = named("parallel").unwrap();
    let mut s = extraction_sequences(&d).remove(0);
    s.chain.swap(0, 1);
    assert!(!is_valid_sequence(&d, &s));
    let short = ExtractionSequence { chain: Vec::new(), bubbles: Vec::new() };
    assert!(!is_valid_sequence(&d, &short));
}

#[test]
fn small_tree_factorials() {
    let path = RootedTree::path(3);
    assert_eq!(tree_factorial(&path), 6);
    assert_eq!(heap_orderings(&path).unwrap(), 1);
    let cherry = RootedTree::from_parents(vec![None, Some(0), Some(0)]).unwrap();
    assert_eq!(tree_factorial(&cherry), 3);
    assert_eq!(heap_orderings(&cherry).unwrap(), 2);
    let dot = RootedTree::single();
    assert_eq!(tree_factorial(&dot), 1);
    assert_eq!(heap_orderings(&dot).unwrap(), 1);
}

#[test]
fn malformed_parent_arrays() {
    assert!(RootedTree::from_parents(vec![None, None]).is_err());
    assert!(RootedTree::from_parents(vec![Some(1), Some(0)]).is_err());
    assert!(RootedTree::from_parents(vec![None, Some(5)]).is_err());
    assert!(RootedTree::from_parents(vec![None, Some(2), Some(1)]).is_err());
}

fn increasing_trees(n: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = vec![vec![None]];
    for v in 1..n {
        out = out.into_iter().flat_map(|p| (0..v).map(move |q| {
            let mut p = p.clone();
            p.push(Some(q));
            p
        })).collect();
    }
    out
}

fn next_permutation(a: &mut [usize]) -> bool {
    let Some(i) = (1..a.len()).rev().find(|&i| a[i - 1] < a[i]) else {
        return false;
    };
    let j = (i..a.len()).rev().find(|&j| a[j] > a[i - 1]).unwrap();
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

#[test]
fn hooklength_identity_up_to_nine_nodes() {
    for n in 1..=9 {
        for p in increasing_trees(n) {
            let t = RootedTree::from_parents(p).unwrap();
            assert_eq!(heap_orderings(&t).unwrap(), hooklength_count(&t));
            assert_eq!(factorial(n) % tree_factorial(&t), 0);
        }
    }
}

#[test]
fn heap_orderings_match_permutation_count() {
    for n in 1..=6 {
        for p in increasing_trees(n) {
            let t = RootedTree::from_parents(p).unwrap();
            let mut ell: Vec<usize> = (1..=n).collect();
            let mut brute = 0u128;
            loop {
                if is_heap_ordering(&t, &ell) {
                    brute += 1;
                }
                if !next_permutation(&mut ell) {
                    break;
                }
            }
            assert_eq!(heap_orderings(&t).unwrap(), brute);
        }
    }
}

#[test]
fn heap_ordering_limit() {
    let t = RootedTree::path(MAX_HEAP_NODES + 1);
    assert!(matches!(heap_orderings(&t), Err(Error::BudgetExceeded(_))));
}

#[test]
fn bijection_on_named_examples() {
    for (name, count, trees) in [("bubble4", 1, 1), ("c42", 1, 1), ("cc42plain", 6, 5), ("star", 1, 1)] {
        let d = named(name).unwrap();
        let r = bijection_report(&d);
        assert!(r.holds(), "{name}: {r:?}");
        assert_eq!(r.sequences, count, "{name}");
        assert_eq!(zero_trees(&d).len(), trees, "{name}");
    }
}

#[test]
fn bijection_on_small_contributing_diagrams() {
    for d in connected_complete(8).into_iter().filter(is_contributing) {
        assert!(bijection_check(&d), "{} {:?}", d.to_json_string(), bijection_report(&d));
    }
}

#[test]
fn sequence_images_of_parallel_bubbles() {
    let d = named("parallel").unwrap();
    let images: BTreeSet<(String, Vec<usize>)> = extraction_sequences(&d)
        .iter()
        .map(|s| {
            let (t, ell) = sequence_to_ordered_tree(&d, s);
            (t.to_string(), ell)
        })
        .collect();
    let balanced: Vec<_> = images.iter().filter(|(t, _)| t == "((1,2),(3,4))").collect();
    assert_eq!(balanced.len(), 2);
    assert_eq!(images.len(), 6);
}

#[test]
fn sigma_gamma_examples() {
    let b = sigma_gamma_squared(&named("bubble4").unwrap());
    assert_eq!((b.q.clone(), b.m), (q(1, 1), 1));
    let c = sigma_gamma_squared(&named("c42").unwrap());
    assert_eq!((c.q.clone(), c.m), (q(1, 6), 3));
    let p = sigma_gamma_squared(&named("cc42plain").unwrap());
    assert_eq!((p.q.clone(), p.m), (q(1, 1), 3));
    assert!(sigma_gamma_squared(&named("sunset2").unwrap()).is_zero());
    assert!(sigma_gamma_squared(&named("k4").unwrap()).is_zero());
}

#[test]
fn weight_rendering() {
    let b = sigma_gamma_squared(&named("bubble4").unwrap());
    let oracle = 1.0 / (8.0 * std::f64::consts::PI.powi(2));
    assert!((b.to_f64() - oracle).abs() < 1e-17);
    let s = b.to_decimal(50);
    assert!(s.starts_with("1.2665147955292"), "{s}");
    assert!(s.ends_with("e-2"));
    assert_eq!(s.len(), "1.".len() + 49 + "e-2".len());
    let parsed: f64 = s.parse().unwrap();
    assert!((parsed - oracle).abs() < 1e-17);
    assert_eq!(SymbolicWeight::new(q(1, 3), 0).to_decimal(5), "3.3333e-1");
    assert_eq!(SymbolicWeight::new(q(2, 3), 0).to_decimal(5), "6.6667e-1");
    assert_eq!(SymbolicWeight::new(q(999_996, 100_000), 0).to_decimal(5), "1.0000e1");
    assert_eq!(SymbolicWeight::new(q(4, 1), 0).to_decimal(1), "4e0");
    assert_eq!(SymbolicWeight::zero().to_decimal(5), "0");
}

#[test]
fn weight_addition_requires_matching_power() {
    let a = SymbolicWeight::new(q(1, 2), 2);
    let b = SymbolicWeight::new(q(1, 3), 2);
    assert_eq!(a.checked_add(&b).unwrap(), SymbolicWeight::new(q(5, 6), 2));
    assert_eq!(a.checked_add(&SymbolicWeight::zero()).unwrap(), a);
    assert!(a.checked_add(&SymbolicWeight::new(q(1, 1), 1)).is_err());
}

#[test]
fn effective_coefficients_up_to_three() {
    let t = sigma_eff_coefficients(3, Budget::Default).unwrap();
    let c: Vec<BigRational> = t.coefficients.iter().map(|c| c.c_n.clone()).collect();
    assert_eq!(c, vec![q(1, 1), q(4, 1), q(16, 1)]);
    assert_eq!(t.coefficients[0].weight, SymbolicWeight::new(q(1, 1), 0));
    assert_eq!(t.coefficients[1].contributing, 4);
    // each of the four (n, m) = 4 pairings has a single sequence
    let rows4: Vec<_> = t.rows.iter().filter(|r| r.n1 + r.n2 == 4).collect();
    assert_eq!(rows4.iter().map(|r| r.contributing).collect::<Vec<_>>(), vec![1, 2, 1]);
    let value = t.coefficients[1].weight.to_f64();
    assert!((value - 1.0 / (2.0 * std::f64::consts::PI.powi(2))).abs() < 1e-15);
    assert_eq!(t.rows.iter().filter(|r| r.n1 + r.n2 == 6).map(|r| r.pairings).sum::<usize>(), {
        // connected share of 5 · 15 complete pairings
        connected_complete(6).len() - connected_complete(4).len()
    });
    assert!(t.coefficients.iter().all(EffectiveCoefficient::matches_geometric));
}

#[test]
fn sigma_nm_symmetry_and_parity() {
    for (n, m) in [(1, 3), (2, 4), (1, 5), (3, 5)] {
        assert_eq!(sigma_nm(n, m).unwrap(), sigma_nm(m, n).unwrap());
    }
    for (n, m) in [(1, 2), (2, 3), (1, 4), (3, 4)] {
        assert!(sigma_nm(n, m).unwrap().is_zero());
    }
    let t = sigma_eff_coefficients(2, Budget::Default).unwrap();
    assert_eq!(t.sigma_n(1), Some(&SymbolicWeight::new(q(1, 1), 0)));
    assert_eq!(t.sigma_n(2), Some(&SymbolicWeight::new(q(2, 1), 1)));
    assert!(t.correlation(1, 3).is_none());
    let t = sigma_eff_coefficients(3, Budget::Default).unwrap();
    assert!((t.correlation(2, 2).unwrap() - 1.0).abs() < 1e-12);
    let (a, b, c) = (t.sigma_nm(1, 3).unwrap(), t.sigma_n(1).unwrap(), t.sigma_n(3).unwrap());
    let r = t.correlation(1, 3).unwrap();
    assert!((r - a.to_f64() / (b.to_f64() * c.to_f64()).sqrt()).abs() < 1e-12);
}

#[test]
fn budget_is_enforced() {
    assert!(matches!(sigma_eff_coefficients(6, Budget::Default), Err(Error::BudgetExceeded(_))));
    assert!(matches!(sigma_eff_coefficients(7, Budget::Extended), Err(Error::BudgetExceeded(_))));
    assert!(matches!(sigma_eff_coefficients(0, Budget::Default), Err(Error::InvalidInput(_))));
}

#[test]
fn closed_form_values() {
    let pi = std::f64::consts::PI;
    assert_eq!(sigma_eff_closed_form(0.0, CouplingSign::Real).unwrap(), 1.0);
    assert!((sigma_eff_closed_form(pi, CouplingSign::Real).unwrap() - 2.0).abs() < 1e-14);
    assert!((sigma_eff_closed_form(pi, CouplingSign::Imaginary).unwrap() - 2.0 / 3.0).abs() < 1e-14);
    let edge = 2f64.sqrt() * pi;
    assert!(matches!(sigma_eff_closed_form(edge, CouplingSign::Real), Err(Error::OutOfRadius(_))));
    assert!(matches!(sigma_eff_closed_form(-5.0, CouplingSign::Real), Err(Error::OutOfRadius(_))));
    assert!(sigma_eff_closed_form(10.0, CouplingSign::Imaginary).is_ok());
    assert!(sigma_eff_closed_form(f64::NAN, CouplingSign::Imaginary).is_err());
}

#[test]
fn partial_sums_approach_closed_form() {
    let t = sigma_eff_coefficients(4, Budget::Default).unwrap();
    for sign in [CouplingSign::Real, CouplingSign::Imaginary] {
        let exact = sigma_eff_closed_form(1.0, sign).unwrap();
        let sums = sigma_eff_partial_sums(1.0, sign, &t.coefficients);
        assert_eq!(sums.len(), 4);
        let errs: Vec<f64> = sums.iter().map(|s| (s - exact).abs()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        assert!(errs[3] < 1e-5);
    }
}

#[test]
fn csv_table() {
    let t = sigma_eff_coefficients(2, Budget::Default).unwrap();
    let mut buf = Vec::new();
    write_sigma_csv(&t, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,C_n,sigma_eff_coeff_value,expected,match");
    assert!(lines[1].starts_with("1,1/1,1.0000000000000000000e0,1/1,true"));
    assert!(lines[2].starts_with("2,4/1,5.066059182116888"), "{}", lines[2]);
    assert!(lines[2].ends_with(",4/1,true"));
}

#[test]
fn only_four_leg_diagrams_contribute() {
    for n in [2, 4, 6] {
        let trees = vec![ladder_tree(n)];
        for p in enumerate_pairings(&trees, PairingMode::Complete).unwrap() {
            let d = build(&trees, &p).unwrap();
            assert_eq!(classify(&d), Class::Negative);
            assert!(!is_contributing(&d));
        }
    }
    let trees = trees_from_sizes(&[2, 2, 2]);
    for p in enumerate_pairings(&trees, PairingMode::ConnectedComplete).unwrap() {
        let d = build(&trees, &p).unwrap();
        assert!(!is_nested_bubble(&d));
        assert!(sigma_gamma_squared(&d).is_zero());
    }
}
