//! Power counting: degrees, divergences, forests and classification.
//!
//! Only full subdiagrams on connected vertex sets are enumerated. Dropping
//! part of an edge multiplicity raises the degree by `-t > 0` per unit, so the
//! minimum degree over all subdiagrams on a vertex set is attained by the full
//! one, and every notion below (divergences, primitive blow-ups,
//! classification) only needs full subdiagrams. Subdiagrams without edges are
//! trivial and ignored.

use num_rational::Rational64;
use num_traits::Zero;
use serde::Serialize;

use crate::diagrams::{cardinality, contains, members, singleton, Edge, FeynmanDiagram, VertexSet};
use crate::error::{Error, Result};

/// A subdiagram given by its vertex set and an edge sub-multiset.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subdiagram {
    pub vertices: VertexSet,
    pub edges: Vec<Edge>,
}

impl Subdiagram {
    /// Full subdiagram induced on `vertices`.
    pub fn full(d: &FeynmanDiagram, vertices: VertexSet) -> Self {
        Subdiagram { vertices, edges: d.edges().iter().filter(|e| e.inside(vertices)).cloned().collect() }
    }

    pub fn is_full_in(&self, d: &FeynmanDiagram) -> bool {
        let mut mine = self.edges.clone();
        mine.sort();
        let mut induced: Vec<Edge> = d.edges().iter().filter(|e| e.inside(self.vertices)).cloned().collect();
        induced.sort();
        mine == induced
    }

    fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..64).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.tail), find(&mut parent, e.head));
            parent[a] = b;
        }
        let mut roots: Vec<usize> = members(self.vertices).map(|v| find(&mut parent, v)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }
}

/// Degree `d(|V|-1) + Σ t(e)` summed over connected components.
pub fn degree(sub: &Subdiagram, dim: i64) -> Rational64 {
    degbar(sub, dim) - Rational64::from_integer(dim * (sub.components() as i64 - 1).max(0))
}

/// Degree without the component correction.
pub fn degbar(sub: &Subdiagram, dim: i64) -> Rational64 {
    let n = cardinality(sub.vertices) as i64;
    let mut total = Rational64::from_integer(dim * (n - 1));
    for e in &sub.edges {
        total += e.ty * Rational64::from_integer(e.mult as i64);
    }
    total
}

/// Degree of the full subdiagram on `set`.
pub fn full_degree(d: &FeynmanDiagram, set: VertexSet) -> Rational64 {
    degree(&Subdiagram::full(d, set), d.dim())
}

/// Total internal edge multiplicity with both ends in `set`.
pub fn inner_multiplicity(d: &FeynmanDiagram, set: VertexSet) -> u32 {
    d.edges().iter().filter(|e| e.inside(set)).map(|e| e.mult).sum()
}

/// Incoming and outgoing boundary edge counts of `set`, legs included.
pub fn boundary_counts(d: &FeynmanDiagram, set: VertexSet) -> (u32, u32) {
    let mut incoming = 0;
    let mut outgoing = 0;
    let arcs = d
        .edges()
        .iter()
        .map(|e| (e.tail, e.head, e.mult))
        .chain(d.legs().iter().map(|l| (l.tail, l.head, 1)));
    for (t, h, m) in arcs {
        match (contains(set, t), contains(set, h)) {
            (false, true) => incoming += m,
            (true, false) => outgoing += m,
            _ => {}
        }
    }
    (incoming, outgoing)
}

/// All non-empty subsets of internal vertices connected by internal edges.
pub fn connected_subsets(d: &FeynmanDiagram) -> Vec<VertexSet> {
    let adj = d.internal_adjacency();
    let mut out = Vec::new();
    fn extend(
        adj: &std::collections::BTreeMap<usize, VertexSet>,
        set: VertexSet,
        frontier: VertexSet,
        excluded: VertexSet,
        out: &mut Vec<VertexSet>,
    ) {
        out.push(set);
        let mut excluded = excluded;
        for u in members(frontier) {
            let grown = set | singleton(u);
            let next = (frontier | adj[&u]) & !grown & !excluded & !singleton(u);
            extend(adj, grown, next & !excluded, excluded | singleton(u), out);
            excluded |= singleton(u);
        }
    }
    let mut below: VertexSet = 0;
    for &v in d.internal() {
        extend(&adj, singleton(v), adj[&v] & !below & !singleton(v), below, &mut out);
        below |= singleton(v);
    }
    out.sort_unstable_by_key(|&s| (cardinality(s), s));
    out
}

/// Connected full subdiagrams with at least one edge.
pub fn nontrivial_subsets(d: &FeynmanDiagram) -> Vec<VertexSet> {
    connected_subsets(d).into_iter().filter(|&s| inner_multiplicity(d, s) > 0).collect()
}

/// Connected, full, strictly negative subdiagrams, smallest first.
pub fn enumerate_divergences(d: &FeynmanDiagram) -> Vec<VertexSet> {
    nontrivial_subsets(d)
        .into_iter()
        .filter(|&s| full_degree(d, s) < Rational64::zero())
        .collect()
}

/// A set of divergences, each given by its vertex set.
pub type Forest = Vec<VertexSet>;

pub fn compatible(a: VertexSet, b: VertexSet) -> bool {
    a & b == 0 || a & b == a || a & b == b
}

pub fn is_forest(f: &[VertexSet]) -> bool {
    f.iter().enumerate().all(|(i, &a)| f[i + 1..].iter().all(|&b| a != b && compatible(a, b)))
}

pub fn check_forest(f: &[VertexSet]) -> Result<()> {
    if is_forest(f) {
        Ok(())
    } else {
        Err(Error::InvalidForest(format!("{f:?} has overlapping members")))
    }
}

/// All forests drawn from `divs`, the empty forest first.
pub fn forests_of(divs: &[VertexSet]) -> Vec<Forest> {
    let mut out = Vec::new();
    fn rec(divs: &[VertexSet], i: usize, acc: &mut Forest, out: &mut Vec<Forest>) {
        if i == divs.len() {
            out.push(acc.clone());
            return;
        }
        rec(divs, i + 1, acc, out);
        if acc.iter().all(|&a| compatible(a, divs[i])) {
            acc.push(divs[i]);
            rec(divs, i + 1, acc, out);
            acc.pop();
        }
    }
    rec(divs, 0, &mut Vec::new(), &mut out);
    out.sort_by_key(|f| f.len());
    out
}

pub fn enumerate_forests(d: &FeynmanDiagram) -> Vec<Forest> {
    forests_of(&enumerate_divergences(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Class {
    Positive,
    Negative,
    ZeroDegree,
}

/// Minimum degree over nontrivial connected full subdiagrams.
pub fn min_degree(d: &FeynmanDiagram) -> Option<Rational64> {
    nontrivial_subsets(d).into_iter().map(|s| full_degree(d, s)).min()
}

pub fn classify(d: &FeynmanDiagram) -> Class {
    match min_degree(d) {
        None => Class::Positive,
        Some(m) if m > Rational64::zero() => Class::Positive,
        Some(m) if m < Rational64::zero() => Class::Negative,
        Some(_) => Class::ZeroDegree,
    }
}

/// Full subdiagrams of degree zero all of whose proper nontrivial
/// subdiagrams have positive degree.
pub fn primitive_blowups(d: &FeynmanDiagram) -> Vec<Subdiagram> {
    let subs = nontrivial_subsets(d);
    subs.iter()
        .copied()
        .filter(|&s| full_degree(d, s).is_zero())
        .filter(|&s| {
            subs.iter()
                .filter(|&&t| t != s && t & s == t)
                .all(|&t| full_degree(d, t) > Rational64::zero())
        })
        .map(|s| Subdiagram::full(d, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::{build, enumerate_pairings, named, set_of, trees_from_sizes, PairingMode};

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn degree_examples() {
        let bubble = named("bubble4").unwrap();
        assert_eq!(full_degree(&bubble, bubble.internal_set()), r(0));
        let sunset = named("sunset2").unwrap();
        assert_eq!(full_degree(&sunset, sunset.internal_set()), r(-2));
        let tadpole = named("tadpole").unwrap();
        assert_eq!(full_degree(&tadpole, tadpole.internal_set()), r(-2));
    }

    #[test]
    fn disconnected_degree_sums_components() {
        let d = named("chain2sunset").unwrap();
        let sub = Subdiagram {
            vertices: set_of([1, 2, 3, 4]),
            edges: vec![Edge::new(1, 2, 2), Edge::new(2, 1, 1), Edge::new(3, 4, 2), Edge::new(4, 3, 1)],
        };
        assert_eq!(degree(&sub, 4), r(-4));
        assert_eq!(degbar(&sub, 4), r(0));
        assert!(!sub.is_full_in(&d));
    }

    #[test]
    fn connected_subsets_match_brute_force() {
        for name in ["nested4", "chain2sunset", "parallel", "k4"] {
            let d = named(name).unwrap();
            let mut brute: Vec<VertexSet> = (1..(1u64 << 64 - d.internal_set().leading_zeros()))
                .filter(|&s| s & !d.internal_set() == 0 && d.is_connected_subset(s))
                .collect();
            brute.sort_unstable_by_key(|&s| (cardinality(s), s));
            assert_eq!(connected_subsets(&d), brute, "{name}");
        }
    }

    #[test]
    fn divergence_examples() {
        assert!(enumerate_divergences(&named("bubble4").unwrap()).is_empty());
        assert_eq!(enumerate_divergences(&named("tadpole").unwrap()), vec![set_of([1])]);
        let chain = named("chain2sunset").unwrap();
        let divs = enumerate_divergences(&chain);
        assert_eq!(divs, vec![set_of([1, 2]), set_of([3, 4]), set_of([1, 2, 3, 4])]);
        for s in divs {
            assert_eq!(full_degree(&chain, s), r(-2));
        }
    }

    #[test]
    fn forest_examples() {
        assert_eq!(enumerate_forests(&named("bubble4").unwrap()), vec![Vec::<VertexSet>::new()]);
        assert_eq!(enumerate_forests(&named("tadpole").unwrap()).len(), 2);
        assert_eq!(enumerate_forests(&named("chain2sunset").unwrap()).len(), 8);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(&named("bubble4").unwrap()), Class::ZeroDegree);
        assert_eq!(classify(&named("star").unwrap()), Class::Positive);
        for n in [2usize, 4, 6] {
            let trees = trees_from_sizes(&[n]);
            for k in enumerate_pairings(&trees, PairingMode::Complete).unwrap() {
                assert_eq!(classify(&build(&trees, &k).unwrap()), Class::Negative);
            }
        }
        // (I1, I1, I2) with the cross pairing a1-c1, b1-c2
        let trees = trees_from_sizes(&[1, 1, 2]);
        let k = crate::diagrams::pairing_from(&trees, &[((0, 1), (2, 1)), ((1, 1), (2, 2))]).unwrap();
        let d = build(&trees, &k).unwrap();
        assert_eq!(classify(&d), Class::Positive);
        assert_eq!(full_degree(&d, d.internal_set()), r(2));
    }

    #[test]
    fn primitive_blowup_examples() {
        let bubble = named("bubble4").unwrap();
        let p = primitive_blowups(&bubble);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].vertices, bubble.internal_set());
        let k4 = named("k4").unwrap();
        let p = primitive_blowups(&k4);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].vertices, k4.internal_set());
        assert!(primitive_blowups(&named("sunset2").unwrap()).is_empty());
    }

    #[test]
    fn invalid_forest_detected() {
        assert!(check_forest(&[set_of([1, 2]), set_of([2, 3])]).is_err());
        assert!(check_forest(&[set_of([1, 2]), set_of([1, 2, 3])]).is_ok());
    }
}
