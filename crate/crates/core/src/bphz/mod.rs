//! Contraction, extraction and the forest formula.
//!
//! Extraction never compacts labels: a contracted vertex set keeps its
//! smallest label and every other vertex disappears. This keeps noise leaves
//! addressable after renormalisation, which the factorwise assembly of
//! renormalised moments relies on.

mod formal;

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::One;

pub use formal::{big_to_string, loop_factor, normalise, rational, DiagramProduct, FormalSum, Matching, ProductKey};

use crate::degrees::{check_forest, enumerate_forests, Forest, Subdiagram};
use crate::diagrams::{
    build, build_paired_diagram, contains, enumerate_pairings, ladder_tree, members, Edge, FeynmanDiagram, Label,
    LadderTree, Leg, Pairing, PairingMode, VertexSet,
};
use crate::error::{Error, Result};

/// Contract each connected component of `set` to its smallest label.
pub fn contract(d: &FeynmanDiagram, set: VertexSet) -> Result<FeynmanDiagram> {
    if set & !d.internal_set() != 0 {
        return Err(Error::InvalidInput("contracted set must consist of internal vertices".into()));
    }
    let mut out = d.clone();
    let parts = component_split(d, set);
    for part in parts {
        out = contract_connected(&out, part);
    }
    Ok(out)
}

/// Contract a subdiagram, rejecting non-full edge selections.
pub fn contract_sub(d: &FeynmanDiagram, sub: &Subdiagram) -> Result<FeynmanDiagram> {
    if !sub.is_full_in(d) {
        return Err(Error::NotFull);
    }
    contract(d, sub.vertices)
}

fn component_split(d: &FeynmanDiagram, set: VertexSet) -> Vec<VertexSet> {
    let adj = d.internal_adjacency();
    let mut rest = set;
    let mut out = Vec::new();
    while rest != 0 {
        let start = rest & rest.wrapping_neg();
        let mut comp = start;
        let mut frontier = start;
        while frontier != 0 {
            let mut next = 0;
            for u in members(frontier) {
                next |= adj[&u] & set;
            }
            frontier = next & !comp;
            comp |= next;
        }
        out.push(comp);
        rest &= !comp;
    }
    out
}

fn contract_connected(d: &FeynmanDiagram, set: VertexSet) -> FeynmanDiagram {
    let keep = set.trailing_zeros() as Label;
    let f = |v: Label| if contains(set, v) { keep } else { v };
    let internal: Vec<Label> = d.internal().iter().copied().filter(|&v| v == keep || !contains(set, v)).collect();
    let edges: Vec<Edge> = d
        .edges()
        .iter()
        .filter(|e| !e.inside(set))
        .map(|e| Edge { tail: f(e.tail), head: f(e.head), mult: e.mult, ty: e.ty })
        .collect();
    let legs: Vec<Leg> = d.legs().iter().map(|l| Leg { tail: f(l.tail), head: f(l.head) }).collect();
    FeynmanDiagram::from_parts_unchecked(
        d.dim(),
        internal,
        d.leaves().to_vec(),
        edges,
        legs,
        d.noise().to_vec(),
    )
}

/// Maximal members of a forest.
pub fn roots(forest: &[VertexSet]) -> Vec<VertexSet> {
    forest
        .iter()
        .copied()
        .filter(|&g| !forest.iter().any(|&h| h != g && h & g == g))
        .collect()
}

/// Extract a forest: every root becomes a vacuum factor (itself extracted
/// along the members it contains) and the roots are contracted in `d`.
pub fn extract(d: &FeynmanDiagram, forest: &[VertexSet]) -> Result<DiagramProduct> {
    check_forest(forest)?;
    if forest.iter().any(|&g| g & !d.internal_set() != 0) {
        return Err(Error::InvalidForest("member outside the internal vertices".into()));
    }
    let tops = roots(forest);
    let mut factors = Vec::new();
    let mut remainder = d.clone();
    for &g in &tops {
        let inner: Forest = forest.iter().copied().filter(|&h| h != g && h & g == h).collect();
        let sub = d.restrict(g);
        factors.extend(extract(&sub, &inner)?.factors);
        remainder = contract(&remainder, g)?;
    }
    factors.insert(0, remainder);
    Ok(DiagramProduct { factors })
}

fn sign(k: usize) -> BigRational {
    if k % 2 == 0 {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

/// Forest formula: one signed term per forest of divergences, unreduced.
pub fn zimmermann(d: &FeynmanDiagram) -> FormalSum {
    let mut out = FormalSum::new();
    for f in enumerate_forests(d) {
        let p = extract(d, &f).expect("enumerated forests are valid");
        out.push(sign(f.len()), p);
    }
    out
}

/// Renormalise `I^int_{n,κ}`: the internally paired tree with unpaired noise
/// vertices kept as noise leaves.
pub fn renormalise_tree(t: LadderTree, kappa: &Pairing) -> Result<FormalSum> {
    Ok(zimmermann(&build(&[t], kappa)?))
}

/// Sum of renormalised diagrams over all complete pairings, reduced.
pub fn renormalised_moment_expansion(trees: &[LadderTree]) -> Result<FormalSum> {
    let mut total = FormalSum::new();
    for k in enumerate_pairings(trees, PairingMode::Complete)? {
        total = total.add(&zimmermann(&build(trees, &k)?));
    }
    Ok(total.reduce())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Glue two products along noise leaves. `pairs` lists (noise label in `a`,
/// noise label in `b`) before `b` is shifted by `offset`.
fn glue(a: &DiagramProduct, b: &DiagramProduct, offset: Label, pairs: &[(Label, Label)]) -> Result<DiagramProduct> {
    let shift: BTreeMap<Label, Label> = b
        .factors
        .iter()
        .flat_map(|f| f.internal().iter().chain(f.leaves()).copied().collect::<Vec<_>>())
        .map(|v| (v, v + offset))
        .collect();
    let la = a.legged().next().ok_or_else(|| Error::InvalidInput("no legged factor".into()))?;
    let lb = b.legged().next().ok_or_else(|| Error::InvalidInput("no legged factor".into()))?;
    let lb = lb.relabel(&shift)?;
    let merge: BTreeMap<Label, Label> = pairs.iter().map(|&(u, w)| (w + offset, u)).collect();
    let joined = la.disjoint_union(&lb)?;
    let glued_vertices: Vec<Label> = pairs.iter().map(|p| p.0).collect();
    let f = |v: Label| *merge.get(&v).unwrap_or(&v);
    let mut internal: Vec<Label> = joined.internal().to_vec();
    internal.extend(glued_vertices.iter().copied());
    let leaves: Vec<Label> = joined
        .leaves()
        .iter()
        .copied()
        .filter(|v| !glued_vertices.contains(v) && !merge.contains_key(v))
        .collect();
    let noise: Vec<Label> = joined.noise().iter().copied().filter(|v| leaves.contains(v)).collect();
    let edges: Vec<Edge> = joined
        .edges()
        .iter()
        .map(|e| Edge { tail: f(e.tail), head: f(e.head), mult: e.mult, ty: e.ty })
        .collect();
    let legs: Vec<Leg> = joined.legs().iter().map(|l| Leg { tail: f(l.tail), head: f(l.head) }).collect();
    let legged = formal::reclassify(joined.dim(), internal, leaves, noise, edges, legs)?;
    let mut factors = vec![legged];
    factors.extend(a.vacuum().cloned());
    factors.extend(b.vacuum().map(|v| v.relabel(&shift).expect("shift is injective")));
    Ok(DiagramProduct { factors })
}

/// Renormalised two-tree moment assembled factorwise: renormalise every
/// internally paired tree, then pair the surviving noise vertices across the
/// two trees in all possible ways.
pub fn factorwise_assembly(n: usize, m: usize) -> Result<FormalSum> {
    let (t1, t2) = (ladder_tree(n), ladder_tree(m));
    let mut total = FormalSum::new();
    let left = enumerate_pairings(&[t1], PairingMode::Internal)?;
    let right = enumerate_pairings(&[t2], PairingMode::Internal)?;
    for k1 in &left {
        let pd1 = build_paired_diagram(&[t1], k1)?;
        let z1 = zimmermann(&pd1.diagram);
        let u1: Vec<Label> = k1.unpaired().iter().map(|&v| pd1.label_of(v)).collect();
        let offset = pd1.diagram.label_bound();
        for k2 in &right {
            let u2_vertices = k2.unpaired();
            if u2_vertices.len() != u1.len() {
                continue;
            }
            let pd2 = build_paired_diagram(&[t2], k2)?;
            let z2 = zimmermann(&pd2.diagram);
            let u2: Vec<Label> = u2_vertices.iter().map(|&v| pd2.label_of(v)).collect();
            for perm in permutations(u1.len()) {
                let pairs: Vec<(Label, Label)> = perm.iter().enumerate().map(|(i, &j)| (u1[i], u2[j])).collect();
                for (c1, p1) in z1.terms() {
                    for (c2, p2) in z2.terms() {
                        total.push(c1 * c2, glue(p1, p2, offset, &pairs)?);
                    }
                }
            }
        }
    }
    Ok(total.reduce())
}
