use num_rational::Rational64;
use serde::Serialize;

use crate::degrees::{boundary_counts, full_degree};
use crate::diagrams::{contains, members, Edge, FeynmanDiagram, Label, Leg, VertexSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RewireVariant {
    /// Every boundary endpoint inside the subdiagram moves to its largest label.
    AllBoundary,
    /// Only the incoming edge moves, onto the tail of the outgoing edge.
    IncomingOnly,
}

/// One unit of multiplicity of an edge or leg of the original diagram.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnitEdge {
    pub tail: Label,
    pub head: Label,
    pub ty: Rational64,
    pub leg: bool,
}

/// Unit edges of `d`: internal edges expanded by multiplicity, then legs.
pub fn unit_edges(d: &FeynmanDiagram) -> Vec<UnitEdge> {
    let mut out = Vec::new();
    for e in d.edges() {
        for _ in 0..e.mult {
            out.push(UnitEdge { tail: e.tail, head: e.head, ty: e.ty, leg: false });
        }
    }
    for l in d.legs() {
        out.push(UnitEdge { tail: l.tail, head: l.head, ty: Rational64::from_integer(0), leg: true });
    }
    out
}

/// A diagram on the original vertex set whose unit edges are in bijection
/// with those of the original. Edge `i` here corresponds to original edge `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewiredDiagram {
    original: FeynmanDiagram,
    base: Vec<UnitEdge>,
    edges: Vec<UnitEdge>,
    history: Vec<(VertexSet, RewireVariant)>,
}

impl RewiredDiagram {
    pub fn new(d: &FeynmanDiagram) -> Self {
        let base = unit_edges(d);
        RewiredDiagram { original: d.clone(), edges: base.clone(), base, history: Vec::new() }
    }

    pub fn original(&self) -> &FeynmanDiagram {
        &self.original
    }

    /// Current unit edges; index `i` maps to original unit edge `i`.
    pub fn edges(&self) -> &[UnitEdge] {
        &self.edges
    }

    pub fn original_edges(&self) -> &[UnitEdge] {
        &self.base
    }

    pub fn history(&self) -> &[(VertexSet, RewireVariant)] {
        &self.history
    }

    /// Sorted multiset of current `(tail, head, leg)` triples.
    pub fn edge_multiset(&self) -> Vec<(Label, Label, bool)> {
        let mut v: Vec<_> = self.edges.iter().map(|e| (e.tail, e.head, e.leg)).collect();
        v.sort_unstable();
        v
    }

    pub fn to_diagram(&self) -> Result<FeynmanDiagram> {
        let d = &self.original;
        let edges: Vec<Edge> =
            self.edges.iter().filter(|e| !e.leg).map(|e| Edge::typed(e.tail, e.head, 1, e.ty)).collect();
        let legs: Vec<Leg> = self.edges.iter().filter(|e| e.leg).map(|e| Leg { tail: e.tail, head: e.head }).collect();
        FeynmanDiagram::with_noise(d.dim(), d.internal().to_vec(), d.leaves().to_vec(), edges, legs, d.noise().to_vec())
    }

    /// Apply one extraction map for the connected full subdiagram on `gamma`.
    pub fn rewire_extract(&self, gamma: VertexSet, variant: RewireVariant) -> Result<RewiredDiagram> {
        let d = &self.original;
        if gamma == 0 || gamma & !d.internal_set() != 0 || !d.is_connected_subset(gamma) {
            return Err(Error::InvalidInput("extraction needs a connected set of internal vertices".into()));
        }
        let mut out = self.clone();
        match variant {
            RewireVariant::AllBoundary => {
                let star = members(gamma).max().unwrap();
                for e in &mut out.edges {
                    let (t_in, h_in) = (contains(gamma, e.tail), contains(gamma, e.head));
                    if t_in && !h_in {
                        e.tail = star;
                    } else if h_in && !t_in {
                        e.head = star;
                    }
                }
            }
            RewireVariant::IncomingOnly => {
                let (e_in, e_out) = in_out_edges(d, &self.base, gamma)?;
                let star = self.base[e_out].tail;
                let cur = &mut out.edges[e_in];
                if contains(gamma, cur.head) {
                    cur.head = star;
                }
            }
        }
        out.history.push((gamma, variant));
        Ok(out)
    }

    /// Extract every member of a forest, innermost first.
    pub fn extract_forest(&self, forest: &[VertexSet], variant: RewireVariant) -> Result<RewiredDiagram> {
        let mut order = forest.to_vec();
        order.sort_by_key(|s| (s.count_ones(), *s));
        let mut cur = self.clone();
        for g in order {
            cur = cur.rewire_extract(g, variant)?;
        }
        Ok(cur)
    }
}

/// Indices of the unique incoming and outgoing unit edges of a strictly
/// negative connected subdiagram.
pub fn in_out_edges(d: &FeynmanDiagram, base: &[UnitEdge], gamma: VertexSet) -> Result<(usize, usize)> {
    if full_degree(d, gamma) >= Rational64::from_integer(0) {
        return Err(Error::PreconditionViolated("incoming-edge extraction needs a negative subdiagram".into()));
    }
    let (inc, out) = boundary_counts(d, gamma);
    if inc != 1 || out != 1 {
        return Err(Error::NoIncomingEdge(format!("{inc} incoming and {out} outgoing edges")));
    }
    let e_in = base.iter().position(|e| contains(gamma, e.head) && !contains(gamma, e.tail));
    let e_out = base.iter().position(|e| contains(gamma, e.tail) && !contains(gamma, e.head));
    match (e_in, e_out) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::NoIncomingEdge(format!("subdiagram {gamma:#b}"))),
    }
}

/// `𝔎_F Γ` for a forest of divergences.
pub fn rewire_forest(d: &FeynmanDiagram, forest: &[VertexSet], variant: RewireVariant) -> Result<RewiredDiagram> {
    RewiredDiagram::new(d).extract_forest(forest, variant)
}
