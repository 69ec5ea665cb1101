use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Vertex label. Labels stay below [`MAX_LABEL`] so vertex sets fit in a `u64`.
pub type Label = usize;

/// Bitmask over vertex labels.
pub type VertexSet = u64;

pub const MAX_LABEL: usize = 64;

/// Default Anderson edge type.
pub fn anderson_type() -> Rational64 {
    Rational64::from_integer(-2)
}

pub fn singleton(v: Label) -> VertexSet {
    1u64 << v
}

pub fn set_of<I: IntoIterator<Item = Label>>(it: I) -> VertexSet {
    it.into_iter().fold(0, |acc, v| acc | singleton(v))
}

pub fn contains(set: VertexSet, v: Label) -> bool {
    v < MAX_LABEL && set & singleton(v) != 0
}

pub fn members(set: VertexSet) -> impl Iterator<Item = Label> {
    let mut rest = set;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let v = rest.trailing_zeros() as Label;
            rest &= rest - 1;
            Some(v)
        }
    })
}

pub fn cardinality(set: VertexSet) -> usize {
    set.count_ones() as usize
}

/// Internal edge `tail -> head` with multiplicity and type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub tail: Label,
    pub head: Label,
    pub mult: u32,
    pub ty: Rational64,
}

impl Edge {
    pub fn new(tail: Label, head: Label, mult: u32) -> Self {
        Edge { tail, head, mult, ty: anderson_type() }
    }

    pub fn typed(tail: Label, head: Label, mult: u32, ty: Rational64) -> Self {
        Edge { tail, head, mult, ty }
    }

    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }

    pub fn touches(&self, v: Label) -> bool {
        self.tail == v || self.head == v
    }

    pub fn inside(&self, set: VertexSet) -> bool {
        contains(set, self.tail) && contains(set, self.head)
    }
}

/// Edge with at least one leaf endpoint. Legs always have multiplicity one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Leg {
    pub tail: Label,
    pub head: Label,
}

/// Directed labelled multigraph with internal vertices, leaves and legs.
///
/// Leaves are kept in an ordered list; a leaf's position in that list is its
/// identity when legs are compared. Noise leaves are leaves that stand for
/// unpaired noise insertions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeynmanDiagram {
    dim: i64,
    internal: Vec<Label>,
    leaves: Vec<Label>,
    edges: Vec<Edge>,
    legs: Vec<Leg>,
    noise: Vec<Label>,
}

fn merge_edges(edges: Vec<Edge>) -> Vec<Edge> {
    let mut acc: BTreeMap<(Label, Label, Rational64), u32> = BTreeMap::new();
    for e in edges {
        if e.mult == 0 {
            continue;
        }
        *acc.entry((e.tail, e.head, e.ty)).or_insert(0) += e.mult;
    }
    acc.into_iter()
        .map(|((tail, head, ty), mult)| Edge { tail, head, mult, ty })
        .collect()
}

impl FeynmanDiagram {
    /// Validating constructor. Parallel edges with equal direction and type
    /// are merged into one entry.
    pub fn new(
        dim: i64,
        internal: Vec<Label>,
        leaves: Vec<Label>,
        edges: Vec<Edge>,
        legs: Vec<Leg>,
    ) -> Result<Self> {
        Self::with_noise(dim, internal, leaves, edges, legs, Vec::new())
    }

    pub fn with_noise(
        dim: i64,
        mut internal: Vec<Label>,
        leaves: Vec<Label>,
        edges: Vec<Edge>,
        mut legs: Vec<Leg>,
        mut noise: Vec<Label>,
    ) -> Result<Self> {
        internal.sort_unstable();
        let int_set: BTreeSet<Label> = internal.iter().copied().collect();
        if int_set.len() != internal.len() {
            return Err(Error::MalformedDiagram("repeated internal vertex".into()));
        }
        let leaf_set: BTreeSet<Label> = leaves.iter().copied().collect();
        if leaf_set.len() != leaves.len() {
            return Err(Error::MalformedDiagram("repeated leaf".into()));
        }
        if let Some(v) = int_set.intersection(&leaf_set).next() {
            return Err(Error::MalformedDiagram(format!("vertex {v} is both leaf and internal")));
        }
        if let Some(v) = int_set.iter().chain(leaf_set.iter()).find(|&&v| v >= MAX_LABEL) {
            return Err(Error::MalformedDiagram(format!("label {v} exceeds {MAX_LABEL}")));
        }
        for e in &edges {
            if !int_set.contains(&e.tail) || !int_set.contains(&e.head) {
                return Err(Error::MalformedDiagram(format!(
                    "edge {}->{} leaves the internal vertex set",
                    e.tail, e.head
                )));
            }
        }
        for l in &legs {
            let known = |v: Label| int_set.contains(&v) || leaf_set.contains(&v);
            if !known(l.tail) || !known(l.head) {
                return Err(Error::MalformedDiagram(format!("leg {}->{} has unknown endpoint", l.tail, l.head)));
            }
            if !leaf_set.contains(&l.tail) && !leaf_set.contains(&l.head) {
                return Err(Error::MalformedDiagram(format!("leg {}->{} touches no leaf", l.tail, l.head)));
            }
        }
        noise.sort_unstable();
        noise.dedup();
        if noise.iter().any(|v| !leaf_set.contains(v)) {
            return Err(Error::MalformedDiagram("noise vertex is not a leaf".into()));
        }
        legs.sort_unstable();
        Ok(FeynmanDiagram { dim, internal, leaves, edges: merge_edges(edges), legs, noise })
    }

    pub fn dim(&self) -> i64 {
        self.dim
    }

    pub fn internal(&self) -> &[Label] {
        &self.internal
    }

    pub fn leaves(&self) -> &[Label] {
        &self.leaves
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn noise(&self) -> &[Label] {
        &self.noise
    }

    pub fn is_vacuum(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn internal_set(&self) -> VertexSet {
        set_of(self.internal.iter().copied())
    }

    pub fn leaf_set(&self) -> VertexSet {
        set_of(self.leaves.iter().copied())
    }

    pub fn is_internal(&self, v: Label) -> bool {
        self.internal.binary_search(&v).is_ok()
    }

    pub fn is_leaf(&self, v: Label) -> bool {
        self.leaves.contains(&v)
    }

    /// Smallest label not in use.
    pub fn label_bound(&self) -> Label {
        self.internal.iter().chain(self.leaves.iter()).map(|v| v + 1).max().unwrap_or(0)
    }

    /// Total internal edge multiplicity.
    pub fn edge_count(&self) -> u32 {
        self.edges.iter().map(|e| e.mult).sum()
    }

    pub fn has_self_loop(&self) -> bool {
        self.edges.iter().any(Edge::is_loop)
    }

    /// Degree of `v` in the underlying multigraph, loops counted twice.
    pub fn vertex_degree(&self, v: Label) -> u32 {
        let mut deg = 0;
        for e in &self.edges {
            if e.tail == v {
                deg += e.mult;
            }
            if e.head == v {
                deg += e.mult;
            }
        }
        for l in &self.legs {
            if l.tail == v {
                deg += 1;
            }
            if l.head == v {
                deg += 1;
            }
        }
        deg
    }

    /// Neighbourhood of every vertex through internal edges only.
    pub fn internal_adjacency(&self) -> BTreeMap<Label, VertexSet> {
        let mut adj: BTreeMap<Label, VertexSet> = self.internal.iter().map(|&v| (v, 0)).collect();
        for e in &self.edges {
            if !e.is_loop() {
                *adj.get_mut(&e.tail).unwrap() |= singleton(e.head);
                *adj.get_mut(&e.head).unwrap() |= singleton(e.tail);
            }
        }
        adj
    }

    /// Connected components over all vertices, using edges and legs.
    pub fn components(&self) -> Vec<VertexSet> {
        let all: Vec<Label> = self.internal.iter().chain(self.leaves.iter()).copied().collect();
        let mut adj: BTreeMap<Label, VertexSet> = all.iter().map(|&v| (v, 0)).collect();
        let pairs = self
            .edges
            .iter()
            .map(|e| (e.tail, e.head))
            .chain(self.legs.iter().map(|l| (l.tail, l.head)));
        for (a, b) in pairs {
            *adj.get_mut(&a).unwrap() |= singleton(b);
            *adj.get_mut(&b).unwrap() |= singleton(a);
        }
        let mut seen: VertexSet = 0;
        let mut comps = Vec::new();
        for &v in &all {
            if contains(seen, v) {
                continue;
            }
            let mut comp = singleton(v);
            let mut frontier = singleton(v);
            while frontier != 0 {
                let mut next = 0;
                for u in members(frontier) {
                    next |= adj[&u];
                }
                frontier = next & !comp;
                comp |= next;
            }
            seen |= comp;
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Whether `set` (a subset of internal vertices) is connected by internal edges.
    pub fn is_connected_subset(&self, set: VertexSet) -> bool {
        if set == 0 {
            return false;
        }
        let adj = self.internal_adjacency();
        let start = set & set.wrapping_neg();
        let mut comp = start;
        let mut frontier = start;
        while frontier != 0 {
            let mut next = 0;
            for u in members(frontier) {
                next |= adj[&u];
            }
            next &= set;
            frontier = next & !comp;
            comp |= next;
        }
        comp == set
    }

    /// Full vacuum subdiagram on `set`: all internal edges with both ends in `set`.
    pub fn restrict(&self, set: VertexSet) -> FeynmanDiagram {
        let internal: Vec<Label> = self.internal.iter().copied().filter(|&v| contains(set, v)).collect();
        let edges = self.edges.iter().filter(|e| e.inside(set)).cloned().collect();
        FeynmanDiagram { dim: self.dim, internal, leaves: Vec::new(), edges, legs: Vec::new(), noise: Vec::new() }
    }

    /// Same diagram with every edge and leg reversed.
    pub fn reversed(&self) -> FeynmanDiagram {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { tail: e.head, head: e.tail, mult: e.mult, ty: e.ty })
            .collect();
        let legs = self.legs.iter().map(|l| Leg { tail: l.head, head: l.tail }).collect();
        FeynmanDiagram::with_noise(
            self.dim,
            self.internal.clone(),
            self.leaves.clone(),
            edges,
            legs,
            self.noise.clone(),
        )
        .expect("reversal preserves validity")
    }

    /// Apply an injective relabelling. Unmapped labels are kept.
    pub fn relabel(&self, map: &BTreeMap<Label, Label>) -> Result<FeynmanDiagram> {
        let f = |v: Label| *map.get(&v).unwrap_or(&v);
        FeynmanDiagram::with_noise(
            self.dim,
            self.internal.iter().map(|&v| f(v)).collect(),
            self.leaves.iter().map(|&v| f(v)).collect(),
            self.edges
                .iter()
                .map(|e| Edge { tail: f(e.tail), head: f(e.head), mult: e.mult, ty: e.ty })
                .collect(),
            self.legs.iter().map(|l| Leg { tail: f(l.tail), head: f(l.head) }).collect(),
            self.noise.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Split off every connected component, keeping labels.
    pub fn split_components(&self) -> Vec<FeynmanDiagram> {
        self.components()
            .into_iter()
            .map(|comp| {
                let keep = |v: &Label| contains(comp, *v);
                FeynmanDiagram {
                    dim: self.dim,
                    internal: self.internal.iter().copied().filter(keep).collect(),
                    leaves: self.leaves.iter().copied().filter(keep).collect(),
                    edges: self.edges.iter().filter(|e| contains(comp, e.tail)).cloned().collect(),
                    legs: self.legs.iter().filter(|l| contains(comp, l.tail)).copied().collect(),
                    noise: self.noise.iter().copied().filter(keep).collect(),
                }
            })
            .collect()
    }

    /// Disjoint union; labels of `other` must not collide with ours.
    pub fn disjoint_union(&self, other: &FeynmanDiagram) -> Result<FeynmanDiagram> {
        let mut internal = self.internal.clone();
        internal.extend_from_slice(&other.internal);
        let mut leaves = self.leaves.clone();
        leaves.extend_from_slice(&other.leaves);
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        let mut legs = self.legs.clone();
        legs.extend_from_slice(&other.legs);
        let mut noise = self.noise.clone();
        noise.extend_from_slice(&other.noise);
        FeynmanDiagram::with_noise(self.dim, internal, leaves, edges, legs, noise)
    }

    /// Replace the edge list, keeping vertices and legs.
    pub(crate) fn with_edges(&self, edges: Vec<Edge>) -> FeynmanDiagram {
        FeynmanDiagram { edges: merge_edges(edges), ..self.clone() }
    }

    pub(crate) fn from_parts_unchecked(
        dim: i64,
        mut internal: Vec<Label>,
        leaves: Vec<Label>,
        edges: Vec<Edge>,
        mut legs: Vec<Leg>,
        mut noise: Vec<Label>,
    ) -> FeynmanDiagram {
        internal.sort_unstable();
        legs.sort_unstable();
        noise.sort_unstable();
        FeynmanDiagram { dim, internal, leaves, edges: merge_edges(edges), legs, noise }
    }

    /// JSON interchange form with fixed field order.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("d".into(), Value::from(self.dim));
        m.insert("internal".into(), Value::from(self.internal.clone()));
        m.insert("leaves".into(), Value::from(self.leaves.clone()));
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|e| Value::from(vec![e.tail as u64, e.head as u64, e.mult as u64]))
            .collect();
        m.insert("edges".into(), Value::Array(edges));
        let legs: Vec<Value> = self.legs.iter().map(|l| Value::from(vec![l.tail, l.head])).collect();
        m.insert("legs".into(), Value::Array(legs));
        let mut types = Map::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.ty != anderson_type() {
                types.insert(i.to_string(), Value::from(rational_to_string(&e.ty)));
            }
        }
        m.insert("types".into(), Value::Object(types));
        if !self.noise.is_empty() {
            m.insert("noise".into(), Value::from(self.noise.clone()));
        }
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("diagram JSON serialises")
    }

    pub fn from_json(v: &Value) -> Result<FeynmanDiagram> {
        let bad = |what: &str| Error::InvalidInput(format!("diagram JSON: {what}"));
        let obj = v.as_object().ok_or_else(|| bad("not an object"))?;
        let dim = obj.get("d").and_then(Value::as_i64).ok_or_else(|| bad("missing d"))?;
        let labels = |key: &str| -> Result<Vec<Label>> {
            obj.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| bad(key))?
                .iter()
                .map(|x| x.as_u64().map(|x| x as Label).ok_or_else(|| bad(key)))
                .collect()
        };
        let internal = labels("internal")?;
        let leaves = labels("leaves")?;
        let noise = if obj.contains_key("noise") { labels("noise")? } else { Vec::new() };
        let triples = |key: &str, width: usize| -> Result<Vec<Vec<u64>>> {
            obj.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| bad(key))?
                .iter()
                .map(|row| {
                    let row = row.as_array().ok_or_else(|| bad(key))?;
                    if row.len() != width {
                        return Err(bad(key));
                    }
                    row.iter().map(|x| x.as_u64().ok_or_else(|| bad(key))).collect()
                })
                .collect()
        };
        let mut edges: Vec<Edge> = triples("edges", 3)?
            .into_iter()
            .map(|r| Edge::new(r[0] as Label, r[1] as Label, r[2] as u32))
            .collect();
        if let Some(types) = obj.get("types").and_then(Value::as_object) {
            for (k, t) in types {
                let i: usize = k.parse().map_err(|_| bad("types key"))?;
                let s = t.as_str().ok_or_else(|| bad("types value"))?;
                let e = edges.get_mut(i).ok_or_else(|| bad("types index"))?;
                e.ty = parse_rational(s).ok_or_else(|| bad("types value"))?;
            }
        }
        let legs = triples("legs", 2)?
            .into_iter()
            .map(|r| Leg { tail: r[0] as Label, head: r[1] as Label })
            .collect();
        FeynmanDiagram::with_noise(dim, internal, leaves, edges, legs, noise)
    }

    pub fn from_json_str(s: &str) -> Result<FeynmanDiagram> {
        FeynmanDiagram::from_json(&serde_json::from_str(s)?)
    }
}

pub fn rational_to_string(r: &Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Option<Rational64> {
    match s.split_once('/') {
        Some((p, q)) => {
            let q: i64 = q.trim().parse().ok()?;
            if q == 0 {
                return None;
            }
            Some(Rational64::new(p.trim().parse().ok()?, q))
        }
        None => Some(Rational64::from_integer(s.trim().parse().ok()?)),
    }
}
