use num_rational::Rational64;
use num_traits::Zero;
use serde::Serialize;

use super::tree::{enumerate_hepp_trees, HeppTree};
use crate::diagrams::{FeynmanDiagram, Label};
use crate::error::{Error, Result};

/// Per inner node exponents of a Hepp tree, indexed by inner position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NullReport {
    #[serde(serialize_with = "ser_rationals")]
    pub eta: Vec<Rational64>,
    #[serde(serialize_with = "ser_rationals")]
    pub degbar: Vec<Rational64>,
    pub null: usize,
}

fn ser_rationals<S: serde::Serializer>(v: &[Rational64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(crate::diagrams::rational_to_string))
}

/// `η(u) = d + Σ t(e)` over edges whose endpoints meet at `u`. Self-loops meet
/// at a leaf and are ignored.
pub fn eta_of<I>(t: &HeppTree, dim: i64, edges: I) -> Vec<Rational64>
where
    I: IntoIterator<Item = (Label, Label, Rational64)>,
{
    let mut eta = vec![Rational64::from_integer(dim); t.inner_count()];
    for (a, b, w) in edges {
        if a == b {
            continue;
        }
        let u = t.lca_labels(a, b);
        eta[t.inner_index(u)] += w;
    }
    eta
}

/// Cumulative sums `Σ_{v ⪰ u} η(v)` for every inner node `u`.
pub fn cumulative(t: &HeppTree, eta: &[Rational64]) -> Vec<Rational64> {
    let mut acc = eta.to_vec();
    // post-order numbering puts children before parents
    for node in t.inner_nodes() {
        let (a, b) = t.children(node).unwrap();
        for c in [a, b] {
            if t.is_inner(c) {
                let add = acc[t.inner_index(c)];
                acc[t.inner_index(node)] += add;
            }
        }
    }
    acc
}

pub fn report_from_eta(t: &HeppTree, eta: Vec<Rational64>) -> NullReport {
    let degbar = cumulative(t, &eta);
    let null = degbar.iter().filter(|x| x.is_zero()).count();
    NullReport { eta, degbar, null }
}

fn internal_edges(d: &FeynmanDiagram) -> impl Iterator<Item = (Label, Label, Rational64)> + '_ {
    d.edges().iter().map(|e| (e.tail, e.head, e.ty * Rational64::from_integer(i64::from(e.mult))))
}

pub fn null_count(t: &HeppTree, d: &FeynmanDiagram) -> NullReport {
    report_from_eta(t, eta_of(t, d.dim(), internal_edges(d)))
}

/// Trees whose every inner node has vanishing cumulative exponent.
pub fn contributing_trees(d: &FeynmanDiagram) -> Vec<HeppTree> {
    enumerate_hepp_trees(d)
        .into_iter()
        .filter(|t| t.inner_count() > 0 && null_count(t, d).null == t.inner_count())
        .collect()
}

/// Scale map on the inner nodes of a tree, indexed by inner position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ScaleAssignment {
    pub values: Vec<u32>,
}

impl ScaleAssignment {
    pub fn get(&self, t: &HeppTree, node: usize) -> u32 {
        self.values[t.inner_index(node)]
    }

    /// Scales grow away from the root.
    pub fn is_compatible(&self, t: &HeppTree) -> bool {
        t.inner_nodes().all(|u| match t.parent(u) {
            Some(p) => self.get(t, u) >= self.get(t, p),
            None => true,
        })
    }

    pub fn is_distinct(&self) -> bool {
        let mut v = self.values.clone();
        v.sort_unstable();
        v.windows(2).all(|w| w[0] != w[1])
    }
}

/// Compatible scale maps with values below `cap`, optionally pairwise
/// distinct. The cap is mandatory since the full family is infinite.
pub fn compatible_assignments(t: &HeppTree, cap: u32, distinct: bool) -> Result<Vec<ScaleAssignment>> {
    if cap == 0 {
        return Err(Error::InvalidInput("scale cap must be positive".into()));
    }
    let mut out = Vec::new();
    let mut values = vec![0u32; t.inner_count()];
    // assign from the root down: reversed post-order visits parents first
    let order: Vec<usize> = t.inner_nodes().rev().collect();
    fill(t, &order, 0, cap, distinct, &mut values, &mut out);
    Ok(out)
}

fn fill(
    t: &HeppTree,
    order: &[usize],
    i: usize,
    cap: u32,
    distinct: bool,
    values: &mut Vec<u32>,
    out: &mut Vec<ScaleAssignment>,
) {
    if i == order.len() {
        out.push(ScaleAssignment { values: values.clone() });
        return;
    }
    let u = order[i];
    let lo = t.parent(u).map_or(0, |p| values[t.inner_index(p)]);
    for x in lo..cap {
        if distinct && order[..i].iter().any(|&w| values[t.inner_index(w)] == x) {
            continue;
        }
        values[t.inner_index(u)] = x;
        fill(t, order, i + 1, cap, distinct, values, out);
    }
}
