//! Safe and unsafe divergences relative to a forest and a Hepp tree.
//!
//! Edge scales are read off in the incoming-edge rewiring of the diagram by
//! the forest. A divergence is unsafe when every boundary edge resolves at a
//! strict ancestor of every proper edge, so that no compatible distinct-scale
//! map can bring a boundary edge down to the proper scale.

use num_rational::Rational64;
use num_traits::Zero;
use serde::Serialize;

use super::rewire::{rewire_forest, RewireVariant, RewiredDiagram};
use super::scales::{cumulative, eta_of, ScaleAssignment};
use super::tree::HeppTree;
use crate::degrees::{check_forest, enumerate_divergences, enumerate_forests, is_forest, Forest};
use crate::diagrams::{contains, FeynmanDiagram, VertexSet};
use crate::error::{Error, Result};

/// Diagram in which edge scales are read off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ScaleFrame {
    /// The incoming-edge rewiring of the diagram by the forest.
    Rewired,
    /// The diagram itself.
    Original,
}

fn frame_diagram(d: &FeynmanDiagram, forest: &[VertexSet], frame: ScaleFrame) -> Result<RewiredDiagram> {
    match frame {
        ScaleFrame::Rewired => rewire_forest(d, forest, RewireVariant::IncomingOnly),
        ScaleFrame::Original => Ok(RewiredDiagram::new(d)),
    }
}

/// Analysis of one divergence against a forest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub gamma: VertexSet,
    pub safe: bool,
    /// Smallest member of the forest (or the whole diagram) strictly containing `gamma`.
    pub parent: VertexSet,
    pub children: Vec<VertexSet>,
    /// Unit edge indices of the proper edges.
    pub proper: Vec<usize>,
    /// Unit edge indices of the boundary edges.
    pub boundary: Vec<usize>,
    /// Tree node at which the proper edges first meet.
    pub up: Option<usize>,
    /// Deepest boundary node; `None` stands for the cemetery state.
    pub upup: Option<usize>,
    /// The raw scale comparison depends on the scale map for this divergence.
    pub assignment_dependent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SafeUnsafeReport {
    pub tree: String,
    pub forest: Forest,
    pub verdicts: Vec<Verdict>,
}

impl SafeUnsafeReport {
    pub fn is_safe_forest(&self) -> bool {
        self.verdicts.iter().all(|v| v.safe)
    }
}

/// Tree node of unit edge `i` in the rewired diagram. A self-loop sits at the
/// leaf of its vertex.
pub fn edge_node(t: &HeppTree, g: &RewiredDiagram, i: usize) -> usize {
    let e = &g.edges()[i];
    if e.tail == e.head {
        t.leaf_node(e.tail).expect("internal vertex is a tree leaf")
    } else {
        t.lca_labels(e.tail, e.head)
    }
}

fn inside(set: VertexSet, a: usize, b: usize) -> bool {
    contains(set, a) && contains(set, b)
}

/// Verdict for `gamma` relative to `forest`, which may or may not contain it.
pub fn analyse(d: &FeynmanDiagram, t: &HeppTree, g: &RewiredDiagram, forest: &[VertexSet], gamma: VertexSet) -> Verdict {
    let whole = d.internal_set();
    let parent = forest
        .iter()
        .copied()
        .filter(|&h| h != gamma && h & gamma == gamma)
        .min_by_key(|h| h.count_ones())
        .unwrap_or(whole);
    let inner: Vec<VertexSet> = forest.iter().copied().filter(|&h| h != gamma && h & gamma == h).collect();
    let children: Vec<VertexSet> =
        inner.iter().copied().filter(|&h| !inner.iter().any(|&k| k != h && k & h == h)).collect();
    let base = g.original_edges();
    let mut proper = Vec::new();
    let mut boundary = Vec::new();
    for (i, e) in base.iter().enumerate() {
        if e.leg {
            continue;
        }
        if inside(gamma, e.tail, e.head) {
            if !children.iter().any(|&c| inside(c, e.tail, e.head)) {
                proper.push(i);
            }
        } else if inside(parent, e.tail, e.head) && (contains(gamma, e.tail) || contains(gamma, e.head)) {
            boundary.push(i);
        }
    }
    let pn: Vec<usize> = proper.iter().map(|&i| edge_node(t, g, i)).collect();
    let bn: Vec<usize> = boundary.iter().map(|&i| edge_node(t, g, i)).collect();
    let up = pn.iter().copied().reduce(|a, b| t.lca(a, b));
    let upup = bn.iter().copied().max_by_key(|&b| (t.depth(b), std::cmp::Reverse(b)));
    let always_unsafe = bn.iter().all(|&b| pn.iter().all(|&p| t.is_strict_ancestor(b, p)));
    let always_safe = bn.iter().any(|&b| pn.iter().any(|&p| t.is_ancestor_or_equal(p, b)));
    Verdict {
        gamma,
        safe: !always_unsafe,
        parent,
        children,
        proper,
        boundary,
        up,
        upup,
        assignment_dependent: !always_unsafe && !always_safe,
    }
}

fn check_divergences(d: &FeynmanDiagram, forest: &[VertexSet]) -> Result<()> {
    check_forest(forest)?;
    let divs = enumerate_divergences(d);
    if let Some(g) = forest.iter().find(|g| !divs.contains(g)) {
        return Err(Error::InvalidForest(format!("{g:#b} is not a divergence")));
    }
    Ok(())
}

pub fn classify_safe_unsafe(d: &FeynmanDiagram, t: &HeppTree, forest: &[VertexSet]) -> Result<SafeUnsafeReport> {
    classify_in_frame(d, t, forest, ScaleFrame::Rewired)
}

pub fn classify_in_frame(
    d: &FeynmanDiagram,
    t: &HeppTree,
    forest: &[VertexSet],
    frame: ScaleFrame,
) -> Result<SafeUnsafeReport> {
    check_divergences(d, forest)?;
    let g = frame_diagram(d, forest, frame)?;
    let verdicts = forest.iter().map(|&gamma| analyse(d, t, &g, forest, gamma)).collect();
    Ok(SafeUnsafeReport { tree: t.to_string(), forest: forest.to_vec(), verdicts })
}

pub fn is_safe_forest(d: &FeynmanDiagram, t: &HeppTree, forest: &[VertexSet], frame: ScaleFrame) -> Result<bool> {
    Ok(classify_in_frame(d, t, forest, frame)?.is_safe_forest())
}

/// Scale comparison with an explicit scale map. Leaves count as infinitely
/// fine; an empty boundary gives `-∞` on the left.
pub fn raw_safe(t: &HeppTree, n: &ScaleAssignment, g: &RewiredDiagram, v: &Verdict) -> bool {
    let scale = |i: usize| {
        let u = edge_node(t, g, i);
        if t.is_inner(u) {
            i64::from(n.get(t, u))
        } else {
            i64::MAX
        }
    };
    let sup = v.boundary.iter().map(|&i| scale(i)).max().unwrap_or(i64::MIN);
    let min = v.proper.iter().map(|&i| scale(i)).min().unwrap_or(i64::MAX);
    sup >= min
}

/// Interval `[safe, safe ∪ unsafe]` of forests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForestInterval {
    pub safe: Forest,
    pub unsafe_to_add: Forest,
}

pub fn intervals_in_frame(d: &FeynmanDiagram, t: &HeppTree, frame: ScaleFrame) -> Result<Vec<ForestInterval>> {
    let divs = enumerate_divergences(d);
    let mut out = Vec::new();
    for f in enumerate_forests(d) {
        if !is_safe_forest(d, t, &f, frame)? {
            continue;
        }
        let mut unsafe_to_add = Vec::new();
        for &g in &divs {
            if f.contains(&g) {
                continue;
            }
            let mut h = f.clone();
            h.push(g);
            if is_forest(&h) && !is_safe_forest(d, t, &h, frame)? {
                unsafe_to_add.push(g);
            }
        }
        out.push(ForestInterval { safe: f, unsafe_to_add });
    }
    Ok(out)
}

/// Whether the intervals cover every forest exactly once.
pub fn is_partition(d: &FeynmanDiagram, intervals: &[ForestInterval]) -> bool {
    let forests = enumerate_forests(d);
    let total: usize = intervals.iter().map(|iv| 1usize << iv.unsafe_to_add.len()).sum();
    if total != forests.len() {
        return false;
    }
    forests.iter().all(|f| {
        intervals
            .iter()
            .filter(|iv| {
                iv.safe.iter().all(|g| f.contains(g))
                    && f.iter().all(|g| iv.safe.contains(g) || iv.unsafe_to_add.contains(g))
            })
            .count()
            == 1
    })
}

/// Shifted exponents for an interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftedExponents {
    pub eta: Vec<Rational64>,
    pub eta_hat: Vec<Rational64>,
    pub degbar_hat: Vec<Rational64>,
    pub null_hat: usize,
}

/// `η̂ = η + 2 Σ_{γ ∈ F_u} (1_{γ↑} − 1_{γ↑↑})` with `η` read off `𝔎_{F_s} Γ`.
pub fn shifted_exponents(
    d: &FeynmanDiagram,
    t: &HeppTree,
    iv: &ForestInterval,
    frame: ScaleFrame,
) -> Result<ShiftedExponents> {
    let g = frame_diagram(d, &iv.safe, frame)?;
    let eta = eta_of(t, d.dim(), g.edges().iter().filter(|e| !e.leg).map(|e| (e.tail, e.head, e.ty)));
    let mut eta_hat = eta.clone();
    let two = Rational64::from_integer(2);
    for &gamma in &iv.unsafe_to_add {
        let v = analyse(d, t, &g, &iv.safe, gamma);
        if let Some(u) = v.up.filter(|&u| t.is_inner(u)) {
            eta_hat[t.inner_index(u)] += two;
        }
        if let Some(u) = v.upup.filter(|&u| t.is_inner(u)) {
            eta_hat[t.inner_index(u)] -= two;
        }
    }
    let degbar_hat = cumulative(t, &eta_hat);
    let null_hat = degbar_hat.iter().filter(|x| x.is_zero()).count();
    Ok(ShiftedExponents { eta, eta_hat, degbar_hat, null_hat })
}

/// Forest intervals for `t` together with the frame that produced them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub frame: ScaleFrame,
    pub intervals: Vec<ForestInterval>,
}

/// Intervals from the rewired frame when they partition the forests, else
/// from the original diagram.
pub fn partition_forests(d: &FeynmanDiagram, t: &HeppTree) -> Result<Partition> {
    for frame in [ScaleFrame::Rewired, ScaleFrame::Original] {
        let intervals = intervals_in_frame(d, t, frame)?;
        if is_partition(d, &intervals) {
            return Ok(Partition { frame, intervals });
        }
    }
    Err(Error::PreconditionViolated(format!("no frame partitions the forests for tree {t}")))
}
