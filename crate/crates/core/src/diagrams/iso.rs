//! Canonical forms of diagrams by colour refinement and
//! individualisation–refinement search.
//!
//! Vertices are encoded with internal vertices first, then leaves in list
//! order. Leaves are either pinned to their list position (leg-respecting
//! comparison) or only distinguished by their noise flag. The canonical code
//! is the lexicographically smallest edge list over all discrete colourings
//! reachable from the equitable refinement.

use std::collections::BTreeMap;

use super::graph::{FeynmanDiagram, Label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LegMode {
    /// Leaves are identified by their position in the leaf list.
    Respect,
    /// Leaves may be permuted.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IsoOptions {
    pub directed: bool,
    pub legs: LegMode,
}

impl IsoOptions {
    /// Directed, leg-respecting comparison.
    pub const STRICT: IsoOptions = IsoOptions { directed: true, legs: LegMode::Respect };
    /// Undirected, leaves permutable.
    pub const LOOSE: IsoOptions = IsoOptions { directed: false, legs: LegMode::Free };
}

/// (kind, multiplicity, type numerator, type denominator); kind 0 = edge, 1 = leg.
type Tag = (u8, u32, i64, i64);

/// Per-vertex attribute: (0, 0) for internal vertices, (1, x) for leaves where
/// x is the leaf position or the noise flag depending on the mode.
type Attr = (u8, usize);

/// Isomorphism-invariant key of a diagram.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagramKey {
    dim: i64,
    attrs: Vec<Attr>,
    arcs: Vec<(usize, usize, Tag)>,
}

impl DiagramKey {
    pub fn vertex_count(&self) -> usize {
        self.attrs.len()
    }
}

/// Canonical relabelling plus the key it produces.
#[derive(Clone, Debug)]
pub struct CanonicalLabel {
    /// Old label to canonical label. Internal vertices map to `0..k`, leaves
    /// to `k..`.
    pub relabel: BTreeMap<Label, Label>,
    pub key: DiagramKey,
}

struct Encoded {
    directed: bool,
    attrs: Vec<Attr>,
    arcs: Vec<(usize, usize, Tag)>,
    labels: Vec<Label>,
}

fn encode(d: &FeynmanDiagram, opts: IsoOptions) -> Encoded {
    let mut labels: Vec<Label> = d.internal().to_vec();
    labels.extend_from_slice(d.leaves());
    let index: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let mut attrs: Vec<Attr> = d.internal().iter().map(|_| (0, 0)).collect();
    for (pos, leaf) in d.leaves().iter().enumerate() {
        let x = match opts.legs {
            LegMode::Respect => pos,
            LegMode::Free => usize::from(d.noise().contains(leaf)),
        };
        attrs.push((1, x));
    }
    let mut arcs = Vec::new();
    if opts.directed {
        for e in d.edges() {
            arcs.push((index[&e.tail], index[&e.head], (0, e.mult, *e.ty.numer(), *e.ty.denom())));
        }
    } else {
        // opposite directions merge into one undirected multiplicity
        let mut merged: BTreeMap<(usize, usize, i64, i64), u32> = BTreeMap::new();
        for e in d.edges() {
            let (a, b) = (index[&e.tail], index[&e.head]);
            *merged.entry((a.min(b), a.max(b), *e.ty.numer(), *e.ty.denom())).or_insert(0) += e.mult;
        }
        arcs.extend(merged.into_iter().map(|((a, b, p, q), m)| (a, b, (0, m, p, q))));
    }
    for l in d.legs() {
        arcs.push((index[&l.tail], index[&l.head], (1, 1, 0, 1)));
    }
    Encoded { directed: opts.directed, attrs, arcs, labels }
}

fn dense_rank<T: Ord + Clone>(values: &[T]) -> Vec<usize> {
    let mut sorted: Vec<T> = values.to_vec();
    sorted.sort();
    sorted.dedup();
    values.iter().map(|v| sorted.binary_search(v).unwrap()).collect()
}

fn cell_count(colours: &[usize]) -> usize {
    colours.iter().copied().max().map_or(0, |m| m + 1)
}

fn refine(enc: &Encoded, mut colours: Vec<usize>) -> Vec<usize> {
    let n = colours.len();
    loop {
        let mut sig: Vec<Vec<(u8, usize, Tag)>> = vec![Vec::new(); n];
        for &(a, b, tag) in &enc.arcs {
            if a == b {
                sig[a].push((2, colours[a], tag));
            } else if enc.directed {
                sig[a].push((0, colours[b], tag));
                sig[b].push((1, colours[a], tag));
            } else {
                sig[a].push((0, colours[b], tag));
                sig[b].push((0, colours[a], tag));
            }
        }
        let keyed: Vec<(usize, Vec<(u8, usize, Tag)>)> = sig
            .into_iter()
            .enumerate()
            .map(|(v, mut s)| {
                s.sort_unstable();
                (colours[v], s)
            })
            .collect();
        let next = dense_rank(&keyed);
        if cell_count(&next) == cell_count(&colours) {
            return next;
        }
        colours = next;
    }
}

type Code = (Vec<Attr>, Vec<(usize, usize, Tag)>);

fn code_for(enc: &Encoded, perm: &[usize]) -> Code {
    let mut attrs = vec![(0u8, 0usize); perm.len()];
    for (v, &p) in perm.iter().enumerate() {
        attrs[p] = enc.attrs[v];
    }
    let mut arcs: Vec<(usize, usize, Tag)> = enc
        .arcs
        .iter()
        .map(|&(a, b, t)| {
            let (x, y) = (perm[a], perm[b]);
            if enc.directed || x <= y {
                (x, y, t)
            } else {
                (y, x, t)
            }
        })
        .collect();
    arcs.sort_unstable();
    (attrs, arcs)
}

fn search(enc: &Encoded, colours: Vec<usize>, best: &mut Option<(Code, Vec<usize>)>) {
    let colours = refine(enc, colours);
    let n = colours.len();
    if cell_count(&colours) == n {
        let code = code_for(enc, &colours);
        if best.as_ref().map_or(true, |(b, _)| code < *b) {
            *best = Some((code, colours));
        }
        return;
    }
    let mut sizes = vec![0usize; cell_count(&colours)];
    for &c in &colours {
        sizes[c] += 1;
    }
    let target = sizes.iter().position(|&s| s > 1).unwrap();
    for v in (0..n).filter(|&v| colours[v] == target) {
        let split: Vec<(usize, u8)> = colours
            .iter()
            .enumerate()
            .map(|(u, &c)| (c, u8::from(c == target && u != v)))
            .collect();
        search(enc, dense_rank(&split), best);
    }
}

fn canonical_perm(enc: &Encoded) -> (Code, Vec<usize>) {
    let initial = dense_rank(&enc.attrs);
    let mut best = None;
    search(enc, initial, &mut best);
    best.unwrap_or_else(|| ((Vec::new(), Vec::new()), Vec::new()))
}

/// Canonical relabelling under the given comparison mode.
pub fn canonical_form_with(d: &FeynmanDiagram, opts: IsoOptions) -> CanonicalLabel {
    let enc = encode(d, opts);
    let ((attrs, arcs), perm) = canonical_perm(&enc);
    let relabel = enc.labels.iter().zip(perm.iter()).map(|(&l, &p)| (l, p)).collect();
    CanonicalLabel { relabel, key: DiagramKey { dim: d.dim(), attrs, arcs } }
}

/// Directed, leg-respecting canonical form.
pub fn canonical_form(d: &FeynmanDiagram) -> CanonicalLabel {
    canonical_form_with(d, IsoOptions::STRICT)
}

pub fn canonical_key(d: &FeynmanDiagram, opts: IsoOptions) -> DiagramKey {
    canonical_form_with(d, opts).key
}

/// Relabel `d` into canonical labels.
pub fn canonicalize(d: &FeynmanDiagram, opts: IsoOptions) -> FeynmanDiagram {
    let c = canonical_form_with(d, opts);
    let mut out = d.relabel(&c.relabel).expect("canonical relabelling is a bijection");
    if opts.legs == LegMode::Free {
        // leaf order follows the canonical labels
        let mut leaves = out.leaves().to_vec();
        leaves.sort_unstable();
        out = FeynmanDiagram::with_noise(
            out.dim(),
            out.internal().to_vec(),
            leaves,
            out.edges().to_vec(),
            out.legs().to_vec(),
            out.noise().to_vec(),
        )
        .expect("reordering leaves keeps validity");
    }
    out
}

/// Directed isomorphism test; leaves are pinned by list position when
/// `respect_legs` is set.
pub fn is_isomorphic(d1: &FeynmanDiagram, d2: &FeynmanDiagram, respect_legs: bool) -> bool {
    let opts = IsoOptions {
        directed: true,
        legs: if respect_legs { LegMode::Respect } else { LegMode::Free },
    };
    canonical_key(d1, opts) == canonical_key(d2, opts)
}
