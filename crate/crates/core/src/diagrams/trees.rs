use std::collections::BTreeMap;

use super::graph::{Edge, FeynmanDiagram, Label, Leg};
use crate::error::{Error, Result};

/// The ladder tree `I_n`: a directed path `0 -> 1 -> ... -> n+1` whose
/// endpoints are leaves and whose `n` inner vertices carry noise insertions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LadderTree {
    n: usize,
}

pub fn ladder_tree(n: usize) -> LadderTree {
    LadderTree { n }
}

impl LadderTree {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn leaves(&self) -> [usize; 2] {
        [0, self.n + 1]
    }

    pub fn internal(&self) -> impl Iterator<Item = usize> {
        1..=self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.n + 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..=self.n).map(|i| (i, i + 1)).collect()
    }
}

/// An inner vertex of one of the source trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeVertex {
    pub tree: usize,
    pub pos: usize,
}

impl TreeVertex {
    pub fn new(tree: usize, pos: usize) -> Self {
        TreeVertex { tree, pos }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairingMode {
    Internal,
    Complete,
    ConnectedComplete,
}

/// Matching κ between inner vertices of a list of trees. A pair is stored once
/// with its smaller endpoint first, so κ and κ⁻¹ are the same value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pairing {
    trees: Vec<LadderTree>,
    pairs: Vec<(TreeVertex, TreeVertex)>,
}

impl Pairing {
    pub fn new(trees: Vec<LadderTree>, pairs: Vec<(TreeVertex, TreeVertex)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        let mut norm = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            for v in [a, b] {
                let ok = v.tree < trees.len() && v.pos >= 1 && v.pos <= trees[v.tree].n();
                if !ok {
                    return Err(Error::MalformedPairing(format!("{v:?} is not an inner tree vertex")));
                }
                if !seen.insert(v) {
                    return Err(Error::MalformedPairing(format!("{v:?} is paired twice")));
                }
            }
            norm.push(if a < b { (a, b) } else { (b, a) });
        }
        norm.sort_unstable();
        Ok(Pairing { trees, pairs: norm })
    }

    /// Empty pairing over the given trees.
    pub fn empty(trees: Vec<LadderTree>) -> Self {
        Pairing { trees, pairs: Vec::new() }
    }

    /// Pairing on a single tree from position pairs.
    pub fn on_tree(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Pairing::new(
            vec![ladder_tree(n)],
            pairs.iter().map(|&(a, b)| (TreeVertex::new(0, a), TreeVertex::new(0, b))).collect(),
        )
    }

    pub fn trees(&self) -> &[LadderTree] {
        &self.trees
    }

    pub fn pairs(&self) -> &[(TreeVertex, TreeVertex)] {
        &self.pairs
    }

    pub fn domain(&self) -> Vec<TreeVertex> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn range(&self) -> Vec<TreeVertex> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn partner(&self, v: TreeVertex) -> Option<TreeVertex> {
        self.pairs.iter().find_map(|&(a, b)| {
            if a == v {
                Some(b)
            } else if b == v {
                Some(a)
            } else {
                None
            }
        })
    }

    pub fn all_inner(&self) -> Vec<TreeVertex> {
        self.trees
            .iter()
            .enumerate()
            .flat_map(|(t, tree)| tree.internal().map(move |p| TreeVertex::new(t, p)))
            .collect()
    }

    pub fn unpaired(&self) -> Vec<TreeVertex> {
        self.all_inner().into_iter().filter(|&v| self.partner(v).is_none()).collect()
    }

    pub fn is_complete(&self) -> bool {
        2 * self.pairs.len() == self.all_inner().len()
    }
}

fn matchings(vertices: &[TreeVertex], perfect: bool, out: &mut Vec<Vec<(TreeVertex, TreeVertex)>>) {
    fn rec(
        rest: &[TreeVertex],
        perfect: bool,
        acc: &mut Vec<(TreeVertex, TreeVertex)>,
        out: &mut Vec<Vec<(TreeVertex, TreeVertex)>>,
    ) {
        let Some((&first, tail)) = rest.split_first() else {
            out.push(acc.clone());
            return;
        };
        if !perfect {
            rec(tail, perfect, acc, out);
        }
        for i in 0..tail.len() {
            let mut remaining: Vec<TreeVertex> = tail.to_vec();
            let partner = remaining.remove(i);
            acc.push((first, partner));
            rec(&remaining, perfect, acc, out);
            acc.pop();
        }
    }
    rec(vertices, perfect, &mut Vec::new(), out);
}

/// Enumerate pairings of the given trees.
///
/// `Internal` lists every partial matching of a single tree, the empty one
/// included. `Complete` lists perfect matchings of all inner vertices (empty
/// when their number is odd). `ConnectedComplete` keeps the complete pairings
/// whose diagram is connected.
pub fn enumerate_pairings(trees: &[LadderTree], mode: PairingMode) -> Result<Vec<Pairing>> {
    let vertices = Pairing::empty(trees.to_vec()).all_inner();
    let mut raw = Vec::new();
    match mode {
        PairingMode::Internal => {
            if trees.len() != 1 {
                return Err(Error::PreconditionViolated("internal pairings need exactly one tree".into()));
            }
            matchings(&vertices, false, &mut raw);
        }
        PairingMode::Complete | PairingMode::ConnectedComplete => {
            if vertices.len() % 2 == 1 {
                return Ok(Vec::new());
            }
            matchings(&vertices, true, &mut raw);
        }
    }
    let mut out = Vec::with_capacity(raw.len());
    for pairs in raw {
        let p = Pairing::new(trees.to_vec(), pairs)?;
        if mode == PairingMode::ConnectedComplete && !build_paired_diagram(trees, &p)?.diagram.is_connected() {
            continue;
        }
        out.push(p);
    }
    Ok(out)
}

/// A built diagram together with the provenance of its vertices and edges.
#[derive(Clone, Debug)]
pub struct PairedDiagram {
    pub diagram: FeynmanDiagram,
    /// `vertex_map[t][i]` is the diagram label of vertex `i` of tree `t`.
    pub vertex_map: Vec<Vec<Label>>,
    /// Every tree edge as `(tail, head, tree)` in diagram labels.
    pub edge_origin: Vec<(Label, Label, usize)>,
}

impl PairedDiagram {
    pub fn label_of(&self, v: TreeVertex) -> Label {
        self.vertex_map[v.tree][v.pos]
    }

    /// Source trees of the internal edges inside `set`.
    pub fn trees_inside(&self, set: super::graph::VertexSet) -> std::collections::BTreeSet<usize> {
        use super::graph::contains;
        self.edge_origin
            .iter()
            .filter(|&&(a, b, _)| contains(set, a) && contains(set, b) && self.diagram.is_internal(a) && self.diagram.is_internal(b))
            .map(|&(_, _, t)| t)
            .collect()
    }
}

/// Quotient the disjoint union of `trees` by `κ` and label the result by
/// walking each tree from its bottom leaf to its top leaf, numbering vertices
/// in order of first visit. Unpaired inner vertices become noise leaves.
pub fn build_paired_diagram(trees: &[LadderTree], kappa: &Pairing) -> Result<PairedDiagram> {
    if kappa.trees() != trees {
        return Err(Error::MalformedPairing("pairing was built over different trees".into()));
    }
    let mut vertex_map: Vec<Vec<Label>> = trees.iter().map(|t| vec![usize::MAX; t.vertex_count()]).collect();
    let mut next = 0usize;
    let mut leaves = Vec::new();
    let mut noise = Vec::new();
    let mut internal = Vec::new();
    for (t, tree) in trees.iter().enumerate() {
        for i in 0..tree.vertex_count() {
            if vertex_map[t][i] != usize::MAX {
                continue;
            }
            let label = next;
            next += 1;
            vertex_map[t][i] = label;
            if i == 0 || i == tree.n() + 1 {
                leaves.push(label);
                continue;
            }
            match kappa.partner(TreeVertex::new(t, i)) {
                Some(p) => {
                    vertex_map[p.tree][p.pos] = label;
                    internal.push(label);
                }
                None => {
                    leaves.push(label);
                    noise.push(label);
                }
            }
        }
    }
    if next > super::graph::MAX_LABEL {
        return Err(Error::MalformedPairing(format!("{next} vertices exceed the label budget")));
    }
    let is_leaf = |v: Label| leaves.contains(&v);
    let mut edges = Vec::new();
    let mut legs = Vec::new();
    let mut edge_origin = Vec::new();
    for (t, tree) in trees.iter().enumerate() {
        for (a, b) in tree.edges() {
            let (u, v) = (vertex_map[t][a], vertex_map[t][b]);
            edge_origin.push((u, v, t));
            if is_leaf(u) || is_leaf(v) {
                legs.push(Leg { tail: u, head: v });
            } else {
                edges.push(Edge::new(u, v, 1));
            }
        }
    }
    let diagram = FeynmanDiagram::with_noise(4, internal, leaves, edges, legs, noise)?;
    Ok(PairedDiagram { diagram, vertex_map, edge_origin })
}

/// Convenience wrapper returning only the diagram.
pub fn build(trees: &[LadderTree], kappa: &Pairing) -> Result<FeynmanDiagram> {
    Ok(build_paired_diagram(trees, kappa)?.diagram)
}

/// One diagram per complete pairing. Isomorphic shapes are kept separately
/// since distinct pairings are distinct terms.
pub fn moment_expansion(trees: &[LadderTree]) -> Result<Vec<FeynmanDiagram>> {
    enumerate_pairings(trees, PairingMode::Complete)?
        .iter()
        .map(|k| build(trees, k))
        .collect()
}

/// Ladder trees from a list of sizes.
pub fn trees_from_sizes(sizes: &[usize]) -> Vec<LadderTree> {
    sizes.iter().map(|&n| ladder_tree(n)).collect()
}

/// Pairing from `(tree, pos)` pairs.
pub fn pairing_from(trees: &[LadderTree], pairs: &[((usize, usize), (usize, usize))]) -> Result<Pairing> {
    Pairing::new(
        trees.to_vec(),
        pairs
            .iter()
            .map(|&((ta, a), (tb, b))| (TreeVertex::new(ta, a), TreeVertex::new(tb, b)))
            .collect(),
    )
}

#[doc(hidden)]
pub fn label_positions(pd: &PairedDiagram) -> BTreeMap<Label, Vec<TreeVertex>> {
    let mut out: BTreeMap<Label, Vec<TreeVertex>> = BTreeMap::new();
    for (t, row) in pd.vertex_map.iter().enumerate() {
        for (i, &l) in row.iter().enumerate() {
            out.entry(l).or_default().push(TreeVertex::new(t, i));
        }
    }
    out
}
