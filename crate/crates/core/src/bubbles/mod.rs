//! Nested bubble diagrams and their extraction sequences.
//!
//! A sequence is tracked as a chain of partitions of the internal vertices.
//! Each step merges two blocks joined by exactly two edges, and `Γ̃_i` is the
//! set of edges lying inside a non-trivial block. Every block is connected by
//! its own edges, so `Γ̃_i` and the partition determine each other.

mod heap;
mod sigma;

pub use heap::{
    factorial, heap_orderings, hooklength_count, is_heap_ordering, tree_factorial, RootedTree, MAX_HEAP_NODES,
};
pub use sigma::{
    is_contributing, sigma_eff_closed_form, sigma_eff_coefficients, sigma_eff_partial_sums, sigma_gamma_squared,
    sigma_nm, write_sigma_csv, Budget, CouplingSign, EffectiveCoefficient, SigmaRow, SigmaTable, SymbolicWeight,
};

use std::collections::{BTreeSet, HashMap};

use crate::bphz::contract;
use crate::degrees::{inner_multiplicity, Subdiagram};
use crate::diagrams::{cardinality, contains, members, singleton, FeynmanDiagram, Label, VertexSet};
use crate::hepp::{null_count, trees_over, HeppTree};

type Blocks = Vec<VertexSet>;

fn between(d: &FeynmanDiagram, a: VertexSet, b: VertexSet) -> u32 {
    d.edges()
        .iter()
        .filter(|e| (contains(a, e.tail) && contains(b, e.head)) || (contains(b, e.tail) && contains(a, e.head)))
        .map(|e| e.mult)
        .sum()
}

/// A single vertex still carrying a self-loop; merged blocks have lost theirs.
fn looped(d: &FeynmanDiagram, block: VertexSet) -> bool {
    cardinality(block) == 1 && d.edges().iter().any(|e| e.is_loop() && contains(block, e.tail))
}

fn bubble_merges(d: &FeynmanDiagram, blocks: &[VertexSet]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..blocks.len() {
        if looped(d, blocks[i]) {
            continue;
        }
        for j in i + 1..blocks.len() {
            if !looped(d, blocks[j]) && between(d, blocks[i], blocks[j]) == 2 {
                out.push((i, j));
            }
        }
    }
    out
}

fn merge(blocks: &[VertexSet], a: VertexSet, b: VertexSet) -> Blocks {
    let mut next: Blocks = blocks.iter().copied().filter(|&x| x != a && x != b).collect();
    next.push(a | b);
    next.sort_unstable();
    next
}

fn initial(d: &FeynmanDiagram) -> Blocks {
    d.internal().iter().map(|&v| singleton(v)).collect()
}

/// Whether the full subdiagram on `set` is a bubble: two vertices joined by
/// two edges and nothing else.
pub fn is_bubble(d: &FeynmanDiagram, set: VertexSet) -> bool {
    let v: Vec<Label> = members(set).collect();
    v.len() == 2
        && v.iter().all(|&x| d.is_internal(x))
        && inner_multiplicity(d, set) == 2
        && between(d, singleton(v[0]), singleton(v[1])) == 2
}

struct Counter<'a> {
    d: &'a FeynmanDiagram,
    memo: HashMap<Blocks, u128>,
}

impl<'a> Counter<'a> {
    fn new(d: &'a FeynmanDiagram) -> Self {
        Counter { d, memo: HashMap::new() }
    }

    fn count(&mut self, blocks: &Blocks) -> u128 {
        if blocks.len() == 1 {
            return u128::from(!looped(self.d, blocks[0]));
        }
        if let Some(&c) = self.memo.get(blocks) {
            return c;
        }
        let mut total = 0;
        for (i, j) in bubble_merges(self.d, blocks) {
            total += self.count(&merge(blocks, blocks[i], blocks[j]));
        }
        self.memo.insert(blocks.clone(), total);
        total
    }
}

/// `|𝕊(Γ)|`, counted over partition chains with memoisation.
pub fn count_extraction_sequences(d: &FeynmanDiagram) -> u128 {
    if d.internal().is_empty() {
        return 0;
    }
    Counter::new(d).count(&initial(d))
}

pub fn is_nested_bubble(d: &FeynmanDiagram) -> bool {
    count_extraction_sequences(d) > 0
}

/// One bubble extraction sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractionSequence {
    /// `Γ̃_1 ⊆ … ⊆ Γ̃_{n-1}` as subdiagrams of the original diagram.
    pub chain: Vec<Subdiagram>,
    /// The two blocks joined by the bubble extracted at each step, the one
    /// holding the smaller label first.
    pub bubbles: Vec<(VertexSet, VertexSet)>,
}

impl ExtractionSequence {
    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    /// Partition of the internal vertices after the first `i` steps.
    pub fn blocks(&self, d: &FeynmanDiagram, i: usize) -> Vec<VertexSet> {
        self.bubbles[..i].iter().fold(initial(d), |acc, &(a, b)| merge(&acc, a, b))
    }
}

fn chain_member(d: &FeynmanDiagram, blocks: &[VertexSet]) -> Subdiagram {
    let big: Vec<VertexSet> = blocks.iter().copied().filter(|&b| cardinality(b) > 1).collect();
    let vertices = big.iter().fold(0, |acc, &b| acc | b);
    let edges = d.edges().iter().filter(|e| big.iter().any(|&b| e.inside(b))).cloned().collect();
    Subdiagram { vertices, edges }
}

fn sequence_from_steps(d: &FeynmanDiagram, steps: &[(VertexSet, VertexSet)]) -> ExtractionSequence {
    let mut blocks = initial(d);
    let mut chain = Vec::with_capacity(steps.len());
    for &(a, b) in steps {
        blocks = merge(&blocks, a, b);
        chain.push(chain_member(d, &blocks));
    }
    ExtractionSequence { chain, bubbles: steps.to_vec() }
}

fn walk(
    counter: &mut Counter<'_>,
    blocks: Blocks,
    steps: &mut Vec<(VertexSet, VertexSet)>,
    out: &mut Vec<ExtractionSequence>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if blocks.len() == 1 {
        out.push(sequence_from_steps(counter.d, steps));
        return;
    }
    for (i, j) in bubble_merges(counter.d, &blocks) {
        let next = merge(&blocks, blocks[i], blocks[j]);
        if counter.count(&next) == 0 {
            continue;
        }
        steps.push(by_min_label(blocks[i], blocks[j]));
        walk(counter, next, steps, out, limit);
        steps.pop();
    }
}

fn collect_sequences(d: &FeynmanDiagram, limit: usize) -> Vec<ExtractionSequence> {
    let mut out = Vec::new();
    let mut counter = Counter::new(d);
    let start = initial(d);
    if d.internal().is_empty() || counter.count(&start) == 0 {
        return out;
    }
    walk(&mut counter, start, &mut Vec::new(), &mut out, limit);
    out
}

/// Every bubble extraction sequence of `d`; empty when `d` is not a nested
/// bubble diagram.
pub fn extraction_sequences(d: &FeynmanDiagram) -> Vec<ExtractionSequence> {
    collect_sequences(d, usize::MAX)
}

fn components(sub: &Subdiagram) -> Vec<VertexSet> {
    let mut parts: Vec<VertexSet> = members(sub.vertices).map(singleton).collect();
    for e in &sub.edges {
        let i = parts.iter().position(|&p| contains(p, e.tail)).expect("edge endpoint is a vertex");
        let j = parts.iter().position(|&p| contains(p, e.head)).expect("edge endpoint is a vertex");
        if i != j {
            let merged = parts[i] | parts[j];
            parts[i.min(j)] = merged;
            parts.remove(i.max(j));
        }
    }
    parts
}

fn contract_blocks(d: &FeynmanDiagram, blocks: &[VertexSet]) -> FeynmanDiagram {
    let mut out = d.clone();
    for &b in blocks.iter().filter(|&&b| cardinality(b) > 1) {
        out = contract(&out, b).expect("blocks consist of internal vertices");
    }
    out
}

fn min_label(set: VertexSet) -> Label {
    members(set).next().expect("non-empty set")
}

fn by_min_label(a: VertexSet, b: VertexSet) -> (VertexSet, VertexSet) {
    if min_label(a) <= min_label(b) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Check the defining properties of an extraction sequence by contracting the
/// original diagram, independently of how the sequence was produced.
pub fn is_valid_sequence(d: &FeynmanDiagram, seq: &ExtractionSequence) -> bool {
    let n = d.internal().len();
    if n == 0 || seq.chain.len() != n - 1 || seq.bubbles.len() != n - 1 {
        return false;
    }
    let mut prev = Subdiagram { vertices: 0, edges: Vec::new() };
    for cur in &seq.chain {
        if prev.vertices & cur.vertices != prev.vertices || prev.edges.iter().any(|e| !cur.edges.contains(e)) {
            return false;
        }
        let old: Vec<VertexSet> = components(&prev);
        let new: Vec<VertexSet> = components(cur);
        let fresh: Vec<VertexSet> = new.iter().copied().filter(|b| !old.contains(b)).collect();
        let [joined] = fresh[..] else {
            return false;
        };
        // the new block is two old blocks (or singletons) glued by a bubble
        let parts: Vec<VertexSet> = d
            .internal()
            .iter()
            .filter(|&&v| contains(joined, v))
            .map(|&v| old.iter().copied().find(|&b| contains(b, v)).unwrap_or(singleton(v)))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if parts.len() != 2 {
            return false;
        }
        let quotient = contract_blocks(d, &old);
        let pair = singleton(min_label(parts[0])) | singleton(min_label(parts[1]));
        if !is_bubble(&quotient, pair) || *cur != chain_member(d, &new) {
            return false;
        }
        prev = cur.clone();
    }
    let last = if n == 1 { d.clone() } else { contract_blocks(d, &[d.internal_set()]) };
    last.internal().len() == 1 && last.edges().is_empty()
}

/// A contraction chain `Γ = Γ_1 → Γ_2 → … → Γ_n` by bubbles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BubbleWitness {
    /// The diagrams `Γ_1, …, Γ_n`; the last has a single vertex and no edges.
    pub diagrams: Vec<FeynmanDiagram>,
    /// The bubble contracted at each step, labelled in the current diagram.
    pub bubbles: Vec<(Label, Label)>,
}

/// A witness chain for a nested bubble diagram, or `None`.
pub fn nested_bubble_witness(d: &FeynmanDiagram) -> Option<BubbleWitness> {
    let seq = collect_sequences(d, 1).pop()?;
    let mut diagrams = vec![d.clone()];
    let mut bubbles = Vec::new();
    for &(a, b) in &seq.bubbles {
        // contraction keeps the smallest label of a block
        let (x, y) = (min_label(a), min_label(b));
        let cur = diagrams.last().unwrap();
        debug_assert!(is_bubble(cur, singleton(x) | singleton(y)));
        let next = contract(cur, singleton(x) | singleton(y)).expect("bubble vertices are internal");
        bubbles.push((x.min(y), x.max(y)));
        diagrams.push(next);
    }
    Some(BubbleWitness { diagrams, bubbles })
}

/// Hepp trees with `Null(T) = |T̄|`, the single-leaf tree included.
pub fn zero_trees(d: &FeynmanDiagram) -> Vec<HeppTree> {
    trees_over(d.internal()).into_iter().filter(|t| null_count(t, d).null == t.inner_count()).collect()
}

fn heap_count(t: &HeppTree) -> u128 {
    RootedTree::from_hepp_inner(t).map_or(1, |r| heap_orderings(&r).expect("Hepp trees here are small"))
}

/// Image of a sequence: the tree grown by grafting at each step, with step `i`
/// labelling its new inner node `i + 1`. Labels are indexed by inner position.
pub fn sequence_to_ordered_tree(d: &FeynmanDiagram, seq: &ExtractionSequence) -> (HeppTree, Vec<usize>) {
    let mut expr: HashMap<VertexSet, String> = d.internal().iter().map(|&v| (singleton(v), v.to_string())).collect();
    for &(a, b) in &seq.bubbles {
        let e = format!("({},{})", expr.remove(&a).unwrap(), expr.remove(&b).unwrap());
        expr.insert(a | b, e);
    }
    let (_, root) = expr.into_iter().next().expect("sequence ends in one block");
    let t = HeppTree::parse(&root).expect("grafted expression is well formed");
    let mut ell = vec![0; t.inner_count()];
    for (i, &(a, b)) in seq.bubbles.iter().enumerate() {
        let u = t.inner_nodes().find(|&u| t.below(u) == a | b).expect("every step is an inner node");
        ell[t.inner_index(u)] = i + 1;
    }
    (t, ell)
}

/// Inverse map: merge the two subtrees of the inner node labelled `i` at step `i`.
pub fn ordered_tree_to_sequence(d: &FeynmanDiagram, t: &HeppTree, ell: &[usize]) -> ExtractionSequence {
    let mut nodes: Vec<usize> = t.inner_nodes().collect();
    nodes.sort_by_key(|&u| ell[t.inner_index(u)]);
    let steps: Vec<(VertexSet, VertexSet)> = nodes
        .into_iter()
        .map(|u| {
            let (x, y) = t.children(u).unwrap();
            (t.below(x), t.below(y))
        })
        .collect();
    sequence_from_steps(d, &steps)
}

/// Both sides of the bijection between extraction sequences and heap ordered
/// contributing trees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BijectionReport {
    pub sequences: u128,
    /// `Σ_T` heap orderings of `T̄` over the zero trees.
    pub ordered_trees: u128,
    /// `Σ_T |T̄|! / T̄!` over the zero trees.
    pub hooklength: u128,
    /// Every image is a zero tree with a heap ordering.
    pub images_valid: bool,
    pub injective: bool,
    /// Every image maps back to its sequence.
    pub inverse_ok: bool,
}

impl BijectionReport {
    pub fn holds(&self) -> bool {
        self.sequences == self.ordered_trees
            && self.ordered_trees == self.hooklength
            && self.images_valid
            && self.injective
            && self.inverse_ok
    }
}

pub fn bijection_report(d: &FeynmanDiagram) -> BijectionReport {
    let trees = zero_trees(d);
    let ordered_trees = trees.iter().map(heap_count).sum();
    let hooklength = trees
        .iter()
        .map(|t| RootedTree::from_hepp_inner(t).map_or(1, |r| hooklength_count(&r)))
        .sum();
    let keys: BTreeSet<String> = trees.iter().map(|t| t.to_string()).collect();
    let seqs = extraction_sequences(d);
    let mut images = BTreeSet::new();
    let mut images_valid = true;
    let mut inverse_ok = true;
    for s in &seqs {
        let (t, ell) = sequence_to_ordered_tree(d, s);
        let heap = RootedTree::from_hepp_inner(&t).map_or(ell.is_empty(), |r| is_heap_ordering(&r, &ell));
        images_valid &= heap && keys.contains(&t.to_string());
        inverse_ok &= ordered_tree_to_sequence(d, &t, &ell) == *s;
        images.insert((t.to_string(), ell));
    }
    BijectionReport {
        sequences: seqs.len() as u128,
        ordered_trees,
        hooklength,
        images_valid,
        injective: images.len() == seqs.len(),
        inverse_ok,
    }
}

/// `|𝕊(Γ)|` equals the number of heap ordered contributing trees, through an
/// explicit injective map.
pub fn bijection_check(d: &FeynmanDiagram) -> bool {
    bijection_report(d).holds()
}

#[cfg(test)]
mod tests;
