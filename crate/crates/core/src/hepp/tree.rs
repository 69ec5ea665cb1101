use std::fmt;

use crate::diagrams::{singleton, FeynmanDiagram, Label, VertexSet};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
enum Shape {
    Leaf(Label),
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    fn min_leaf(&self) -> Label {
        match self {
            Shape::Leaf(l) => *l,
            Shape::Node(a, b) => a.min_leaf().min(b.min_leaf()),
        }
    }

    /// Every way of attaching `leaf` above some node of `self`.
    fn insertions(&self, leaf: Label) -> Vec<Shape> {
        let mut out = vec![Shape::Node(Box::new(self.clone()), Box::new(Shape::Leaf(leaf)))];
        if let Shape::Node(a, b) = self {
            for a2 in a.insertions(leaf) {
                out.push(Shape::Node(Box::new(a2), b.clone()));
            }
            for b2 in b.insertions(leaf) {
                out.push(Shape::Node(a.clone(), Box::new(b2)));
            }
        }
        out
    }
}

/// Rooted binary tree over a set of vertex labels.
///
/// Nodes `0..m` are the leaves in increasing label order, nodes `m..2m-1`
/// are the inner nodes numbered in post-order with children sorted by their
/// smallest leaf. Equal trees therefore have equal representations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeppTree {
    leaves: Vec<Label>,
    kids: Vec<(usize, usize)>,
    parent: Vec<Option<usize>>,
    below: Vec<VertexSet>,
}

impl HeppTree {
    fn from_shape(shape: &Shape) -> HeppTree {
        fn collect(s: &Shape, out: &mut Vec<Label>) {
            match s {
                Shape::Leaf(l) => out.push(*l),
                Shape::Node(a, b) => {
                    collect(a, out);
                    collect(b, out);
                }
            }
        }
        let mut leaves = Vec::new();
        collect(shape, &mut leaves);
        leaves.sort_unstable();
        let m = leaves.len();
        let mut t = HeppTree {
            parent: vec![None; m],
            below: leaves.iter().map(|&l| singleton(l)).collect(),
            leaves,
            kids: Vec::new(),
        };
        t.build(shape);
        t
    }

    fn build(&mut self, s: &Shape) -> usize {
        match s {
            Shape::Leaf(l) => self.leaves.binary_search(l).unwrap(),
            Shape::Node(a, b) => {
                let (a, b) = if a.min_leaf() <= b.min_leaf() { (a, b) } else { (b, a) };
                let x = self.build(a);
                let y = self.build(b);
                let id = self.parent.len();
                self.parent.push(None);
                self.below.push(self.below[x] | self.below[y]);
                self.kids.push((x, y));
                self.parent[x] = Some(id);
                self.parent[y] = Some(id);
                id
            }
        }
    }

    /// Parse a nested parenthesised expression such as `((1,2),(3,4))`.
    pub fn parse(s: &str) -> Result<HeppTree> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let shape = parse_shape(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(Error::InvalidInput(format!("trailing input in tree '{s}'")));
        }
        let t = HeppTree::from_shape(&shape);
        if t.leaves.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("repeated leaf in tree '{s}'")));
        }
        Ok(t)
    }

    pub fn leaves(&self) -> &[Label] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn inner_count(&self) -> usize {
        self.kids.len()
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    /// Node ids of the inner nodes.
    pub fn inner_nodes(&self) -> std::ops::Range<usize> {
        self.leaves.len()..self.parent.len()
    }

    /// Position of an inner node among the inner nodes.
    pub fn inner_index(&self, node: usize) -> usize {
        node - self.leaves.len()
    }

    pub fn is_inner(&self, node: usize) -> bool {
        node >= self.leaves.len()
    }

    pub fn root(&self) -> usize {
        self.parent.len() - 1
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        self.is_inner(node).then(|| self.kids[self.inner_index(node)])
    }

    pub fn leaf_node(&self, label: Label) -> Option<usize> {
        self.leaves.binary_search(&label).ok()
    }

    /// Labels of the leaves at or below `node`.
    pub fn below(&self, node: usize) -> VertexSet {
        self.below[node]
    }

    /// `a ≺ b`: `a` is a strict ancestor of `b`.
    pub fn is_strict_ancestor(&self, a: usize, b: usize) -> bool {
        a != b && self.below[b] & self.below[a] == self.below[b]
    }

    pub fn is_ancestor_or_equal(&self, a: usize, b: usize) -> bool {
        a == b || self.is_strict_ancestor(a, b)
    }

    pub fn lca(&self, a: usize, b: usize) -> usize {
        let target = self.below[a] | self.below[b];
        let mut u = a;
        while self.below[u] & target != target {
            u = self.parent[u].expect("root covers all leaves");
        }
        u
    }

    /// Least common ancestor of two vertex labels.
    pub fn lca_labels(&self, v: Label, w: Label) -> usize {
        let a = self.leaf_node(v).expect("label is a leaf of the tree");
        let b = self.leaf_node(w).expect("label is a leaf of the tree");
        self.lca(a, b)
    }

    pub fn depth(&self, node: usize) -> usize {
        let mut d = 0;
        let mut u = node;
        while let Some(p) = self.parent[u] {
            d += 1;
            u = p;
        }
        d
    }

    fn fmt_node(&self, node: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.children(node) {
            None => write!(f, "{}", self.leaves[node]),
            Some((a, b)) => {
                write!(f, "(")?;
                self.fmt_node(a, f)?;
                write!(f, ",")?;
                self.fmt_node(b, f)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for HeppTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_node(self.root(), f)
    }
}

fn parse_shape(c: &[char], pos: &mut usize) -> Result<Shape> {
    let bad = || Error::InvalidInput("malformed tree expression".into());
    match c.get(*pos) {
        Some('(') => {
            *pos += 1;
            let a = parse_shape(c, pos)?;
            if c.get(*pos) != Some(&',') {
                return Err(bad());
            }
            *pos += 1;
            let b = parse_shape(c, pos)?;
            if c.get(*pos) != Some(&')') {
                return Err(bad());
            }
            *pos += 1;
            Ok(Shape::Node(Box::new(a), Box::new(b)))
        }
        Some(d) if d.is_ascii_digit() => {
            let start = *pos;
            while c.get(*pos).is_some_and(|x| x.is_ascii_digit()) {
                *pos += 1;
            }
            let s: String = c[start..*pos].iter().collect();
            s.parse().map(Shape::Leaf).map_err(|_| bad())
        }
        _ => Err(bad()),
    }
}

/// All rooted binary trees with the given leaves, `(2m-3)!!` of them.
pub fn trees_over(labels: &[Label]) -> Vec<HeppTree> {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    let Some((&first, rest)) = sorted.split_first() else {
        return Vec::new();
    };
    let mut shapes = vec![Shape::Leaf(first)];
    for &l in rest {
        shapes = shapes.iter().flat_map(|s| s.insertions(l)).collect();
    }
    shapes.iter().map(HeppTree::from_shape).collect()
}

/// Hepp trees over the internal vertices of `d`.
pub fn enumerate_hepp_trees(d: &FeynmanDiagram) -> Vec<HeppTree> {
    trees_over(d.internal())
}
