//! Rooted trees, tree factorials and heap orderings.
//!
//! A heap ordering labels the nodes `1..=n` so that every node carries a label
//! at least as large as each of its descendants; the root gets `n`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hepp::HeppTree;

/// Largest tree accepted by [`heap_orderings`].
pub const MAX_HEAP_NODES: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl RootedTree {
    /// Tree from a parent array with exactly one `None`.
    pub fn from_parents(parent: Vec<Option<usize>>) -> Result<Self> {
        let n = parent.len();
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidInput(format!("expected one root, found {}", roots.len())));
        }
        if parent.iter().flatten().any(|&p| p >= n) {
            return Err(Error::InvalidInput("parent index out of range".into()));
        }
        for start in 0..n {
            let mut v = start;
            let mut steps = 0;
            while let Some(p) = parent[v] {
                v = p;
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidInput("parent array has a cycle".into()));
                }
            }
        }
        let mut children = vec![Vec::new(); n];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(v);
            }
        }
        Ok(RootedTree { parent, children, root: roots[0] })
    }

    pub fn single() -> Self {
        RootedTree { parent: vec![None], children: vec![Vec::new()], root: 0 }
    }

    /// Path on `n ≥ 1` nodes rooted at node 0.
    pub fn path(n: usize) -> Self {
        let parent = (0..n.max(1)).map(|v| v.checked_sub(1)).collect();
        Self::from_parents(parent).expect("a path is a tree")
    }

    /// The tree `T̄` of inner nodes of a Hepp tree, indexed by inner position.
    pub fn from_hepp_inner(t: &HeppTree) -> Option<Self> {
        if t.inner_count() == 0 {
            return None;
        }
        let parent = t.inner_nodes().map(|u| t.parent(u).map(|p| t.inner_index(p))).collect();
        Some(Self::from_parents(parent).expect("inner nodes of a Hepp tree form a tree"))
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    fn size_and_factorial(&self, v: usize) -> (u128, u128) {
        let mut size = 1u128;
        let mut fact = 1u128;
        for &c in &self.children[v] {
            let (s, f) = self.size_and_factorial(c);
            size += s;
            fact *= f;
        }
        (size, size * fact)
    }
}

/// `τ! = |τ| τ₁! ⋯ τ_k!` with `•! = 1`.
pub fn tree_factorial(t: &RootedTree) -> u128 {
    t.size_and_factorial(t.root).1
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// `|τ|! / τ!`.
pub fn hooklength_count(t: &RootedTree) -> u128 {
    factorial(t.len()) / tree_factorial(t)
}

/// Number of heap orderings, counted by placing labels from the top down.
pub fn heap_orderings(t: &RootedTree) -> Result<u128> {
    let n = t.len();
    if n > MAX_HEAP_NODES {
        return Err(Error::BudgetExceeded(format!("{n} nodes exceeds the heap ordering limit {MAX_HEAP_NODES}")));
    }
    fn count(t: &RootedTree, placed: u64, full: u64, memo: &mut HashMap<u64, u128>) -> u128 {
        if placed == full {
            return 1;
        }
        if let Some(&c) = memo.get(&placed) {
            return c;
        }
        let mut total = 0;
        for v in 0..t.len() {
            let bit = 1u64 << v;
            if placed & bit != 0 {
                continue;
            }
            let ready = t.parent[v].map_or(true, |p| placed & (1u64 << p) != 0);
            if ready {
                total += count(t, placed | bit, full, memo);
            }
        }
        memo.insert(placed, total);
        total
    }
    let full = (1u64 << n) - 1;
    Ok(count(t, 0, full, &mut HashMap::new()))
}

/// Whether `ell` is a bijection onto `1..=n` labelling every parent above its
/// children.
pub fn is_heap_ordering(t: &RootedTree, ell: &[usize]) -> bool {
    let n = t.len();
    if ell.len() != n {
        return false;
    }
    let mut seen = vec![false; n + 1];
    for &l in ell {
        if l == 0 || l > n || seen[l] {
            return false;
        }
        seen[l] = true;
    }
    (0..n).all(|v| t.parent[v].map_or(true, |p| ell[p] >= ell[v]))
}
