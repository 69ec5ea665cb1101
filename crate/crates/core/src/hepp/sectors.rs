//! Dyadic sectors of configuration space on the torus `[0, 2π)^d`.
//!
//! A point configuration lies in the sector of `(T, n)` when every pair of
//! points sits in the dyadic shell fixed by the scale of its least common
//! ancestor. The shell of a distance is therefore forced, and a tree either
//! admits a consistent scale map or does not.

use std::f64::consts::PI;

use super::scales::ScaleAssignment;
use super::tree::{trees_over, HeppTree};
use crate::diagrams::{FeynmanDiagram, Label};
use crate::error::{Error, Result};

pub type Point = Vec<f64>;

/// Outer radius `√d π` of the coarsest shell; the torus diameter.
pub fn sector_constant(dim: usize) -> f64 {
    (dim as f64).sqrt() * PI
}

pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    let tau = 2.0 * PI;
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(tau);
            let d = d.min(tau - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// The unique `n` with `C 2^{-n-1} < r ≤ C 2^{-n}`.
pub fn shell_index(r: f64, dim: usize) -> u32 {
    let c = sector_constant(dim);
    let mut n = (c / r).log2().floor().max(0.0) as u32;
    // repair rounding at shell walls
    while n > 0 && r > c * 2f64.powi(-(n as i32)) {
        n -= 1;
    }
    while r <= c * 2f64.powi(-(n as i32) - 1) {
        n += 1;
    }
    n
}

fn positions(t: &HeppTree, labels: &[Label]) -> Result<Vec<usize>> {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    if sorted != t.leaves() {
        return Err(Error::InvalidInput("point labels must match the tree leaves".into()));
    }
    Ok(labels.iter().map(|&l| t.leaf_node(l).unwrap()).collect())
}

/// Membership of `x` (points listed in the order of `labels`) in `D_(T,n)`.
pub fn in_sector(t: &HeppTree, n: &ScaleAssignment, labels: &[Label], x: &[Point]) -> Result<bool> {
    let nodes = positions(t, labels)?;
    let dim = x.first().map_or(0, Vec::len);
    let c = sector_constant(dim);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let u = t.lca(nodes[i], nodes[j]);
            let k = n.get(t, u) as i32;
            let r = torus_distance(&x[i], &x[j]);
            if !(c * 2f64.powi(-k - 1) < r && r <= c * 2f64.powi(-k)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn check_nondegenerate(x: &[Point]) -> Result<()> {
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if torus_distance(&x[i], &x[j]) == 0.0 {
                return Err(Error::DegenerateConfiguration(format!("points {i} and {j} coincide")));
            }
        }
    }
    Ok(())
}

/// The forced scale map of `t` at `x`, if every inner node sees a single shell.
pub fn forced_scales(t: &HeppTree, labels: &[Label], x: &[Point]) -> Result<Option<ScaleAssignment>> {
    let nodes = positions(t, labels)?;
    let dim = x.first().map_or(0, Vec::len);
    let mut values: Vec<Option<u32>> = vec![None; t.inner_count()];
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let u = t.inner_index(t.lca(nodes[i], nodes[j]));
            let k = shell_index(torus_distance(&x[i], &x[j]), dim);
            match values[u] {
                None => values[u] = Some(k),
                Some(v) if v != k => return Ok(None),
                _ => {}
            }
        }
    }
    let n = ScaleAssignment { values: values.into_iter().map(|v| v.unwrap_or(0)).collect() };
    Ok(n.is_compatible(t).then_some(n))
}

/// Single-linkage merge tree: merge clusters in order of increasing distance.
pub fn merge_tree(labels: &[Label], x: &[Point]) -> HeppTree {
    let m = labels.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            pairs.push((torus_distance(&x[i], &x[j]), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cluster: Vec<usize> = (0..m).collect();
    let mut expr: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
    for (_, i, j) in pairs {
        let (a, b) = (cluster[i], cluster[j]);
        if a == b {
            continue;
        }
        expr[a] = format!("({},{})", expr[a], expr[b]);
        for c in cluster.iter_mut() {
            if *c == b {
                *c = a;
            }
        }
    }
    HeppTree::parse(&expr[cluster[0]]).expect("merge expression is well formed")
}

/// Find a sector containing `x`, with points indexed like `d.internal()`.
///
/// The merge tree is tried first; failing that every tree is checked. The
/// result is re-verified before it is returned.
pub fn locate_sector(d: &FeynmanDiagram, x: &[Point]) -> Result<(HeppTree, ScaleAssignment)> {
    locate_sector_for(d.internal(), x)
}

pub fn locate_sector_for(labels: &[Label], x: &[Point]) -> Result<(HeppTree, ScaleAssignment)> {
    if labels.len() != x.len() || labels.len() < 2 {
        return Err(Error::InvalidInput("need one point per label and at least two labels".into()));
    }
    check_nondegenerate(x)?;
    let first = merge_tree(labels, x);
    let candidates = std::iter::once(first.clone()).chain(trees_over(labels).into_iter().filter(|t| *t != first));
    for t in candidates {
        if let Some(n) = forced_scales(&t, labels, x)? {
            if in_sector(&t, &n, labels, x)? {
                return Ok((t, n));
            }
        }
    }
    Err(Error::NotCovered)
}

/// Every sector containing `x`; at most one scale map per tree.
pub fn sectors_containing(labels: &[Label], x: &[Point]) -> Result<Vec<(HeppTree, ScaleAssignment)>> {
    check_nondegenerate(x)?;
    let mut out = Vec::new();
    for t in trees_over(labels) {
        if let Some(n) = forced_scales(&t, labels, x)? {
            if in_sector(&t, &n, labels, x)? {
                out.push((t, n));
            }
        }
    }
    Ok(out)
}
