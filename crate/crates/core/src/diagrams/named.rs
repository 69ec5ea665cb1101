//! Built-in diagrams used by the CLI, the fixtures and the tests.

use std::collections::BTreeMap;

use super::graph::FeynmanDiagram;
use super::trees::{build, pairing_from, trees_from_sizes};
use crate::error::{Error, Result};

pub const NAMES: [&str; 9] = [
    "tadpole",
    "bubble4",
    "crossed4",
    "sunset2",
    "star",
    "nested4",
    "parallel",
    "chain2sunset",
    "k4",
];

/// Tree sizes and cross-tree pairs `((tree, pos), (tree, pos))` of a named diagram.
pub fn recipe(name: &str) -> Option<(Vec<usize>, Vec<((usize, usize), (usize, usize))>)> {
    let r = match name {
        "tadpole" => (vec![2], vec![((0, 1), (0, 2))]),
        "bubble4" => (vec![2, 2], vec![((0, 1), (1, 1)), ((0, 2), (1, 2))]),
        "crossed4" => (vec![2, 2], vec![((0, 1), (1, 2)), ((0, 2), (1, 1))]),
        "sunset2" => (vec![4], vec![((0, 1), (0, 3)), ((0, 2), (0, 4))]),
        "star" => (vec![1, 1], vec![((0, 1), (1, 1))]),
        "nested4" => (
            vec![3, 5],
            vec![((0, 1), (1, 2)), ((0, 2), (1, 3)), ((0, 3), (1, 5)), ((1, 1), (1, 4))],
        ),
        "parallel" => (
            vec![4, 4],
            vec![((0, 1), (1, 1)), ((0, 2), (1, 2)), ((0, 3), (1, 3)), ((0, 4), (1, 4))],
        ),
        "chain2sunset" => (
            vec![8],
            vec![((0, 1), (0, 3)), ((0, 2), (0, 4)), ((0, 5), (0, 7)), ((0, 6), (0, 8))],
        ),
        "k4" => (
            vec![4, 4],
            vec![((0, 1), (1, 2)), ((0, 2), (1, 4)), ((0, 3), (1, 1)), ((0, 4), (1, 3))],
        ),
        _ => return None,
    };
    Some(r)
}

/// Alternative names: `c42` is the nested chain, `cc42plain` the three
/// parallel bubbles.
pub fn canonical_name(name: &str) -> &str {
    match name {
        "c42" => "nested4",
        "cc42plain" => "parallel",
        other => other,
    }
}

/// Build a named diagram.
///
/// `nested4` is relabelled so its inner vertices read 1, 2, 3, 4 along the
/// nesting (innermost bubble {1,2}, then 3, then 4); the other diagrams keep
/// the traversal labels.
pub fn named(name: &str) -> Result<FeynmanDiagram> {
    let name = canonical_name(name);
    let (sizes, pairs) = recipe(name).ok_or_else(|| Error::InvalidInput(format!("unknown diagram '{name}'")))?;
    let trees = trees_from_sizes(&sizes);
    let d = build(&trees, &pairing_from(&trees, &pairs)?)?;
    if name == "nested4" {
        let map: BTreeMap<usize, usize> = [(3, 4), (4, 5), (5, 6), (6, 3)].into_iter().collect();
        return d.relabel(&map);
    }
    Ok(d)
}
