//! Hepp trees, scale counting, sectors, rewiring and safe/unsafe forests.

mod rewire;
mod safety;
mod scales;
mod sectors;
mod tree;

pub use rewire::{in_out_edges, rewire_forest, unit_edges, RewireVariant, RewiredDiagram, UnitEdge};
pub use safety::{
    analyse, classify_in_frame, classify_safe_unsafe, edge_node, intervals_in_frame, is_partition, is_safe_forest,
    partition_forests, raw_safe, shifted_exponents, ForestInterval, Partition, SafeUnsafeReport, ScaleFrame,
    ShiftedExponents, Verdict,
};
pub use scales::{
    compatible_assignments, contributing_trees, cumulative, eta_of, null_count, report_from_eta, NullReport,
    ScaleAssignment,
};
pub use sectors::{
    forced_scales, in_sector, locate_sector, locate_sector_for, merge_tree, sector_constant, sectors_containing,
    shell_index, torus_distance, Point,
};
pub use tree::{enumerate_hepp_trees, trees_over, HeppTree};
