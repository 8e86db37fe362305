//! Grid classes of permutations.
//!
//! This crate provides the machinery for working with grid classes of
//! permutations: pattern containment and substitution decomposition
//! ([`perm`]), the cell classes used to label gridding matrices
//! ([`classes`]), griddings and gridded containment ([`gridding`]), the
//! symmetry group of grid mappings together with canonicalization of path
//! matrices ([`gridmaps`]), grid pin sequences and the antichain families
//! they generate ([`pins`]), the inflation/decomposition machinery for
//! tree-shaped matrices with one distinguished cell ([`minflate`]), and a
//! tri-state partial-well-order decider ([`decision`]).
//!
//! Everything is exact and deterministic: permutations are one-line
//! sequences over `1..=n`, pin coordinates are arbitrary-precision
//! rationals, and every verdict carries a justification trace.
//!
//! The `examples/` directory contains one runnable example per major
//! capability; the `gridkit` binary exposes the same operations as JSON
//! subcommands.

pub mod classes;
// pub mod decision;
pub mod gridding;
// pub mod gridmaps;
// pub mod minflate;
pub mod perm;
// pub mod pins;
// pub mod report;
pub mod workers;

pub use classes::CellClass;
// pub use decision::{decide_pwo, PwoStatus, PwoVerdict};
pub use gridding::{
    enumerate_griddings, gridded_contains, Gridding, GriddedPermutation, GriddingMatrix,
    MatrixGraph,
};
// pub use gridmaps::{canonicalize, check_path_conditions, enumerate_mappings, GridMapping};
// pub use minflate::{m_decompose, m_inflate, m_inflate_lenient, RootedTreeMatrix, SlottedGridded};
pub use perm::Permutation;
/* pub use pins::{
    antichain_element, generate_pin_sequence, min_antichain_length, mk_matrix,
    validate_pin_sequence, verify_antichain, verify_strongly_unique, PinSequence,
}; */
