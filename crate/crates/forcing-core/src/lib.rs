//! Combinatorics of tree-indexed Cohen forcing at desk scale.
//!
//! The library models a finite "ladder" of cardinal levels, finite trees of
//! nodes graded by those levels, forcing conditions assigning Cohen pieces to
//! tree nodes, level-preserving node permutations acting as poset
//! automorphisms, the block-base surjections with their perturbation clouds,
//! a constructive homogenization procedure, and a finite generic-filter
//! simulator that extracts Cohen sets.

pub mod ladder;
pub mod tree;
pub mod poset;
pub mod perm;
pub mod symmetry;
pub mod generic;
pub mod fixtures;
pub mod sampling;

pub use ladder::{LadderSpec, LevelKind, NodeId, OrdIndex};
pub use perm::NodePerm;
pub use poset::{CohenPiece, Condition, Coord};
pub use tree::{LevelTree, TreeRelation};
