//! Finite generic-filter simulation: extend a condition until a list of
//! requirements holds, then read off the Cohen set below each node and
//! evaluate the block surjection on it.
//!
//! Genericity proper is out of reach at desk scale; a requirement list is
//! its finite stand-in, and meeting it is verified by an independent
//! checker rather than assumed.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ladder::{LadderSpec, LevelKind, NodeId, OrdIndex};
use crate::poset::{CohenPiece, Condition, Coord};
use crate::symmetry::{surjection_value, SymmetryError};

/// A single dense requirement to meet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Requirement {
    /// The node (with its full predecessor chain) is in the tree.
    RequireNode { node: NodeId },
    /// The branch node owning the coordinate's interval decides it.
    #[serde(rename_all = "camelCase")]
    DecideCoord {
        node: NodeId,
        coord: Coord,
        #[serde(
            default,
            skip_serializing_if = "Option::is_none",
            with = "opt_bit"
        )]
        bit: Option<bool>,
    },
    /// The Cohen sets of two same-level nodes differ on a decided
    /// coordinate.
    SeparatePair { a: NodeId, b: NodeId },
}

mod opt_bit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<bool>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_u8(u8::from(*b)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<bool>, D::Error> {
        match Option::<u8>::deserialize(d)? {
            None => Ok(None),
            Some(0) => Ok(Some(false)),
            Some(1) => Ok(Some(true)),
            Some(other) => Err(serde::de::Error::custom(format!(
                "bit must be 0 or 1, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenericError {
    #[error("Unsatisfiable: {0}")]
    Unsatisfiable(String),
    #[error("NodeNotInTree: {0}")]
    NodeNotInTree(NodeId),
    #[error("BadRequirement: {0}")]
    BadRequirement(String),
    #[error("WrongLevel: node {node} is not at level {level}")]
    WrongLevel { node: NodeId, level: u32 },
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// Failure of [`build_chain`], naming the requirement that failed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("requirement {index}: {source}")]
pub struct ChainError {
    pub index: usize,
    pub source: GenericError,
}

/// Checks a requirement's well-formedness against a spec.
pub fn validate_requirement(spec: &LadderSpec, req: &Requirement) -> Result<(), GenericError> {
    let check_node = |n: NodeId| {
        if spec.contains(n) {
            Ok(())
        } else {
            Err(GenericError::BadRequirement(format!(
                "node {n} is outside the node space"
            )))
        }
    };
    match req {
        Requirement::RequireNode { node } => check_node(*node),
        Requirement::DecideCoord { node, coord, .. } => {
            check_node(*node)?;
            if coord.interval > node.level {
                return Err(GenericError::BadRequirement(format!(
                    "coordinate {coord} lies above node {node}"
                )));
            }
            if spec.kind(coord.interval) == Some(LevelKind::Limit) {
                return Err(GenericError::BadRequirement(format!(
                    "coordinate {coord} belongs to a limit level, which carries no bits"
                )));
            }
            Ok(())
        }
        Requirement::SeparatePair { a, b } => {
            check_node(*a)?;
            check_node(*b)?;
            if a == b {
                return Err(GenericError::BadRequirement(format!(
                    "separate pair needs two distinct nodes, got {a} twice"
                )));
            }
            if a.level != b.level {
                return Err(GenericError::BadRequirement(format!(
                    "separate pair needs nodes on one level, got {a} and {b}"
                )));
            }
            Ok(())
        }
    }
}

/// Adds `node` with a freshly synthesized predecessor chain where missing,
/// choosing at every level the block-0 node with the least unused offset.
/// New nodes carry empty pieces.
fn ensure_node(cond: &Condition, node: NodeId) -> Condition {
    if cond.tree().contains(node) {
        return cond.clone();
    }
    let mut nodes: BTreeSet<NodeId> = cond.tree().nodes().collect();
    let mut parent: std::collections::BTreeMap<NodeId, NodeId> = cond
        .tree()
        .nodes()
        .filter_map(|n| cond.tree().parent(n).map(|p| (n, p)))
        .collect();
    let mut pieces: std::collections::BTreeMap<NodeId, CohenPiece> = cond
        .pieces()
        .map(|(n, piece)| (n, piece.clone()))
        .collect();

    let mut chain = Vec::new();
    for level in 0..node.level {
        let mut offset = 0;
        let fresh = loop {
            let candidate = NodeId::new(level, 0, offset);
            if !nodes.contains(&candidate) {
                break candidate;
            }
            offset += 1;
        };
        nodes.insert(fresh);
        pieces.insert(fresh, CohenPiece::empty());
        chain.push(fresh);
    }
    nodes.insert(node);
    pieces.insert(node, CohenPiece::empty());
    chain.push(node);
    for pair in chain.windows(2) {
        parent.insert(pair[1], pair[0]);
    }
    Condition::from_parts(
        crate::tree::LevelTree::from_parts(nodes, parent),
        pieces,
    )
}

fn set_bit(cond: &Condition, owner: NodeId, coord: Coord, bit: bool) -> Condition {
    let tree = cond.tree().clone();
    let pieces = cond
        .pieces()
        .map(|(n, piece)| {
            if n == owner {
                let mut updated = piece.clone();
                updated.insert(coord, bit);
                (n, updated)
            } else {
                (n, piece.clone())
            }
        })
        .collect();
    Condition::from_parts(tree, pieces)
}

/// Extends `p` just enough to satisfy one requirement. Already-satisfied
/// requirements return `p` unchanged. The seed only influences bits the
/// requirement leaves open.
pub fn extend_to_meet(
    spec: &LadderSpec,
    p: &Condition,
    req: &Requirement,
    seed: u64,
) -> Result<Condition, GenericError> {
    validate_requirement(spec, req)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match req {
        Requirement::RequireNode { node } => Ok(ensure_node(p, *node)),
        Requirement::DecideCoord { node, coord, bit } => {
            let extended = ensure_node(p, *node);
            let branch = extended
                .tree()
                .branch(*node)
                .expect("node was just ensured");
            let owner = branch[coord.interval as usize];
            if extended.piece(owner).unwrap().bit(*coord).is_some() {
                return Ok(extended);
            }
            let chosen = bit.unwrap_or_else(|| rng.gen());
            Ok(set_bit(&extended, owner, *coord, chosen))
        }
        Requirement::SeparatePair { a, b } => {
            let extended = ensure_node(&ensure_node(p, *a), *b);
            let branch_a = extended.tree().branch(*a).expect("ensured");
            let branch_b = extended.tree().branch(*b).expect("ensured");

            // levels where the branches pass through different nodes and
            // bits may be placed
            let split_levels: Vec<u32> = (0..=a.level)
                .filter(|&lvl| {
                    branch_a[lvl as usize] != branch_b[lvl as usize]
                        && spec.kind(lvl) != Some(LevelKind::Limit)
                })
                .collect();

            // already decided apart somewhere?
            for &lvl in &split_levels {
                let pa = extended.piece(branch_a[lvl as usize]).unwrap();
                let pb = extended.piece(branch_b[lvl as usize]).unwrap();
                let decided_apart = pa
                    .bits()
                    .any(|(c, bit_a)| pb.bit(c).is_some_and(|bit_b| bit_b != bit_a));
                if decided_apart {
                    return Ok(extended);
                }
            }

            let Some(&lvl) = split_levels.first() else {
                return Err(GenericError::Unsatisfiable(format!(
                    "branches of {a} and {b} coincide at every non-limit level, \
                     so their Cohen sets agree in every extension"
                )));
            };
            let owner_a = branch_a[lvl as usize];
            let owner_b = branch_b[lvl as usize];
            let mut offset = 0;
            let coord = loop {
                let candidate = Coord::new(lvl, offset);
                let taken = extended.piece(owner_a).unwrap().bit(candidate).is_some()
                    || extended.piece(owner_b).unwrap().bit(candidate).is_some();
                if !taken {
                    break candidate;
                }
                offset += 1;
            };
            let updated = set_bit(&extended, owner_a, coord, true);
            Ok(set_bit(&updated, owner_b, coord, false))
        }
    }
}

/// A recorded descending sequence of conditions, one step per requirement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenericChain {
    steps: Vec<Condition>,
}

impl GenericChain {
    pub fn steps(&self) -> &[Condition] {
        &self.steps
    }

    pub fn final_condition(&self) -> &Condition {
        self.steps.last().expect("chains are nonempty")
    }
}

fn step_seed(seed: u64, index: usize) -> u64 {
    // splitmix-style spread so each step draws an independent stream
    (seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x243F_6A88_85A3_08D3)
}

/// Folds [`extend_to_meet`] over the requirement list, recording every
/// step. Deterministic in `seed`.
pub fn build_chain(
    spec: &LadderSpec,
    start: &Condition,
    reqs: &[Requirement],
    seed: u64,
) -> Result<GenericChain, ChainError> {
    let mut steps = vec![start.clone()];
    for (index, req) in reqs.iter().enumerate() {
        let prev = steps.last().unwrap();
        let next = extend_to_meet(spec, prev, req, step_seed(seed, index))
            .map_err(|source| ChainError { index, source })?;
        debug_assert!(next.leq(prev));
        steps.push(next);
    }
    Ok(GenericChain { steps })
}

/// The decided part of a node's Cohen set: coordinates set to 1 somewhere
/// on its branch, and coordinates set to 0 there and nowhere set to 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CohenSet {
    pub ones: BTreeSet<Coord>,
    pub zeros: BTreeSet<Coord>,
}

/// Reads the Cohen set of `node` off the branch below it. A coordinate
/// with a 1 anywhere on the branch is in; the check for 1 is existential,
/// so a 1 wins over a 0 elsewhere on the branch.
pub fn cohen_set(cond: &Condition, node: NodeId) -> Result<CohenSet, GenericError> {
    let branch = cond
        .tree()
        .branch(node)
        .map_err(|_| GenericError::NodeNotInTree(node))?;
    let mut ones = BTreeSet::new();
    let mut decided_zero = BTreeSet::new();
    for n in branch {
        for (c, bit) in cond.piece(n).expect("conditions cover their trees").bits() {
            if bit {
                ones.insert(c);
            } else {
                decided_zero.insert(c);
            }
        }
    }
    let zeros = decided_zero.difference(&ones).copied().collect();
    Ok(CohenSet { ones, zeros })
}

/// Evaluates the block surjection on the Cohen set of a tree node: the
/// value depends only on the node's index.
pub fn surjection_value_at_node(
    spec: &LadderSpec,
    cond: &Condition,
    level: u32,
    delta: OrdIndex,
    node: NodeId,
) -> Result<OrdIndex, GenericError> {
    if !cond.tree().contains(node) {
        return Err(GenericError::NodeNotInTree(node));
    }
    if node.level != level {
        return Err(GenericError::WrongLevel { node, level });
    }
    Ok(surjection_value(spec, level, delta, node.idx)?)
}

/// Independent check that a requirement holds in a condition; used to
/// verify chains rather than trusting the construction.
pub fn requirement_met(
    spec: &LadderSpec,
    cond: &Condition,
    req: &Requirement,
) -> Result<bool, GenericError> {
    validate_requirement(spec, req)?;
    match req {
        Requirement::RequireNode { node } => Ok(cond.tree().contains(*node)),
        Requirement::DecideCoord { node, coord, .. } => {
            if !cond.tree().contains(*node) {
                return Ok(false);
            }
            let branch = cond.tree().branch(*node).expect("checked");
            let owner = branch[coord.interval as usize];
            Ok(cond
                .piece(owner)
                .is_some_and(|piece| piece.bit(*coord).is_some()))
        }
        Requirement::SeparatePair { a, b } => {
            if !cond.tree().contains(*a) || !cond.tree().contains(*b) {
                return Ok(false);
            }
            let sa = cohen_set(cond, *a)?;
            let sb = cohen_set(cond, *b)?;
            let apart = sa.ones.intersection(&sb.zeros).next().is_some()
                || sa.zeros.intersection(&sb.ones).next().is_some();
            Ok(apart)
        }
    }
}
