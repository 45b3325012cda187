//! The forcing poset: conditions mapping tree nodes to Cohen pieces,
//! the extension order, restriction to subtrees, and constructive
//! compatibility via weakest common extensions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ladder::{LadderSpec, LevelKind, NodeId};
use crate::tree::{LevelTree, MergeClash, TreeError};

/// A coordinate in the Cohen domain of one ladder level. `interval` names
/// the ladder position whose ordinal interval the coordinate lives in
/// (position 0 stands for the whole first level, position `i > 0` for the
/// half-open interval between levels `i-1` and `i`); `offset` picks the
/// point inside it. Only equality of coordinates matters combinatorially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(u32, u32)", into = "(u32, u32)")]
pub struct Coord {
    pub interval: u32,
    pub offset: u32,
}

impl Coord {
    pub const fn new(interval: u32, offset: u32) -> Self {
        Coord { interval, offset }
    }
}

impl From<(u32, u32)> for Coord {
    fn from((interval, offset): (u32, u32)) -> Self {
        Coord { interval, offset }
    }
}

impl From<Coord> for (u32, u32) {
    fn from(c: Coord) -> Self {
        (c.interval, c.offset)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}:{}]", self.interval, self.offset)
    }
}

/// A finite partial 0/1 assignment on coordinates; the forcing data at one
/// tree node, ordered by reverse inclusion of the bit map.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct CohenPiece {
    bits: BTreeMap<Coord, bool>,
}

impl CohenPiece {
    pub fn empty() -> Self {
        CohenPiece::default()
    }

    pub fn from_bits(bits: impl IntoIterator<Item = (Coord, bool)>) -> Self {
        CohenPiece {
            bits: bits.into_iter().collect(),
        }
    }

    pub fn bit(&self, c: Coord) -> Option<bool> {
        self.bits.get(&c).copied()
    }

    pub fn bits(&self) -> impl Iterator<Item = (Coord, bool)> + '_ {
        self.bits.iter().map(|(c, b)| (*c, *b))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn insert(&mut self, c: Coord, b: bool) {
        self.bits.insert(c, b);
    }

    /// Containment as partial functions: every bit of `other` is present
    /// here with the same value.
    pub fn contains_piece(&self, other: &CohenPiece) -> bool {
        other.bits().all(|(c, b)| self.bit(c) == Some(b))
    }

    /// Coordinate-wise union, or the first clashing coordinate.
    pub fn union(&self, other: &CohenPiece) -> Result<CohenPiece, Coord> {
        let mut bits = self.bits.clone();
        for (c, b) in other.bits() {
            match bits.insert(c, b) {
                Some(prev) if prev != b => return Err(c),
                _ => {}
            }
        }
        Ok(CohenPiece { bits })
    }
}

impl Serialize for CohenPiece {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<(Coord, u8)> =
            self.bits().map(|(c, b)| (c, u8::from(b))).collect();
        entries.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CohenPiece {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let entries = Vec::<(Coord, u8)>::deserialize(deserializer)?;
        let mut bits = BTreeMap::new();
        for (c, raw) in entries {
            let b = match raw {
                0 => false,
                1 => true,
                other => {
                    return Err(serde::de::Error::custom(format!(
                        "bit at {c} must be 0 or 1, got {other}"
                    )))
                }
            };
            if bits.insert(c, b).is_some() {
                return Err(serde::de::Error::custom(format!(
                    "coordinate {c} listed twice in one piece"
                )));
            }
        }
        Ok(CohenPiece { bits })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error("MissingPiece: tree node {0} has no piece")]
    MissingPiece(NodeId),
    #[error("ExtraPiece: {0} has a piece but is not in the tree")]
    ExtraPiece(NodeId),
    #[error("WrongInterval: piece at {node} uses coordinate {coord}, outside interval {expected}")]
    WrongInterval {
        node: NodeId,
        coord: Coord,
        expected: u32,
    },
    #[error("NonemptyAtLimit: {0} sits on a limit level but its piece is nonempty")]
    NonemptyAtLimit(NodeId),
}

/// How two conditions fail to have a common extension.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Incompatibility {
    #[error("TreeClash: {0}")]
    TreeClash(MergeClash),
    #[error("BitClash: shared node {node} decides {coord} both ways")]
    BitClash { node: NodeId, coord: Coord },
}

/// A forcing condition: a level tree together with one Cohen piece per
/// node. Pieces at level-0 nodes use interval 0, pieces at successor-level
/// nodes use their own interval, and pieces at limit-level nodes are empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Condition {
    tree: LevelTree,
    pieces: BTreeMap<NodeId, CohenPiece>,
}

/// Checks the node/piece correspondence and the per-level interval rules.
pub fn validate_condition(
    spec: &LadderSpec,
    tree: LevelTree,
    pieces: BTreeMap<NodeId, CohenPiece>,
) -> Result<Condition, Vec<ConditionError>> {
    let mut errors = Vec::new();
    for n in tree.nodes() {
        if !pieces.contains_key(&n) {
            errors.push(ConditionError::MissingPiece(n));
        }
    }
    for (&n, piece) in &pieces {
        if !tree.contains(n) {
            errors.push(ConditionError::ExtraPiece(n));
            continue;
        }
        match spec.kind(n.level) {
            Some(LevelKind::Limit) => {
                if !piece.is_empty() {
                    errors.push(ConditionError::NonemptyAtLimit(n));
                }
            }
            // First lives at position 0, so both cases demand the node's
            // own position as the interval.
            Some(LevelKind::First) | Some(LevelKind::Successor) => {
                for (c, _) in piece.bits() {
                    if c.interval != n.level {
                        errors.push(ConditionError::WrongInterval {
                            node: n,
                            coord: c,
                            expected: n.level,
                        });
                    }
                }
            }
            None => {
                // level outside the ladder: tree validation reports this;
                // nothing sensible to check here
            }
        }
    }
    if errors.is_empty() {
        Ok(Condition { tree, pieces })
    } else {
        Err(errors)
    }
}

impl Condition {
    /// The weakest condition: empty tree, no pieces.
    pub fn empty() -> Self {
        Condition::default()
    }

    /// Assembles a condition from parts the caller has already kept
    /// consistent. Operations that transport validated conditions use this.
    pub(crate) fn from_parts(tree: LevelTree, pieces: BTreeMap<NodeId, CohenPiece>) -> Self {
        Condition { tree, pieces }
    }

    pub fn tree(&self) -> &LevelTree {
        &self.tree
    }

    pub fn piece(&self, n: NodeId) -> Option<&CohenPiece> {
        self.pieces.get(&n)
    }

    pub fn pieces(&self) -> impl Iterator<Item = (NodeId, &CohenPiece)> + '_ {
        self.pieces.iter().map(|(n, p)| (*n, p))
    }

    /// The extension order: `self <= other` iff `self` carries all of
    /// `other`'s tree (nodes and parent chains) and extends every piece.
    pub fn leq(&self, other: &Condition) -> bool {
        self.tree.contains_subtree(&other.tree)
            && other.pieces.iter().all(|(n, q_piece)| {
                self.piece(*n)
                    .is_some_and(|p_piece| p_piece.contains_piece(q_piece))
            })
    }

    /// Restriction to a subtree of this condition's tree.
    pub fn restrict(&self, tbar: &LevelTree) -> Result<Condition, TreeError> {
        if !self.tree.contains_subtree(tbar) {
            // name the first offending node for the diagnostic
            let witness = tbar
                .nodes()
                .find(|n| self.tree.parent(*n) != tbar.parent(*n) || !self.tree.contains(*n))
                .unwrap_or(NodeId::new(0, 0, 0));
            return Err(TreeError::NodeNotInTree(witness));
        }
        let pieces = tbar
            .nodes()
            .map(|n| (n, self.pieces[&n].clone()))
            .collect();
        Ok(Condition {
            tree: tbar.clone(),
            pieces,
        })
    }

    /// The weakest common extension: merged tree, coordinate-wise union of
    /// pieces. Any condition extending both `self` and `other` extends the
    /// result.
    pub fn common_extension(&self, other: &Condition) -> Result<Condition, Incompatibility> {
        let tree = self
            .tree
            .merge(&other.tree)
            .map_err(Incompatibility::TreeClash)?;
        let mut pieces = self.pieces.clone();
        for (n, q_piece) in other.pieces() {
            match pieces.get_mut(&n) {
                None => {
                    pieces.insert(n, q_piece.clone());
                }
                Some(p_piece) => {
                    *p_piece = p_piece
                        .union(q_piece)
                        .map_err(|coord| Incompatibility::BitClash { node: n, coord })?;
                }
            }
        }
        Ok(Condition { tree, pieces })
    }

    pub fn compatible(&self, other: &Condition) -> bool {
        self.common_extension(other).is_ok()
    }
}

/// Wire form of a condition: the tree as a relation plus a piece list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawCondition {
    pub tree: crate::tree::TreeRelation,
    pub pieces: Vec<RawPieceEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPieceEntry {
    pub node: NodeId,
    pub bits: CohenPiece,
}

impl RawCondition {
    /// Validates the tree and the pieces against a spec.
    pub fn validate(&self, spec: &LadderSpec) -> Result<Condition, CondParseError> {
        let tree =
            crate::tree::validate_relation(spec, &self.tree).map_err(CondParseError::Tree)?;
        let mut pieces = BTreeMap::new();
        for entry in &self.pieces {
            if pieces.insert(entry.node, entry.bits.clone()).is_some() {
                return Err(CondParseError::DuplicateNode(entry.node));
            }
        }
        validate_condition(spec, tree, pieces).map_err(CondParseError::Pieces)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CondParseError {
    #[error("{}", display_errors(.0))]
    Tree(Vec<TreeError>),
    #[error("{}", display_errors(.0))]
    Pieces(Vec<ConditionError>),
    #[error("DuplicatePieceEntry: node {0} listed twice")]
    DuplicateNode(NodeId),
}

fn display_errors<E: fmt::Display>(errors: &[E]) -> String {
    errors
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

impl Serialize for Condition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw = RawCondition {
            tree: self.tree.to_relation(),
            pieces: self
                .pieces()
                .map(|(node, bits)| RawPieceEntry {
                    node,
                    bits: bits.clone(),
                })
                .collect(),
        };
        raw.serialize(serializer)
    }
}
