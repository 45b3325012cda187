//! Level-preserving node permutations with finite support, and their
//! canonical action on trees and conditions as poset automorphisms.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ladder::{LadderSpec, NodeId};
use crate::poset::Condition;
use crate::tree::LevelTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermError {
    #[error("LevelChanged: {0} maps to {1} on a different level")]
    LevelChanged(NodeId, NodeId),
    #[error("NotInjective: {0} and {1} share the image {2}")]
    NotInjective(NodeId, NodeId, NodeId),
    #[error("SupportNotClosed: image {0} is not itself moved")]
    SupportNotClosed(NodeId),
    #[error("ImageOutsideA: {0} is not in the node space of the spec")]
    ImageOutsideA(NodeId),
}

/// A bijection of the node space that fixes every node outside a finite
/// support and never changes a node's level. Stored as the finite map of
/// actual moves; identity elsewhere.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "RawPerm")]
#[serde(try_from = "RawPerm")]
pub struct NodePerm {
    moves: BTreeMap<NodeId, NodeId>,
}

/// Wire form: `{"moves": [[source, image], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPerm {
    pub moves: Vec<(NodeId, NodeId)>,
}

impl From<NodePerm> for RawPerm {
    fn from(p: NodePerm) -> Self {
        RawPerm {
            moves: p.moves.into_iter().collect(),
        }
    }
}

impl TryFrom<RawPerm> for NodePerm {
    type Error = String;

    // Structural checks only; membership in a spec's node space is checked
    // by `validate_perm`, which needs the spec.
    fn try_from(raw: RawPerm) -> Result<Self, String> {
        let mut moves = BTreeMap::new();
        for (src, img) in raw.moves {
            if moves.insert(src, img).is_some() {
                return Err(format!("source {src} listed twice"));
            }
        }
        let perm = NodePerm { moves };
        let errs = perm.structural_errors();
        if errs.is_empty() {
            Ok(perm)
        } else {
            Err(errs
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; "))
        }
    }
}

impl NodePerm {
    pub fn identity() -> Self {
        NodePerm::default()
    }

    pub fn is_identity(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn moves(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.moves.iter().map(|(s, i)| (*s, *i))
    }

    pub fn support(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.moves.keys().copied()
    }

    /// The transposition swapping two nodes on the same level.
    pub fn transposition(a: NodeId, b: NodeId) -> Self {
        assert_eq!(a.level, b.level, "transposition must preserve levels");
        if a == b {
            return NodePerm::identity();
        }
        let mut moves = BTreeMap::new();
        moves.insert(a, b);
        moves.insert(b, a);
        NodePerm { moves }
    }

    fn structural_errors(&self) -> Vec<PermError> {
        let mut errors = Vec::new();
        let mut seen_images: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for (&src, &img) in &self.moves {
            if src.level != img.level {
                errors.push(PermError::LevelChanged(src, img));
            }
            if let Some(&other) = seen_images.get(&img) {
                errors.push(PermError::NotInjective(other, src, img));
            } else {
                seen_images.insert(img, src);
            }
        }
        for &img in seen_images.keys() {
            if !self.moves.contains_key(&img) {
                errors.push(PermError::SupportNotClosed(img));
            }
        }
        errors
    }

    pub fn apply_node(&self, n: NodeId) -> NodeId {
        self.moves.get(&n).copied().unwrap_or(n)
    }

    /// Relabels a tree's nodes and parent entries. Level preservation and
    /// injectivity make the image a valid tree.
    pub fn apply_tree(&self, t: &LevelTree) -> LevelTree {
        let nodes: BTreeSet<NodeId> = t.nodes().map(|n| self.apply_node(n)).collect();
        let parent: BTreeMap<NodeId, NodeId> = t
            .nodes()
            .filter_map(|n| {
                t.parent(n)
                    .map(|p| (self.apply_node(n), self.apply_node(p)))
            })
            .collect();
        LevelTree::from_parts(nodes, parent)
    }

    /// Relabels a condition's tree and transports each piece unchanged to
    /// the image node; interval constraints depend only on the level, which
    /// is preserved.
    pub fn apply_condition(&self, p: &Condition) -> Condition {
        let tree = self.apply_tree(p.tree());
        let pieces = p
            .pieces()
            .map(|(n, piece)| (self.apply_node(n), piece.clone()))
            .collect();
        Condition::from_parts(tree, pieces)
    }

    /// `self` after `rho`: `(self.compose(rho)).apply_node(n) =
    /// self.apply_node(rho.apply_node(n))`.
    pub fn compose(&self, rho: &NodePerm) -> NodePerm {
        let mut moves = BTreeMap::new();
        let keys: BTreeSet<NodeId> = self.support().chain(rho.support()).collect();
        for n in keys {
            let img = self.apply_node(rho.apply_node(n));
            if img != n {
                moves.insert(n, img);
            }
        }
        NodePerm { moves }
    }

    pub fn invert(&self) -> NodePerm {
        NodePerm {
            moves: self.moves.iter().map(|(s, i)| (*i, *s)).collect(),
        }
    }

    /// True iff every move stays inside its omega-block.
    pub fn is_small(&self) -> bool {
        self.moves()
            .all(|(src, img)| src.idx.block == img.idx.block)
    }
}

/// Full validation of a move map against a spec: level preservation,
/// injectivity, support closure, and membership of every image in the
/// spec's node space.
pub fn validate_perm(
    spec: &LadderSpec,
    moves: BTreeMap<NodeId, NodeId>,
) -> Result<NodePerm, Vec<PermError>> {
    let perm = NodePerm { moves };
    let mut errors = perm.structural_errors();
    for (_, img) in perm.moves() {
        if !spec.contains(img) {
            errors.push(PermError::ImageOutsideA(img));
        }
    }
    if errors.is_empty() {
        Ok(perm)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::poset::{validate_condition, CohenPiece, Coord};
    use crate::tree::{validate_relation, TreeRelation};

    fn node(level: u32, block: u32, offset: u32) -> NodeId {
        NodeId::new(level, block, offset)
    }

    fn perm_of(spec: &LadderSpec, moves: Vec<(NodeId, NodeId)>) -> NodePerm {
        validate_perm(spec, moves.into_iter().collect()).unwrap()
    }

    fn chain_condition(spec: &LadderSpec, base_offset: u32) -> Condition {
        let a = node(0, 0, base_offset);
        let b = node(1, 0, 3);
        let tree = validate_relation(
            spec,
            &TreeRelation {
                nodes: vec![],
                pairs: vec![(a, b)],
            },
        )
        .unwrap();
        let mut pieces = BTreeMap::new();
        pieces.insert(a, CohenPiece::from_bits([(Coord::new(0, 1), true)]));
        pieces.insert(b, CohenPiece::empty());
        validate_condition(spec, tree, pieces).unwrap()
    }

    #[test]
    fn empty_moves_is_identity() {
        let spec = fixtures::three_level();
        let id = perm_of(&spec, vec![]);
        assert!(id.is_identity());
        assert_eq!(id.apply_node(node(1, 0, 0)), node(1, 0, 0));
    }

    #[test]
    fn swap_is_valid_and_small_within_block() {
        let spec = fixtures::three_level();
        let pi = perm_of(
            &spec,
            vec![
                (node(1, 0, 0), node(1, 0, 1)),
                (node(1, 0, 1), node(1, 0, 0)),
            ],
        );
        assert!(pi.is_small());

        let wide = perm_of(
            &spec,
            vec![
                (node(1, 0, 0), node(1, 0, 7)),
                (node(1, 0, 7), node(1, 0, 0)),
            ],
        );
        assert!(wide.is_small());

        let cross = perm_of(
            &spec,
            vec![
                (node(1, 0, 0), node(1, 1, 0)),
                (node(1, 1, 0), node(1, 0, 0)),
            ],
        );
        assert!(!cross.is_small());
    }

    #[test]
    fn level_change_rejected() {
        let spec = fixtures::three_level();
        let errs = validate_perm(
            &spec,
            [
                (node(1, 0, 0), node(2, 0, 0)),
                (node(2, 0, 0), node(1, 0, 0)),
            ]
            .into_iter()
            .collect(),
        )
        .unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, PermError::LevelChanged(_, _))));
    }

    #[test]
    fn open_support_rejected() {
        let spec = fixtures::three_level();
        let errs = validate_perm(
            &spec,
            [(node(1, 0, 0), node(1, 0, 1))].into_iter().collect(),
        )
        .unwrap_err();
        assert_eq!(errs, vec![PermError::SupportNotClosed(node(1, 0, 1))]);
    }

    #[test]
    fn image_outside_space_rejected() {
        let spec = fixtures::three_level();
        let errs = validate_perm(
            &spec,
            [
                (node(1, 0, 0), node(1, 5, 0)),
                (node(1, 5, 0), node(1, 0, 0)),
            ]
            .into_iter()
            .collect(),
        )
        .unwrap_err();
        assert!(errs.contains(&PermError::ImageOutsideA(node(1, 5, 0))));
    }

    #[test]
    fn identity_fixes_conditions() {
        let spec = fixtures::three_level();
        let p = chain_condition(&spec, 0);
        assert_eq!(NodePerm::identity().apply_condition(&p), p);
    }

    #[test]
    fn swap_relabels_base_and_transports_pieces() {
        let spec = fixtures::three_level();
        let p = chain_condition(&spec, 0);
        let pi = NodePerm::transposition(node(0, 0, 0), node(0, 0, 1));
        let q = pi.apply_condition(&p);
        assert!(q.tree().contains(node(0, 0, 1)));
        assert!(!q.tree().contains(node(0, 0, 0)));
        assert_eq!(q.tree().parent(node(1, 0, 3)), Some(node(0, 0, 1)));
        assert_eq!(q.piece(node(0, 0, 1)), p.piece(node(0, 0, 0)));
        // round trip through the inverse
        assert_eq!(pi.invert().apply_condition(&q), p);
    }

    #[test]
    fn compose_and_invert_laws() {
        let spec = fixtures::three_level();
        let pi = perm_of(
            &spec,
            vec![
                (node(1, 0, 0), node(1, 0, 1)),
                (node(1, 0, 1), node(1, 0, 0)),
            ],
        );
        assert_eq!(pi.compose(&NodePerm::identity()), pi);
        assert!(pi.compose(&pi.invert()).is_identity());

        // swap a<->b composed with swap b<->c acts as the 3-cycle a->b->c->a
        // checked pointwise against sequential application
        let a = node(2, 0, 0);
        let b = node(2, 0, 1);
        let c = node(2, 0, 2);
        let ab = NodePerm::transposition(a, b);
        let bc = NodePerm::transposition(b, c);
        let cycle = ab.compose(&bc);
        for n in [a, b, c] {
            assert_eq!(cycle.apply_node(n), ab.apply_node(bc.apply_node(n)));
        }
        assert_eq!(cycle.apply_node(b), c);
        assert_eq!(cycle.apply_node(a), b);
        assert_eq!(cycle.apply_node(c), a);
    }

    #[test]
    fn apply_tree_preserves_maximal_count() {
        let spec = fixtures::three_level();
        let p = chain_condition(&spec, 0);
        let pi = NodePerm::transposition(node(1, 0, 3), node(1, 1, 5));
        let image = pi.apply_tree(p.tree());
        assert_eq!(
            image.maximal_nodes().len(),
            p.tree().maximal_nodes().len()
        );
    }

    #[test]
    fn perm_json_round_trip() {
        let spec = fixtures::three_level();
        let pi = perm_of(
            &spec,
            vec![
                (node(1, 0, 0), node(1, 0, 1)),
                (node(1, 0, 1), node(1, 0, 0)),
            ],
        );
        let json = serde_json::to_string(&pi).unwrap();
        assert_eq!(json, r#"{"moves":[[[1,0,0],[1,0,1]],[[1,0,1],[1,0,0]]]}"#);
        let back: NodePerm = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pi);

        // open support rejected at parse time
        let bad = r#"{"moves":[[[1,0,0],[1,0,1]]]}"#;
        assert!(serde_json::from_str::<NodePerm>(bad).is_err());
    }
}
