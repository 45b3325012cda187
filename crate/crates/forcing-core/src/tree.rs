//! Level trees: finite trees of nodes graded by ladder level.
//!
//! A raw relation is validated against five axioms — membership in the node
//! space, strictness, transitivity, level monotonicity, and a unique
//! predecessor at every lower level — and canonicalized into a parent map.
//! The full strict order is derived back from parent chains; for a validated
//! tree the derived relation reproduces the input relation exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ladder::{LadderSpec, NodeId};

/// A raw binary relation on nodes: the unvalidated wire form of a tree.
/// `pairs` lists `(a, b)` for `a < b` in the tree order; `nodes` may add
/// isolated nodes not mentioned by any pair. Duplicates are tolerated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRelation {
    pub nodes: Vec<NodeId>,
    pub pairs: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("NodeOutsideA: {0} is not in the node space of the spec")]
    NodeOutsideA(NodeId),
    #[error("NotStrict: {0} is related to itself")]
    NotStrict(NodeId),
    #[error("NotTransitive: {a} < {b} < {c} but the pair ({a}, {c}) is missing")]
    NotTransitive { a: NodeId, b: NodeId, c: NodeId },
    #[error("LevelNotIncreasing: {0} < {1} does not climb the ladder")]
    LevelNotIncreasing(NodeId, NodeId),
    #[error("MissingPredecessor: {node} has no predecessor at level {level}")]
    MissingPredecessor { node: NodeId, level: u32 },
    #[error("AmbiguousPredecessor: {node} has predecessors {first} and {second} at level {level}")]
    AmbiguousPredecessor {
        node: NodeId,
        level: u32,
        first: NodeId,
        second: NodeId,
    },
    #[error("NodeNotInTree: {0}")]
    NodeNotInTree(NodeId),
}

/// A merge clash: a node shared by two trees with different parents.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("Incompatible: {node} has parent {} in one tree and {} in the other",
    display_parent(.parent_in_left), display_parent(.parent_in_right))]
pub struct MergeClash {
    pub node: NodeId,
    pub parent_in_left: Option<NodeId>,
    pub parent_in_right: Option<NodeId>,
}

fn display_parent(p: &Option<NodeId>) -> String {
    match p {
        Some(n) => n.to_string(),
        None => "none".to_string(),
    }
}

/// A validated level tree in canonical form: the node set plus, for every
/// node above level 0, its immediate parent one level down. The full strict
/// order is the transitive closure of the parent edges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LevelTree {
    nodes: BTreeSet<NodeId>,
    parent: BTreeMap<NodeId, NodeId>,
}

/// Validates a raw relation against the five tree axioms over the spec's
/// node space and returns the canonical tree, or every violation found.
/// The field of the relation is `raw.nodes` plus every node mentioned in
/// `raw.pairs`; finite generation by the maximal elements is automatic.
pub fn validate_relation(
    spec: &LadderSpec,
    raw: &TreeRelation,
) -> Result<LevelTree, Vec<TreeError>> {
    let mut field: Vec<NodeId> = raw.nodes.clone();
    for &(a, b) in &raw.pairs {
        field.push(a);
        field.push(b);
    }
    field.sort_unstable();
    field.dedup();

    let mut pairs: Vec<(NodeId, NodeId)> = raw.pairs.clone();
    pairs.sort_unstable();
    pairs.dedup();

    // Staged: membership, strictness, and level monotonicity first; the
    // order-shape axioms only make sense once those hold, and garbage input
    // gets concise fundamental diagnostics instead of a cascade.
    let mut errors = Vec::new();

    for &n in &field {
        if !spec.contains(n) {
            errors.push(TreeError::NodeOutsideA(n));
        }
    }

    for &(a, b) in &pairs {
        if a == b {
            errors.push(TreeError::NotStrict(a));
        } else if a.level >= b.level {
            errors.push(TreeError::LevelNotIncreasing(a, b));
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    for &(a, b) in &pairs {
        for &(b2, c) in &pairs {
            if b2 == b && pairs.binary_search(&(a, c)).is_err() {
                errors.push(TreeError::NotTransitive { a, b, c });
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    // One predecessor per lower level, for every node.
    let mut parent = BTreeMap::new();
    for &n in &field {
        for lvl in 0..n.level {
            let mut found: Option<NodeId> = None;
            let mut ambiguous = false;
            for &(a, b) in &pairs {
                if b == n && a.level == lvl {
                    match found {
                        None => found = Some(a),
                        Some(first) => {
                            if !ambiguous {
                                errors.push(TreeError::AmbiguousPredecessor {
                                    node: n,
                                    level: lvl,
                                    first,
                                    second: a,
                                });
                                ambiguous = true;
                            }
                        }
                    }
                }
            }
            match found {
                None => errors.push(TreeError::MissingPredecessor { node: n, level: lvl }),
                Some(p) => {
                    if lvl + 1 == n.level && !ambiguous {
                        parent.insert(n, p);
                    }
                }
            }
        }
    }

    if errors.is_empty() {
        Ok(LevelTree {
            nodes: field.into_iter().collect(),
            parent,
        })
    } else {
        Err(errors)
    }
}

impl LevelTree {
    pub fn empty() -> Self {
        LevelTree::default()
    }

    /// Builds a tree from parts already known to satisfy the invariants.
    /// Used by the permutation action and by generators, which preserve
    /// validity by construction.
    pub(crate) fn from_parts(nodes: BTreeSet<NodeId>, parent: BTreeMap<NodeId, NodeId>) -> Self {
        let tree = LevelTree { nodes, parent };
        debug_assert!(tree.invariants_hold());
        tree
    }

    fn invariants_hold(&self) -> bool {
        self.parent.iter().all(|(n, p)| {
            self.nodes.contains(n)
                && self.nodes.contains(p)
                && n.level > 0
                && p.level + 1 == n.level
        }) && self
            .nodes
            .iter()
            .all(|n| n.level == 0 || self.parent.contains_key(n))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn node_set(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains(&n)
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.parent.get(&n).copied()
    }

    /// The branch through `n`: its ancestors from the root up, ending with
    /// `n` itself. One node per level `0..=n.level`.
    pub fn branch(&self, n: NodeId) -> Result<Vec<NodeId>, TreeError> {
        if !self.contains(n) {
            return Err(TreeError::NodeNotInTree(n));
        }
        let mut chain = vec![n];
        let mut cur = n;
        while let Some(p) = self.parent(cur) {
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        Ok(chain)
    }

    /// Tree order: `a <= b` iff `a = b` or `a` lies on `b`'s parent chain.
    pub fn leq_t(&self, a: NodeId, b: NodeId) -> Result<bool, TreeError> {
        if !self.contains(a) {
            return Err(TreeError::NodeNotInTree(a));
        }
        if !self.contains(b) {
            return Err(TreeError::NodeNotInTree(b));
        }
        if a == b {
            return Ok(true);
        }
        let mut cur = b;
        while let Some(p) = self.parent(cur) {
            if p == a {
                return Ok(true);
            }
            cur = p;
        }
        Ok(false)
    }

    /// The nodes that are on nobody else's parent chain. The tree is the
    /// downward closure of this set.
    pub fn maximal_nodes(&self) -> BTreeSet<NodeId> {
        let parents: BTreeSet<NodeId> = self.parent.values().copied().collect();
        self.nodes.difference(&parents).copied().collect()
    }

    /// The downward closure of `picks` under parent chains.
    pub fn generated_subtree(
        &self,
        picks: impl IntoIterator<Item = NodeId>,
    ) -> Result<LevelTree, TreeError> {
        let mut nodes = BTreeSet::new();
        for pick in picks {
            for n in self.branch(pick)? {
                nodes.insert(n);
            }
        }
        let parent = self
            .parent
            .iter()
            .filter(|(n, _)| nodes.contains(n))
            .map(|(n, p)| (*n, *p))
            .collect();
        Ok(LevelTree { nodes, parent })
    }

    /// True iff `sub`'s nodes and parent chains are contained in this tree.
    pub fn contains_subtree(&self, sub: &LevelTree) -> bool {
        sub.nodes.iter().all(|n| self.contains(*n))
            && sub.parent.iter().all(|(n, p)| self.parent(*n) == Some(*p))
    }

    /// The union of two trees, when every shared node has the same parent
    /// in both; the result is the smallest tree containing both.
    pub fn merge(&self, other: &LevelTree) -> Result<LevelTree, MergeClash> {
        for n in self.nodes.intersection(&other.nodes) {
            let pl = self.parent(*n);
            let pr = other.parent(*n);
            if pl != pr {
                return Err(MergeClash {
                    node: *n,
                    parent_in_left: pl,
                    parent_in_right: pr,
                });
            }
        }
        let mut nodes = self.nodes.clone();
        nodes.extend(other.nodes.iter().copied());
        let mut parent = self.parent.clone();
        parent.extend(other.parent.iter().map(|(n, p)| (*n, *p)));
        Ok(LevelTree { nodes, parent })
    }

    /// Expands the canonical form back into the full strict relation.
    pub fn to_relation(&self) -> TreeRelation {
        let mut pairs = Vec::new();
        for &n in &self.nodes {
            let mut cur = n;
            while let Some(p) = self.parent(cur) {
                pairs.push((p, n));
                cur = p;
            }
        }
        pairs.sort_unstable();
        TreeRelation {
            nodes: self.nodes.iter().copied().collect(),
            pairs,
        }
    }

    /// DOT rendering: one graph, edges child -> parent.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph level_tree {\n");
        for &n in &self.nodes {
            writeln!(out, "  \"{}\";", n).unwrap();
        }
        for (n, p) in &self.parent {
            writeln!(out, "  \"{}\" -> \"{}\";", n, p).unwrap();
        }
        out.push_str("}\n");
        out
    }
}

impl Serialize for LevelTree {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_relation().serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn node(level: u32, block: u32, offset: u32) -> NodeId {
        NodeId::new(level, block, offset)
    }

    /// The chain (l0,1.2) < (l1,0.3) < (l2,0.0) with its transitive pair.
    fn chain_relation() -> TreeRelation {
        let a = node(0, 1, 2);
        let b = node(1, 0, 3);
        let c = node(2, 0, 0);
        TreeRelation {
            nodes: vec![a, b, c],
            pairs: vec![(a, b), (b, c), (a, c)],
        }
    }

    fn chain_tree() -> LevelTree {
        validate_relation(&fixtures::three_level(), &chain_relation()).unwrap()
    }

    #[test]
    fn empty_relation_is_empty_tree() {
        let t = validate_relation(&fixtures::three_level(), &TreeRelation::default()).unwrap();
        assert!(t.is_empty());
        assert!(t.maximal_nodes().is_empty());
    }

    #[test]
    fn chain_validates_with_expected_maximal_node() {
        let t = chain_tree();
        assert_eq!(t.len(), 3);
        assert_eq!(
            t.maximal_nodes().into_iter().collect::<Vec<_>>(),
            vec![node(2, 0, 0)]
        );
        assert_eq!(t.parent(node(2, 0, 0)), Some(node(1, 0, 3)));
        assert_eq!(t.parent(node(1, 0, 3)), Some(node(0, 1, 2)));
    }

    #[test]
    fn same_level_edge_rejected() {
        let raw = TreeRelation {
            nodes: vec![],
            pairs: vec![(node(1, 0, 0), node(1, 0, 1))],
        };
        let errs = validate_relation(&fixtures::three_level(), &raw).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, TreeError::LevelNotIncreasing(_, _))));
    }

    #[test]
    fn missing_predecessor_rejected() {
        // (l2,0.0) has an l1 predecessor but no l0 predecessor.
        let raw = TreeRelation {
            nodes: vec![],
            pairs: vec![(node(1, 0, 0), node(2, 0, 0))],
        };
        let errs = validate_relation(&fixtures::three_level(), &raw).unwrap_err();
        assert!(errs.contains(&TreeError::MissingPredecessor {
            node: node(2, 0, 0),
            level: 0
        }));
        // the l1 node also misses its own l0 predecessor
        assert!(errs.contains(&TreeError::MissingPredecessor {
            node: node(1, 0, 0),
            level: 0
        }));
    }

    #[test]
    fn self_pair_is_not_strict() {
        let raw = TreeRelation {
            nodes: vec![],
            pairs: vec![(node(0, 0, 0), node(0, 0, 0))],
        };
        let errs = validate_relation(&fixtures::three_level(), &raw).unwrap_err();
        assert_eq!(errs, vec![TreeError::NotStrict(node(0, 0, 0))]);
    }

    #[test]
    fn missing_transitive_pair_rejected() {
        let mut raw = chain_relation();
        raw.pairs.retain(|&(a, b)| !(a == node(0, 1, 2) && b == node(2, 0, 0)));
        let errs = validate_relation(&fixtures::three_level(), &raw).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, TreeError::NotTransitive { .. })));
    }

    #[test]
    fn node_outside_space_rejected() {
        let raw = TreeRelation {
            nodes: vec![node(0, 5, 0)],
            pairs: vec![],
        };
        let errs = validate_relation(&fixtures::three_level(), &raw).unwrap_err();
        assert_eq!(errs, vec![TreeError::NodeOutsideA(node(0, 5, 0))]);
    }

    #[test]
    fn round_trip_reproduces_relation() {
        let raw = chain_relation();
        let t = validate_relation(&fixtures::three_level(), &raw).unwrap();
        let back = t.to_relation();
        let mut nodes = raw.nodes.clone();
        nodes.sort_unstable();
        assert_eq!(back.nodes, nodes);
        let mut pairs = raw.pairs.clone();
        pairs.sort_unstable();
        assert_eq!(back.pairs, pairs);
    }

    #[test]
    fn leq_t_examples() {
        let t = chain_tree();
        assert!(t.leq_t(node(1, 0, 3), node(1, 0, 3)).unwrap());
        assert!(t.leq_t(node(0, 1, 2), node(2, 0, 0)).unwrap());
        assert!(!t.leq_t(node(2, 0, 0), node(0, 1, 2)).unwrap());
        assert_eq!(
            t.leq_t(node(0, 0, 0), node(2, 0, 0)),
            Err(TreeError::NodeNotInTree(node(0, 0, 0)))
        );
    }

    #[test]
    fn two_distinct_roots_are_incomparable() {
        let spec = fixtures::three_level();
        let raw = TreeRelation {
            nodes: vec![node(0, 0, 0), node(0, 0, 1)],
            pairs: vec![],
        };
        let t = validate_relation(&spec, &raw).unwrap();
        assert!(!t.leq_t(node(0, 0, 0), node(0, 0, 1)).unwrap());
        assert_eq!(t.maximal_nodes().len(), 2);
    }

    #[test]
    fn generated_subtree_examples() {
        let t = chain_tree();
        assert_eq!(t.generated_subtree(t.maximal_nodes()).unwrap(), t);
        let sub = t.generated_subtree([node(1, 0, 3)]).unwrap();
        assert_eq!(
            sub.nodes().collect::<Vec<_>>(),
            vec![node(0, 1, 2), node(1, 0, 3)]
        );
        assert!(t.generated_subtree([]).unwrap().is_empty());
        assert!(t.contains_subtree(&sub));
    }

    #[test]
    fn merge_is_idempotent_and_unions_chains() {
        let spec = fixtures::three_level();
        let t = chain_tree();
        assert_eq!(t.merge(&t).unwrap(), t);

        // two chains sharing only their level-0 node
        let shared = node(0, 0, 0);
        let left = validate_relation(
            &spec,
            &TreeRelation {
                nodes: vec![],
                pairs: vec![(shared, node(1, 0, 0))],
            },
        )
        .unwrap();
        let right = validate_relation(
            &spec,
            &TreeRelation {
                nodes: vec![],
                pairs: vec![(shared, node(1, 0, 1))],
            },
        )
        .unwrap();
        let merged = left.merge(&right).unwrap();
        assert_eq!(merged.len(), 3);
        assert_eq!(merged.maximal_nodes().len(), 2);
        assert_eq!(left.merge(&right), right.merge(&left));
    }

    #[test]
    fn merge_clash_on_distinct_parents() {
        let spec = fixtures::three_level();
        let child = node(1, 0, 0);
        let left = validate_relation(
            &spec,
            &TreeRelation {
                nodes: vec![],
                pairs: vec![(node(0, 0, 0), child)],
            },
        )
        .unwrap();
        let right = validate_relation(
            &spec,
            &TreeRelation {
                nodes: vec![],
                pairs: vec![(node(0, 0, 1), child)],
            },
        )
        .unwrap();
        let clash = left.merge(&right).unwrap_err();
        assert_eq!(clash.node, child);
        assert_eq!(clash.parent_in_left, Some(node(0, 0, 0)));
        assert_eq!(clash.parent_in_right, Some(node(0, 0, 1)));
    }

    #[test]
    fn branch_lengths_match_levels() {
        let t = chain_tree();
        for n in t.nodes() {
            assert_eq!(t.branch(n).unwrap().len() as u32, n.level + 1);
        }
    }

    #[test]
    fn dot_export_lists_edges_child_to_parent() {
        let dot = chain_tree().to_dot();
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("\"\u{2113}1 0.3\" -> \"\u{2113}0 1.2\";"));
        assert!(dot.contains("\"\u{2113}2 0.0\" -> \"\u{2113}1 0.3\";"));
    }

    #[test]
    fn relation_json_shape() {
        let json = serde_json::to_string(&chain_tree()).unwrap();
        assert_eq!(
            json,
            r#"{"nodes":[[0,1,2],[1,0,3],[2,0,0]],"pairs":[[[0,1,2],[1,0,3]],[[0,1,2],[2,0,0]],[[1,0,3],[2,0,0]]]}"#
        );
        let raw: TreeRelation = serde_json::from_str(&json).unwrap();
        assert_eq!(raw, chain_tree().to_relation());
    }
}
