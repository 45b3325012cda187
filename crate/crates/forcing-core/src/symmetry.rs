//! The block surjection at each level, its perturbation cloud, invariance
//! under small permutations, and the constructive homogenization that makes
//! two extensions of a common condition compatible by relabeling one of
//! them inside its omega-blocks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ladder::{LadderSpec, NodeId, OrdIndex};
use crate::perm::NodePerm;
use crate::poset::{Condition, Incompatibility};
use crate::tree::LevelTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymmetryError {
    #[error("BadDelta: {delta} is not an admissible bound at level {level}")]
    BadDelta { level: u32, delta: OrdIndex },
    #[error("IndexOutOfRange: {idx} is not below {delta}")]
    IndexOutOfRange { idx: OrdIndex, delta: OrdIndex },
    #[error("NotInjective: index {0} has two preimages")]
    NotInjective(OrdIndex),
    #[error("SupportNotClosed: image {0} is not itself moved")]
    SupportNotClosed(OrdIndex),
    #[error("MismatchedParameters: ({0}, {1}) vs ({2}, {3})")]
    MismatchedParameters(u32, OrdIndex, u32, OrdIndex),
}

/// True iff `delta` is a limit ordinal up to and including the level's
/// index bound.
pub fn delta_admissible(spec: &LadderSpec, level: u32, delta: OrdIndex) -> bool {
    match spec.block_count(level) {
        Some(b) => delta.offset == 0 && delta.block >= 1 && delta.block <= b,
        None => false,
    }
}

/// The block surjection: sends an index `mu < delta` to the largest element
/// of `{0} ∪ Lim` below it, i.e. to its block base.
pub fn surjection_value(
    spec: &LadderSpec,
    level: u32,
    delta: OrdIndex,
    mu: OrdIndex,
) -> Result<OrdIndex, SymmetryError> {
    if !delta_admissible(spec, level, delta) {
        return Err(SymmetryError::BadDelta { level, delta });
    }
    if mu >= delta {
        return Err(SymmetryError::IndexOutOfRange { idx: mu, delta });
    }
    Ok(mu.block_base())
}

/// A finite-support permutation of the indices below `delta` at one level:
/// the `sigma` of a cloud element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPerm {
    level: u32,
    delta: OrdIndex,
    moves: BTreeMap<OrdIndex, OrdIndex>,
}

impl IndexPerm {
    /// Structural validation: `delta` a limit, all moves below `delta`,
    /// injective, support closed. Admissibility of `delta` at the level is
    /// a spec question, checked by [`delta_admissible`] where needed.
    pub fn new(
        level: u32,
        delta: OrdIndex,
        moves: BTreeMap<OrdIndex, OrdIndex>,
    ) -> Result<Self, Vec<SymmetryError>> {
        let mut errors = Vec::new();
        if delta.offset != 0 || delta.block == 0 {
            errors.push(SymmetryError::BadDelta { level, delta });
        }
        let mut images: BTreeMap<OrdIndex, OrdIndex> = BTreeMap::new();
        for (&src, &img) in &moves {
            for idx in [src, img] {
                if idx >= delta {
                    errors.push(SymmetryError::IndexOutOfRange { idx, delta });
                }
            }
            if images.insert(img, src).is_some() {
                errors.push(SymmetryError::NotInjective(img));
            }
        }
        for &img in images.keys() {
            if !moves.contains_key(&img) {
                errors.push(SymmetryError::SupportNotClosed(img));
            }
        }
        if errors.is_empty() {
            Ok(IndexPerm {
                level,
                delta,
                moves,
            })
        } else {
            Err(errors)
        }
    }

    pub fn identity(level: u32, delta: OrdIndex) -> Self {
        IndexPerm {
            level,
            delta,
            moves: BTreeMap::new(),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn delta(&self) -> OrdIndex {
        self.delta
    }

    pub fn apply(&self, mu: OrdIndex) -> OrdIndex {
        self.moves.get(&mu).copied().unwrap_or(mu)
    }

    pub fn support(&self) -> impl Iterator<Item = OrdIndex> + '_ {
        self.moves.keys().copied()
    }
}

/// One element of the perturbation cloud around the block surjection: the
/// composite "surjection after `sigma`", identified by `sigma`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "RawCloudElement")]
#[serde(try_from = "RawCloudElement")]
pub struct CloudElement {
    sigma: IndexPerm,
}

/// Wire form: `{"level": 1, "delta": [2,0], "sigma": [[[0,0],[0,1]], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawCloudElement {
    pub level: u32,
    pub delta: OrdIndex,
    pub sigma: Vec<(OrdIndex, OrdIndex)>,
}

impl From<CloudElement> for RawCloudElement {
    fn from(c: CloudElement) -> Self {
        RawCloudElement {
            level: c.sigma.level,
            delta: c.sigma.delta,
            sigma: c.sigma.moves.into_iter().collect(),
        }
    }
}

impl TryFrom<RawCloudElement> for CloudElement {
    type Error = String;

    fn try_from(raw: RawCloudElement) -> Result<Self, String> {
        let mut moves = BTreeMap::new();
        for (src, img) in raw.sigma {
            if moves.insert(src, img).is_some() {
                return Err(format!("index {src} listed twice in sigma"));
            }
        }
        IndexPerm::new(raw.level, raw.delta, moves)
            .map(CloudElement::from_sigma)
            .map_err(|errs| {
                errs.iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join("; ")
            })
    }
}

impl CloudElement {
    pub fn from_sigma(sigma: IndexPerm) -> Self {
        CloudElement { sigma }
    }

    pub fn sigma(&self) -> &IndexPerm {
        &self.sigma
    }

    pub fn level(&self) -> u32 {
        self.sigma.level
    }

    pub fn delta(&self) -> OrdIndex {
        self.sigma.delta
    }

    /// The composite's value at `mu`: the block base of `sigma(mu)`.
    pub fn value(&self, mu: OrdIndex) -> OrdIndex {
        self.sigma.apply(mu).block_base()
    }
}

/// Whether two cloud elements denote the same function on indices below
/// their common `delta`. Off both supports the composites agree, so the
/// union of supports decides.
pub fn clouds_equal(a: &CloudElement, b: &CloudElement) -> Result<bool, SymmetryError> {
    if a.level() != b.level() || a.delta() != b.delta() {
        return Err(SymmetryError::MismatchedParameters(
            a.level(),
            a.delta(),
            b.level(),
            b.delta(),
        ));
    }
    Ok(a.sigma
        .support()
        .chain(b.sigma.support())
        .all(|mu| a.value(mu) == b.value(mu)))
}

/// Whether the block surjection with bound `delta` at `level` is unchanged
/// by relabeling Cohen indices along `pi`: every move at this level with
/// source below `delta` must stay below `delta` and keep its block base.
pub fn surjection_invariant_under(
    spec: &LadderSpec,
    pi: &NodePerm,
    level: u32,
    delta: OrdIndex,
) -> Result<bool, SymmetryError> {
    if !delta_admissible(spec, level, delta) {
        return Err(SymmetryError::BadDelta { level, delta });
    }
    Ok(pi.moves().all(|(src, img)| {
        if src.level != level || src.idx >= delta {
            return true;
        }
        img.idx < delta && img.idx.block_base() == src.idx.block_base()
    }))
}

/// Which hypothesis of [`homogenize`] failed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomogenizeError {
    #[error("PreconditionViolated: p does not extend r")]
    PNotBelowR,
    #[error("PreconditionViolated: q does not extend r")]
    QNotBelowR,
    #[error("PreconditionViolated: restrictions to r's tree clash: {0}")]
    RestrictionsIncompatible(Incompatibility),
}

/// Given extensions `p, q` of `r` whose restrictions to `r`'s tree are
/// compatible, produces a small permutation fixing `r`'s tree pointwise
/// such that `p` and the image of `q` are compatible.
///
/// Every node of `q`'s tree outside `r`'s tree is swapped, in canonical
/// node order, with the first node of the same level and block that occurs
/// in neither tree nor among the images already chosen. The image of `q`
/// then meets `p` exactly in `r`'s tree, where the hypothesis supplies
/// compatibility.
pub fn homogenize(
    spec: &LadderSpec,
    r: &Condition,
    p: &Condition,
    q: &Condition,
) -> Result<NodePerm, HomogenizeError> {
    let _ = spec;
    if !p.leq(r) {
        return Err(HomogenizeError::PNotBelowR);
    }
    if !q.leq(r) {
        return Err(HomogenizeError::QNotBelowR);
    }
    let p_restricted = p
        .restrict(r.tree())
        .expect("p extends r, so r's tree is a subtree of p's");
    let q_restricted = q
        .restrict(r.tree())
        .expect("q extends r, so r's tree is a subtree of q's");
    if let Err(clash) = p_restricted.common_extension(&q_restricted) {
        return Err(HomogenizeError::RestrictionsIncompatible(clash));
    }

    let occupied = |tree: &LevelTree, n: NodeId| tree.contains(n);
    let mut moves = BTreeMap::new();
    for src in q.tree().nodes() {
        if r.tree().contains(src) {
            continue;
        }
        let mut offset = 0;
        let img = loop {
            let candidate = NodeId::new(src.level, src.idx.block, offset);
            let taken = occupied(p.tree(), candidate)
                || occupied(q.tree(), candidate)
                || moves.contains_key(&candidate);
            if !taken {
                break candidate;
            }
            offset += 1;
        };
        moves.insert(src, img);
        moves.insert(img, src);
    }
    Ok(NodePerm::try_from(crate::perm::RawPerm {
        moves: moves.into_iter().collect(),
    })
    .expect("disjoint same-block transpositions form a valid permutation"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::poset::{validate_condition, CohenPiece, Coord};
    use crate::tree::{validate_relation, TreeRelation};
    use std::collections::BTreeMap;

    fn idx(block: u32, offset: u32) -> OrdIndex {
        OrdIndex::new(block, offset)
    }

    fn node(level: u32, block: u32, offset: u32) -> NodeId {
        NodeId::new(level, block, offset)
    }

    fn single_root_condition(spec: &LadderSpec, offset: u32, bit: bool) -> Condition {
        let n = node(0, 0, offset);
        let tree = validate_relation(
            spec,
            &TreeRelation {
                nodes: vec![n],
                pairs: vec![],
            },
        )
        .unwrap();
        let mut pieces = BTreeMap::new();
        pieces.insert(n, CohenPiece::from_bits([(Coord::new(0, 0), bit)]));
        validate_condition(spec, tree, pieces).unwrap()
    }

    fn sigma(level: u32, delta: OrdIndex, moves: Vec<(OrdIndex, OrdIndex)>) -> CloudElement {
        CloudElement::from_sigma(
            IndexPerm::new(level, delta, moves.into_iter().collect()).unwrap(),
        )
    }

    #[test]
    fn surjection_value_examples() {
        let spec = fixtures::three_level();
        let delta = idx(2, 0);
        assert_eq!(
            surjection_value(&spec, 2, delta, idx(0, 9)).unwrap(),
            idx(0, 0)
        );
        assert_eq!(
            surjection_value(&spec, 2, delta, idx(1, 0)).unwrap(),
            idx(1, 0)
        );
        assert_eq!(
            surjection_value(&spec, 2, delta, idx(2, 0)),
            Err(SymmetryError::IndexOutOfRange {
                idx: idx(2, 0),
                delta
            })
        );
        assert_eq!(
            surjection_value(&spec, 2, idx(4, 0), idx(0, 0)),
            Err(SymmetryError::BadDelta {
                level: 2,
                delta: idx(4, 0)
            })
        );
    }

    #[test]
    fn cloud_equality_examples() {
        let delta = idx(2, 0);
        let id = sigma(1, delta, vec![]);
        assert!(clouds_equal(&id, &id).unwrap());

        let within = sigma(1, delta, vec![(idx(0, 0), idx(0, 1)), (idx(0, 1), idx(0, 0))]);
        assert!(clouds_equal(&id, &within).unwrap());

        let across = sigma(1, delta, vec![(idx(0, 0), idx(1, 0)), (idx(1, 0), idx(0, 0))]);
        assert!(!clouds_equal(&id, &across).unwrap());

        let other_delta = sigma(1, idx(1, 0), vec![]);
        assert!(clouds_equal(&id, &other_delta).is_err());
    }

    #[test]
    fn invariance_examples() {
        let spec = fixtures::three_level();
        let delta = idx(2, 0);
        let id = NodePerm::identity();
        assert!(surjection_invariant_under(&spec, &id, 2, delta).unwrap());

        let small = NodePerm::transposition(node(2, 0, 0), node(2, 0, 5));
        assert!(small.is_small());
        assert!(surjection_invariant_under(&spec, &small, 2, delta).unwrap());

        let cross = NodePerm::transposition(node(2, 0, 0), node(2, 1, 0));
        assert!(!surjection_invariant_under(&spec, &cross, 2, delta).unwrap());

        // a cross-block move at another level does not disturb this level
        let elsewhere = NodePerm::transposition(node(1, 0, 0), node(1, 1, 0));
        assert!(surjection_invariant_under(&spec, &elsewhere, 2, delta).unwrap());

        // moves whose sources sit at or above delta are unconstrained, even
        // across blocks
        let above = NodePerm::transposition(node(2, 2, 0), node(2, 1, 1));
        assert!(surjection_invariant_under(&spec, &above, 2, OrdIndex::new(1, 0)).unwrap());
        // but the same move crosses below delta = (2,0), where it matters
        assert!(!surjection_invariant_under(&spec, &above, 2, delta).unwrap());
    }

    #[test]
    fn sigma_validation_rejects_out_of_range_moves() {
        let errs = IndexPerm::new(
            1,
            idx(1, 0),
            [(idx(1, 0), idx(0, 0)), (idx(0, 0), idx(1, 0))]
                .into_iter()
                .collect(),
        )
        .unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, SymmetryError::IndexOutOfRange { .. })));
    }

    #[test]
    fn homogenize_of_q_equal_r_is_identity() {
        let spec = fixtures::three_level();
        let r = single_root_condition(&spec, 0, true);
        let p = r.clone();
        let q = r.clone();
        let pi = homogenize(&spec, &r, &p, &q).unwrap();
        assert!(pi.is_identity());
        assert!(p.compatible(&pi.apply_condition(&q)));
    }

    #[test]
    fn homogenize_clashing_roots_swaps_to_fresh_offset() {
        let spec = fixtures::three_level();
        let r = Condition::empty();
        let p = single_root_condition(&spec, 0, true);
        let q = single_root_condition(&spec, 0, false);
        assert!(!p.compatible(&q));

        let pi = homogenize(&spec, &r, &p, &q).unwrap();
        assert_eq!(pi, NodePerm::transposition(node(0, 0, 0), node(0, 0, 1)));
        assert!(pi.is_small());
        let moved = pi.apply_condition(&q);
        assert!(p.compatible(&moved));
        assert!(moved.tree().contains(node(0, 0, 1)));
    }

    #[test]
    fn homogenize_rejects_clashing_restrictions() {
        let spec = fixtures::three_level();
        let r_tree = validate_relation(
            &spec,
            &TreeRelation {
                nodes: vec![node(0, 0, 0)],
                pairs: vec![],
            },
        )
        .unwrap();
        let mut r_pieces = BTreeMap::new();
        r_pieces.insert(node(0, 0, 0), CohenPiece::empty());
        let r = validate_condition(&spec, r_tree, r_pieces).unwrap();

        // p and q both extend r but decide the same coordinate differently
        let p = single_root_condition(&spec, 0, true);
        let q = single_root_condition(&spec, 0, false);
        assert!(p.leq(&r) && q.leq(&r));
        assert!(matches!(
            homogenize(&spec, &r, &p, &q),
            Err(HomogenizeError::RestrictionsIncompatible(_))
        ));
    }

    #[test]
    fn homogenize_rejects_non_extensions() {
        let spec = fixtures::three_level();
        let r = single_root_condition(&spec, 0, true);
        let other = single_root_condition(&spec, 1, true);
        assert_eq!(
            homogenize(&spec, &r, &other, &r),
            Err(HomogenizeError::PNotBelowR)
        );
        assert_eq!(
            homogenize(&spec, &r, &r, &other),
            Err(HomogenizeError::QNotBelowR)
        );
    }

    #[test]
    fn cloud_json_round_trip() {
        let delta = idx(2, 0);
        let c = sigma(1, delta, vec![(idx(0, 0), idx(0, 1)), (idx(0, 1), idx(0, 0))]);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"{"level":1,"delta":[2,0],"sigma":[[[0,0],[0,1]],[[0,1],[0,0]]]}"#
        );
        let back: CloudElement = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
