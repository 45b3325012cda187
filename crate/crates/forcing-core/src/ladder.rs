//! The cardinal ladder: a finite truncation of the class of infinite
//! cardinals, the per-level block counts bounding the ordinal index space,
//! and the node space built from both.
//!
//! An ordinal index `(block, offset)` stands for `omega * block + offset`;
//! blocks play the role of the intervals `[gamma, gamma + omega)` between
//! consecutive limit ordinals. A ladder level with block count `B` carries
//! the limit ordinal `omega * B` as its index bound.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Kind of a ladder level: the first level, a successor level, or a limit
/// level (whose conditions carry no Cohen data).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LevelKind {
    #[serde(rename = "first")]
    First,
    #[serde(rename = "succ")]
    Successor,
    #[serde(rename = "limit")]
    Limit,
}

impl fmt::Display for LevelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelKind::First => write!(f, "first"),
            LevelKind::Successor => write!(f, "succ"),
            LevelKind::Limit => write!(f, "limit"),
        }
    }
}

/// An ordinal below `omega * k` for some finite `k`, written `omega * block
/// + offset`. Ordering is lexicographic on `(block, offset)`, which is
/// exactly the ordinal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(u32, u32)", into = "(u32, u32)")]
pub struct OrdIndex {
    pub block: u32,
    pub offset: u32,
}

impl OrdIndex {
    pub const fn new(block: u32, offset: u32) -> Self {
        OrdIndex { block, offset }
    }

    /// The largest element of `{0} ∪ Lim` that is `<=` this index: the base
    /// `omega * block` of the block containing it.
    pub fn block_base(self) -> OrdIndex {
        OrdIndex::new(self.block, 0)
    }

    /// True iff the index is `0` or a limit ordinal, i.e. has offset `0`.
    pub fn is_block_base(self) -> bool {
        self.offset == 0
    }
}

impl From<(u32, u32)> for OrdIndex {
    fn from((block, offset): (u32, u32)) -> Self {
        OrdIndex { block, offset }
    }
}

impl From<OrdIndex> for (u32, u32) {
    fn from(idx: OrdIndex) -> Self {
        (idx.block, idx.offset)
    }
}

impl fmt::Display for OrdIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.block, self.offset)
    }
}

/// Total order on ordinal indices.
pub fn cmp_idx(a: OrdIndex, b: OrdIndex) -> Ordering {
    a.cmp(&b)
}

/// A node of the space `A`: a ladder level together with an ordinal index
/// below that level's bound. Ordering is lexicographic on
/// `(level, block, offset)`; this is the canonical node order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(u32, u32, u32)", into = "(u32, u32, u32)")]
pub struct NodeId {
    pub level: u32,
    pub idx: OrdIndex,
}

impl NodeId {
    pub const fn new(level: u32, block: u32, offset: u32) -> Self {
        NodeId {
            level,
            idx: OrdIndex::new(block, offset),
        }
    }
}

impl From<(u32, u32, u32)> for NodeId {
    fn from((level, block, offset): (u32, u32, u32)) -> Self {
        NodeId::new(level, block, offset)
    }
}

impl From<NodeId> for (u32, u32, u32) {
    fn from(n: NodeId) -> Self {
        (n.level, n.idx.block, n.idx.offset)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\u{2113}{} {}", self.level, self.idx)
    }
}

/// Violations reported by [`LadderSpec::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LadderError {
    #[error("EmptyLadder: a ladder needs at least one level")]
    EmptyLadder,
    #[error("FirstKindMisplaced: level {0} has kind {1}, but only level 0 may and must be first")]
    FirstKindMisplaced(u32, LevelKind),
    #[error("NonMonotoneBlocks: blocks[{level}] = {found} is below blocks[{}] = {prev}", level - 1)]
    NonMonotoneBlocks { level: u32, prev: u32, found: u32 },
    #[error("ZeroBlocks: blocks[{0}] must be at least 1")]
    ZeroBlocks(u32),
    #[error("BlocksLengthMismatch: {levels} levels but {blocks} block counts")]
    BlocksLengthMismatch { levels: usize, blocks: usize },
    #[error("BadLevel: level {0} is outside the ladder")]
    BadLevel(u32),
}

/// A validated ladder with one block count per level. The block count
/// `B(level)` bounds the index space at that level: the node space `A`
/// contains `(level, idx)` exactly when `idx.block < B(level)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "RawLadderSpec")]
pub struct LadderSpec {
    ladder: Vec<LevelKind>,
    blocks: Vec<u32>,
}

/// Wire form of a ladder spec, prior to validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawLadderSpec {
    pub ladder: Vec<LevelKind>,
    pub blocks: Vec<u32>,
}

impl From<LadderSpec> for RawLadderSpec {
    fn from(spec: LadderSpec) -> Self {
        RawLadderSpec {
            ladder: spec.ladder,
            blocks: spec.blocks,
        }
    }
}

impl TryFrom<RawLadderSpec> for LadderSpec {
    type Error = ValidationErrors;

    fn try_from(raw: RawLadderSpec) -> Result<Self, ValidationErrors> {
        LadderSpec::validate(raw.ladder, raw.blocks).map_err(ValidationErrors)
    }
}

impl<'de> Deserialize<'de> for LadderSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawLadderSpec::deserialize(deserializer)?;
        LadderSpec::try_from(raw).map_err(serde::de::Error::custom)
    }
}

/// A bundle of validation errors, displayed one per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<LadderError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

impl std::error::Error for ValidationErrors {}

impl LadderSpec {
    /// Checks every ladder invariant and returns the validated spec, or the
    /// full list of violations.
    pub fn validate(ladder: Vec<LevelKind>, blocks: Vec<u32>) -> Result<Self, Vec<LadderError>> {
        let mut errors = Vec::new();
        if ladder.is_empty() {
            errors.push(LadderError::EmptyLadder);
        }
        for (i, kind) in ladder.iter().enumerate() {
            let misplaced = if i == 0 {
                *kind != LevelKind::First
            } else {
                *kind == LevelKind::First
            };
            if misplaced {
                errors.push(LadderError::FirstKindMisplaced(i as u32, *kind));
            }
        }
        if ladder.len() != blocks.len() {
            errors.push(LadderError::BlocksLengthMismatch {
                levels: ladder.len(),
                blocks: blocks.len(),
            });
        }
        for (i, &b) in blocks.iter().enumerate() {
            if b == 0 {
                errors.push(LadderError::ZeroBlocks(i as u32));
            }
            if i > 0 && b < blocks[i - 1] {
                errors.push(LadderError::NonMonotoneBlocks {
                    level: i as u32,
                    prev: blocks[i - 1],
                    found: b,
                });
            }
        }
        if errors.is_empty() {
            Ok(LadderSpec { ladder, blocks })
        } else {
            Err(errors)
        }
    }

    pub fn level_count(&self) -> u32 {
        self.ladder.len() as u32
    }

    pub fn kind(&self, level: u32) -> Option<LevelKind> {
        self.ladder.get(level as usize).copied()
    }

    pub fn kinds(&self) -> &[LevelKind] {
        &self.ladder
    }

    /// Block count `B(level)`; the level's index bound is `omega * B(level)`.
    pub fn block_count(&self, level: u32) -> Option<u32> {
        self.blocks.get(level as usize).copied()
    }

    pub fn blocks(&self) -> &[u32] {
        &self.blocks
    }

    /// True iff the node lies in the space `A` of this spec.
    pub fn contains(&self, node: NodeId) -> bool {
        match self.block_count(node.level) {
            Some(b) => node.idx.block < b,
            None => false,
        }
    }

    /// The limit ordinals strictly below the level's index bound:
    /// `(1,0), ..., (B-1,0)`. These are the admissible `delta` parameters
    /// of the block surjection at this level, short of the bound itself.
    pub fn limits_below(&self, level: u32) -> Result<Vec<OrdIndex>, LadderError> {
        let b = self
            .block_count(level)
            .ok_or(LadderError::BadLevel(level))?;
        Ok((1..b).map(|d| OrdIndex::new(d, 0)).collect())
    }

    /// Limits below the bound plus the bound itself; every `delta` a block
    /// surjection accepts at this level.
    pub fn admissible_deltas(&self, level: u32) -> Result<Vec<OrdIndex>, LadderError> {
        let b = self
            .block_count(level)
            .ok_or(LadderError::BadLevel(level))?;
        Ok((1..=b).map(|d| OrdIndex::new(d, 0)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn idx(block: u32, offset: u32) -> OrdIndex {
        OrdIndex::new(block, offset)
    }

    #[test]
    fn minimal_spec_is_valid() {
        let spec = LadderSpec::validate(vec![LevelKind::First], vec![1]).unwrap();
        assert_eq!(spec.level_count(), 1);
        assert_eq!(spec.block_count(0), Some(1));
    }

    #[test]
    fn three_level_fixture_is_valid() {
        let spec = fixtures::three_level();
        assert_eq!(spec.kinds(), &[
            LevelKind::First,
            LevelKind::Successor,
            LevelKind::Successor
        ]);
        assert_eq!(spec.blocks(), &[2, 2, 3]);
    }

    #[test]
    fn non_monotone_blocks_rejected() {
        let err = LadderSpec::validate(
            vec![LevelKind::First, LevelKind::Successor, LevelKind::Successor],
            vec![3, 2, 2],
        )
        .unwrap_err();
        assert!(err
            .iter()
            .any(|e| matches!(e, LadderError::NonMonotoneBlocks { level: 1, .. })));
    }

    #[test]
    fn misplaced_first_reported_everywhere() {
        let err = LadderSpec::validate(
            vec![LevelKind::Successor, LevelKind::First],
            vec![1, 1],
        )
        .unwrap_err();
        assert_eq!(
            err,
            vec![
                LadderError::FirstKindMisplaced(0, LevelKind::Successor),
                LadderError::FirstKindMisplaced(1, LevelKind::First),
            ]
        );
    }

    #[test]
    fn empty_ladder_rejected() {
        let err = LadderSpec::validate(vec![], vec![]).unwrap_err();
        assert_eq!(err, vec![LadderError::EmptyLadder]);
    }

    #[test]
    fn cmp_idx_examples() {
        assert_eq!(cmp_idx(idx(0, 3), idx(1, 0)), Ordering::Less);
        assert_eq!(cmp_idx(idx(1, 2), idx(1, 2)), Ordering::Equal);
        assert_eq!(cmp_idx(idx(2, 0), idx(1, 99)), Ordering::Greater);
    }

    #[test]
    fn block_base_examples() {
        assert_eq!(idx(0, 5).block_base(), idx(0, 0));
        assert_eq!(idx(2, 0).block_base(), idx(2, 0));
        assert_eq!(idx(3, 7).block_base(), idx(3, 0));
    }

    #[test]
    fn limits_below_examples() {
        let spec3 = fixtures::three_level();
        assert_eq!(spec3.limits_below(2).unwrap(), vec![idx(1, 0), idx(2, 0)]);
        assert_eq!(spec3.limits_below(0).unwrap(), vec![idx(1, 0)]);

        let tiny = LadderSpec::validate(vec![LevelKind::First], vec![1]).unwrap();
        assert_eq!(tiny.limits_below(0).unwrap(), vec![]);
        assert_eq!(tiny.limits_below(1), Err(LadderError::BadLevel(1)));
    }

    #[test]
    fn admissible_deltas_include_the_bound() {
        let spec3 = fixtures::three_level();
        assert_eq!(
            spec3.admissible_deltas(2).unwrap(),
            vec![idx(1, 0), idx(2, 0), idx(3, 0)]
        );
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = fixtures::with_limit();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            json,
            r#"{"ladder":["first","succ","limit","succ"],"blocks":[2,2,2,3]}"#
        );
        let back: LadderSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn spec_json_rejects_invalid() {
        let err = serde_json::from_str::<LadderSpec>(
            r#"{"ladder":["first","succ"],"blocks":[3,2]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("NonMonotoneBlocks"));
    }

    // Independent statement of the ladder invariants, used to check
    // `validate` exhaustively on the small-window universe.
    fn invariants_hold(ladder: &[LevelKind], blocks: &[u32]) -> bool {
        !ladder.is_empty()
            && ladder[0] == LevelKind::First
            && ladder[1..].iter().all(|k| *k != LevelKind::First)
            && ladder.len() == blocks.len()
            && blocks.iter().all(|&b| b >= 1)
            && blocks.windows(2).all(|w| w[0] <= w[1])
    }

    #[test]
    fn validate_agrees_with_invariants_exhaustively() {
        let kinds = [LevelKind::First, LevelKind::Successor, LevelKind::Limit];
        let mut checked = 0u64;
        for len in 1..=4usize {
            let mut shape = vec![0usize; len];
            loop {
                let ladder: Vec<LevelKind> = shape.iter().map(|&i| kinds[i]).collect();
                let mut bshape = vec![0u32; len];
                loop {
                    let blocks: Vec<u32> = bshape.clone();
                    let verdict = LadderSpec::validate(ladder.clone(), blocks.clone()).is_ok();
                    assert_eq!(verdict, invariants_hold(&ladder, &blocks));
                    checked += 1;
                    // odometer over blocks in 0..=3
                    let mut i = 0;
                    loop {
                        if i == len {
                            break;
                        }
                        bshape[i] += 1;
                        if bshape[i] <= 3 {
                            break;
                        }
                        bshape[i] = 0;
                        i += 1;
                    }
                    if i == len {
                        break;
                    }
                }
                let mut i = 0;
                loop {
                    if i == len {
                        break;
                    }
                    shape[i] += 1;
                    if shape[i] < kinds.len() {
                        break;
                    }
                    shape[i] = 0;
                    i += 1;
                }
                if i == len {
                    break;
                }
            }
        }
        assert!(checked > 20_000);
    }

    fn arb_idx() -> impl Strategy<Value = OrdIndex> {
        (0u32..5, 0u32..8).prop_map(|(b, o)| OrdIndex::new(b, o))
    }

    proptest! {
        #[test]
        fn cmp_idx_is_total_order(a in arb_idx(), b in arb_idx(), c in arb_idx()) {
            // antisymmetry
            if cmp_idx(a, b) == Ordering::Less {
                prop_assert_eq!(cmp_idx(b, a), Ordering::Greater);
            }
            if cmp_idx(a, b) == Ordering::Equal {
                prop_assert_eq!(a, b);
            }
            // transitivity
            if cmp_idx(a, b) != Ordering::Greater && cmp_idx(b, c) != Ordering::Greater {
                prop_assert_ne!(cmp_idx(a, c), Ordering::Greater);
            }
            // totality is trivial: cmp_idx always answers
            let _ = cmp_idx(a, c);
        }

        #[test]
        fn block_base_is_a_retraction(a in arb_idx()) {
            let base = a.block_base();
            prop_assert!(base <= a);
            prop_assert_eq!(base.block_base(), base);
            prop_assert!(base.is_block_base());
        }

        #[test]
        fn block_base_below_delta_is_zero_or_smaller_limit(
            mu in arb_idx(), dblock in 1u32..5
        ) {
            let delta = OrdIndex::new(dblock, 0);
            prop_assume!(mu < delta);
            let base = mu.block_base();
            prop_assert!(base.offset == 0 && base.block < delta.block);
        }
    }
}
