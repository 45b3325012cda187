//! Seeded random generation of trees, conditions, and permutations.
//!
//! Every suite trial is a pure function of `(seed, trial index)`: the trial
//! RNG is a ChaCha stream selected by the index, so trials can run in any
//! order or in parallel and still reproduce exactly.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ladder::{LadderSpec, LevelKind, NodeId, OrdIndex};
use crate::perm::{validate_perm, NodePerm};
use crate::poset::{CohenPiece, Condition, Coord};
use crate::symmetry::IndexPerm;
use crate::tree::LevelTree;

/// The RNG for one trial of a seeded suite.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Size caps for sampled structures.
#[derive(Debug, Clone, Copy)]
pub struct SampleSizes {
    /// Cap on tree node count.
    pub max_nodes: usize,
    /// Cap on bits per Cohen piece.
    pub max_piece_bits: usize,
    /// Node index offsets are drawn below this.
    pub max_offset: u32,
    /// Coordinate offsets are drawn below this.
    pub max_coord_offset: u32,
}

impl Default for SampleSizes {
    fn default() -> Self {
        SampleSizes {
            max_nodes: 12,
            max_piece_bits: 8,
            max_offset: 6,
            max_coord_offset: 6,
        }
    }
}

pub fn sample_node_at<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    level: u32,
    sizes: &SampleSizes,
) -> NodeId {
    let blocks = spec.block_count(level).expect("level in ladder");
    NodeId::new(
        level,
        rng.gen_range(0..blocks),
        rng.gen_range(0..sizes.max_offset),
    )
}

pub fn sample_node<R: Rng>(rng: &mut R, spec: &LadderSpec, sizes: &SampleSizes) -> NodeId {
    let level = rng.gen_range(0..spec.level_count());
    sample_node_at(rng, spec, level, sizes)
}

fn fresh_node_at<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    taken: &BTreeSet<NodeId>,
    level: u32,
    sizes: &SampleSizes,
) -> NodeId {
    for _ in 0..16 {
        let candidate = sample_node_at(rng, spec, level, sizes);
        if !taken.contains(&candidate) {
            return candidate;
        }
    }
    // window saturated: walk offsets upward in block 0
    let mut offset = sizes.max_offset;
    loop {
        let candidate = NodeId::new(level, 0, offset);
        if !taken.contains(&candidate) {
            return candidate;
        }
        offset += 1;
    }
}

/// Adds `n` with a branch down to level 0, either hanging it under an
/// existing node or building a fully fresh chain. No-op when adding would
/// exceed `cap` or `n` is present.
fn add_with_branch<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    nodes: &mut BTreeSet<NodeId>,
    parent: &mut BTreeMap<NodeId, NodeId>,
    n: NodeId,
    cap: usize,
    sizes: &SampleSizes,
) {
    if nodes.contains(&n) {
        return;
    }
    let anchors: Vec<NodeId> = nodes.iter().filter(|m| m.level < n.level).copied().collect();
    let anchor = if !anchors.is_empty() && rng.gen_bool(0.6) {
        Some(anchors[rng.gen_range(0..anchors.len())])
    } else {
        None
    };
    let start_level = anchor.map_or(0, |a| a.level + 1);
    let new_count = (n.level - start_level) as usize + 1;
    if nodes.len() + new_count > cap {
        return;
    }
    let mut prev = anchor;
    for level in start_level..n.level {
        let fresh = fresh_node_at(rng, spec, nodes, level, sizes);
        nodes.insert(fresh);
        if let Some(p) = prev {
            parent.insert(fresh, p);
        }
        prev = Some(fresh);
    }
    nodes.insert(n);
    if let Some(p) = prev {
        parent.insert(n, p);
    }
}

pub fn sample_tree<R: Rng>(rng: &mut R, spec: &LadderSpec, sizes: &SampleSizes) -> LevelTree {
    let target = rng.gen_range(0..=sizes.max_nodes);
    let mut nodes = BTreeSet::new();
    let mut parent = BTreeMap::new();
    for _ in 0..4 * target + 4 {
        if nodes.len() >= target {
            break;
        }
        let n = sample_node(rng, spec, sizes);
        add_with_branch(rng, spec, &mut nodes, &mut parent, n, target, sizes);
    }
    LevelTree::from_parts(nodes, parent)
}

pub fn sample_piece<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    node: NodeId,
    sizes: &SampleSizes,
) -> CohenPiece {
    if spec.kind(node.level) == Some(LevelKind::Limit) {
        return CohenPiece::empty();
    }
    let count = rng.gen_range(0..=sizes.max_piece_bits);
    let mut piece = CohenPiece::empty();
    for _ in 0..count {
        piece.insert(
            Coord::new(node.level, rng.gen_range(0..sizes.max_coord_offset)),
            rng.gen(),
        );
    }
    piece
}

pub fn sample_condition<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    sizes: &SampleSizes,
) -> Condition {
    let tree = sample_tree(rng, spec, sizes);
    let pieces = tree
        .nodes()
        .map(|n| (n, sample_piece(rng, spec, n, sizes)))
        .collect();
    Condition::from_parts(tree, pieces)
}

/// A random strict-or-equal extension of `base`: pieces gain fresh bits and
/// the tree may grow new branches.
pub fn sample_extension<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    base: &Condition,
    sizes: &SampleSizes,
) -> Condition {
    let master = strengthen_pieces(rng, spec, base, sizes);
    elaborate(rng, spec, base, &master, sizes)
}

/// Same tree as `base`, with extra bits added to its pieces at coordinates
/// `base` leaves open.
fn strengthen_pieces<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    base: &Condition,
    sizes: &SampleSizes,
) -> Condition {
    let pieces = base
        .pieces()
        .map(|(n, piece)| {
            let mut strengthened = piece.clone();
            if spec.kind(n.level) != Some(LevelKind::Limit) {
                let extra = rng.gen_range(0..=sizes.max_piece_bits.saturating_sub(piece.len()));
                for _ in 0..extra {
                    let c = Coord::new(n.level, rng.gen_range(0..sizes.max_coord_offset));
                    if strengthened.bit(c).is_none() {
                        strengthened.insert(c, rng.gen());
                    }
                }
            }
            (n, strengthened)
        })
        .collect();
    Condition::from_parts(base.tree().clone(), pieces)
}

/// An extension of `base` whose bits at `base`'s nodes are a random subset
/// of `master`'s (so two such extensions stay compatible there), with fresh
/// branches grown on top.
fn elaborate<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    base: &Condition,
    master: &Condition,
    sizes: &SampleSizes,
) -> Condition {
    let mut pieces: BTreeMap<NodeId, CohenPiece> = base
        .pieces()
        .map(|(n, piece)| {
            let mut extended = piece.clone();
            for (c, b) in master.piece(n).expect("same tree").bits() {
                if extended.bit(c).is_none() && rng.gen_bool(0.5) {
                    extended.insert(c, b);
                }
            }
            (n, extended)
        })
        .collect();

    let mut nodes: BTreeSet<NodeId> = base.tree().nodes().collect();
    let mut parent: BTreeMap<NodeId, NodeId> = base
        .tree()
        .nodes()
        .filter_map(|n| base.tree().parent(n).map(|p| (n, p)))
        .collect();
    let growth_attempts = rng.gen_range(0..=6);
    for _ in 0..growth_attempts {
        let candidate = sample_node(rng, spec, sizes);
        add_with_branch(
            rng,
            spec,
            &mut nodes,
            &mut parent,
            candidate,
            sizes.max_nodes,
            sizes,
        );
    }
    for &n in &nodes {
        if !pieces.contains_key(&n) {
            pieces.insert(n, sample_piece(rng, spec, n, sizes));
        }
    }
    Condition::from_parts(LevelTree::from_parts(nodes, parent), pieces)
}

/// A random triple `(r, p, q)` satisfying the homogenization hypotheses:
/// `p` and `q` extend `r` and their restrictions to `r`'s tree are
/// compatible, because both draw those bits from one master extension.
pub fn sample_homogenize_triple<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    sizes: &SampleSizes,
) -> (Condition, Condition, Condition) {
    let r_sizes = SampleSizes {
        max_nodes: (sizes.max_nodes / 3).max(1),
        max_piece_bits: sizes.max_piece_bits / 2,
        ..*sizes
    };
    let r = sample_condition(rng, spec, &r_sizes);
    let master = strengthen_pieces(rng, spec, &r, sizes);
    let p = elaborate(rng, spec, &r, &master, sizes);
    let q = elaborate(rng, spec, &r, &master, sizes);
    (r, p, q)
}

/// A random level-preserving permutation: one or two shuffled orbits of
/// same-level nodes.
pub fn sample_perm<R: Rng>(rng: &mut R, spec: &LadderSpec, sizes: &SampleSizes) -> NodePerm {
    let mut moves = BTreeMap::new();
    for _ in 0..rng.gen_range(1..=2) {
        let level = rng.gen_range(0..spec.level_count());
        sample_orbit(rng, &mut moves, |r| sample_node_at(r, spec, level, sizes));
    }
    validate_perm(spec, moves).expect("sampled orbits are valid")
}

/// A random small permutation: every orbit stays inside one omega-block.
pub fn sample_small_perm<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    sizes: &SampleSizes,
) -> NodePerm {
    let mut moves = BTreeMap::new();
    for _ in 0..rng.gen_range(1..=2) {
        let level = rng.gen_range(0..spec.level_count());
        let block = rng.gen_range(0..spec.block_count(level).expect("level in ladder"));
        sample_orbit(rng, &mut moves, |r| {
            NodeId::new(level, block, r.gen_range(0..sizes.max_offset))
        });
    }
    validate_perm(spec, moves).expect("sampled orbits are valid")
}

fn sample_orbit<R: Rng>(
    rng: &mut R,
    moves: &mut BTreeMap<NodeId, NodeId>,
    mut draw: impl FnMut(&mut R) -> NodeId,
) {
    let want = rng.gen_range(2..=4usize);
    let mut pool = BTreeSet::new();
    for _ in 0..want * 4 {
        if pool.len() >= want {
            break;
        }
        let n = draw(rng);
        if !moves.contains_key(&n) {
            pool.insert(n);
        }
    }
    let sources: Vec<NodeId> = pool.into_iter().collect();
    let mut images = sources.clone();
    images.shuffle(rng);
    for (s, i) in sources.iter().zip(images.iter()) {
        if s != i {
            moves.insert(*s, *i);
        }
    }
}

/// A permutation with at least one cross-block move below `delta` at the
/// given level; the block surjection there is never invariant under it.
/// Needs at least two blocks at the level.
pub fn sample_cross_block_perm<R: Rng>(
    rng: &mut R,
    spec: &LadderSpec,
    level: u32,
    delta: OrdIndex,
    sizes: &SampleSizes,
) -> NodePerm {
    let blocks = spec.block_count(level).expect("level in ladder");
    assert!(blocks >= 2, "cross-block moves need two blocks");
    let src_block = rng.gen_range(0..delta.block.min(blocks));
    let mut img_block = rng.gen_range(0..blocks);
    if img_block == src_block {
        img_block = (img_block + 1) % blocks;
    }
    let src = NodeId::new(level, src_block, rng.gen_range(0..sizes.max_offset));
    let img = NodeId::new(level, img_block, rng.gen_range(0..sizes.max_offset));
    let mut moves: BTreeMap<NodeId, NodeId> = [(src, img), (img, src)].into_iter().collect();
    // optional extra small noise away from the witnesses
    if rng.gen_bool(0.5) {
        let noise_level = rng.gen_range(0..spec.level_count());
        let noise_block = rng.gen_range(0..spec.block_count(noise_level).unwrap());
        sample_orbit(rng, &mut moves, |r| {
            NodeId::new(noise_level, noise_block, r.gen_range(0..sizes.max_offset))
        });
    }
    validate_perm(spec, moves).expect("sampled moves are valid")
}

/// A random finite permutation of the indices below `delta`, supported on
/// blocks below `delta.block` and offsets below `window_offsets`.
pub fn sample_index_perm<R: Rng>(
    rng: &mut R,
    level: u32,
    delta: OrdIndex,
    window_offsets: u32,
) -> IndexPerm {
    let want = rng.gen_range(0..=4usize);
    let mut pool = BTreeSet::new();
    for _ in 0..want * 4 {
        if pool.len() >= want {
            break;
        }
        pool.insert(OrdIndex::new(
            rng.gen_range(0..delta.block),
            rng.gen_range(0..window_offsets),
        ));
    }
    let sources: Vec<OrdIndex> = pool.into_iter().collect();
    let mut images = sources.clone();
    images.shuffle(rng);
    let moves = sources
        .iter()
        .zip(images.iter())
        .filter(|(s, i)| s != i)
        .map(|(s, i)| (*s, *i))
        .collect();
    IndexPerm::new(level, delta, moves).expect("sampled moves stay below delta")
}
