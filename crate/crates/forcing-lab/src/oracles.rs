//! Independently written brute-force oracles.
//!
//! Each oracle restates its property from first principles — literal axiom
//! checks, exhaustive search over a closed finite window — and never calls
//! the implementation path it is used to check.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use forcing_core::ladder::{LadderSpec, NodeId, OrdIndex};
use forcing_core::poset::{validate_condition, CohenPiece, Condition, Coord};
use forcing_core::tree::{validate_relation, TreeRelation};
use forcing_core::fixtures;

// ---------------------------------------------------------------------------
// Tree axioms
// ---------------------------------------------------------------------------

/// All nodes of the spec's node space with index offsets below `max_offset`.
pub fn node_window(spec: &LadderSpec, max_offset: u32) -> Vec<NodeId> {
    let mut nodes = Vec::new();
    for level in 0..spec.level_count() {
        for block in 0..spec.block_count(level).unwrap() {
            for offset in 0..max_offset {
                nodes.push(NodeId::new(level, block, offset));
            }
        }
    }
    nodes
}

/// All subsets of `nodes` with at most `max_len` elements.
pub fn subsets_up_to(nodes: &[NodeId], max_len: usize) -> Vec<Vec<NodeId>> {
    let mut out = vec![vec![]];
    for &n in nodes {
        let existing = out.len();
        for i in 0..existing {
            if out[i].len() < max_len {
                let mut extended = out[i].clone();
                extended.push(n);
                out.push(extended);
            }
        }
    }
    out
}

/// Literal check of the five tree axioms on the relation encoded by `mask`
/// over the node list: bit `i * k + j` set means `nodes[i] < nodes[j]`.
/// Returns the `(child, parent)` edges when every axiom holds.
pub fn tree_axioms_verdict(
    spec: &LadderSpec,
    nodes: &[NodeId],
    mask: u32,
) -> Option<Vec<(NodeId, NodeId)>> {
    let k = nodes.len();
    let rel = |i: usize, j: usize| mask & (1 << (i * k + j)) != 0;

    // the field lies inside the node space
    if nodes.iter().any(|n| !spec.contains(*n)) {
        return None;
    }
    // strict and transitive
    for i in 0..k {
        if rel(i, i) {
            return None;
        }
        for j in 0..k {
            if !rel(i, j) {
                continue;
            }
            for l in 0..k {
                if rel(j, l) && !rel(i, l) {
                    return None;
                }
            }
        }
    }
    // related pairs climb levels
    for i in 0..k {
        for j in 0..k {
            if rel(i, j) && nodes[i].level >= nodes[j].level {
                return None;
            }
        }
    }
    // exactly one predecessor at every lower level
    for j in 0..k {
        for level in 0..nodes[j].level {
            let count = (0..k)
                .filter(|&i| rel(i, j) && nodes[i].level == level)
                .count();
            if count != 1 {
                return None;
            }
        }
    }
    // the maximal elements generate everything downward
    let maximal: Vec<usize> = (0..k).filter(|&i| (0..k).all(|j| !rel(i, j))).collect();
    for i in 0..k {
        let below_some_max = maximal.contains(&i) || maximal.iter().any(|&m| rel(i, m));
        if !below_some_max {
            return None;
        }
    }

    let mut parents = Vec::new();
    for j in 0..k {
        if nodes[j].level == 0 {
            continue;
        }
        let parent = (0..k)
            .find(|&i| rel(i, j) && nodes[i].level + 1 == nodes[j].level)
            .expect("uniqueness was just checked");
        parents.push((nodes[j], nodes[parent]));
    }
    parents.sort_unstable();
    Some(parents)
}

/// The relation encoded by `mask`, in wire form, for handing to the
/// implementation side of an agreement check.
pub fn mask_relation(nodes: &[NodeId], mask: u32) -> TreeRelation {
    let k = nodes.len();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if mask & (1 << (i * k + j)) != 0 {
                pairs.push((nodes[i], nodes[j]));
            }
        }
    }
    TreeRelation {
        nodes: nodes.to_vec(),
        pairs,
    }
}

// ---------------------------------------------------------------------------
// Poset meets
// ---------------------------------------------------------------------------

/// The extension order restated literally: the weaker condition's nodes,
/// parents, and bits all reappear in the stronger one.
pub fn leq_literal(stronger: &Condition, weaker: &Condition) -> bool {
    for n in weaker.tree().nodes() {
        if !stronger.tree().contains(n) {
            return false;
        }
        if stronger.tree().parent(n) != weaker.tree().parent(n) {
            return false;
        }
    }
    for (n, piece) in weaker.pieces() {
        let Some(strong_piece) = stronger.piece(n) else {
            return false;
        };
        for (c, b) in piece.bits() {
            if strong_piece.bit(c) != Some(b) {
                return false;
            }
        }
    }
    true
}

/// Every condition on a small closed node window, with the extension order
/// precomputed, supporting exhaustive greatest-lower-bound search.
///
/// The window — two level-0 roots, one level-1 node, one level-2 node,
/// coordinate offsets below 2 — is closed under unions, so the meet of any
/// two members lies in the universe whenever it exists at all.
pub struct ConditionUniverse {
    pub spec: LadderSpec,
    pub conditions: Vec<Condition>,
    index: HashMap<Condition, usize>,
    below: Vec<Vec<u64>>,
    words: usize,
}

impl ConditionUniverse {
    /// The standard window over the three-level fixture.
    pub fn three_level_window() -> Self {
        let spec = fixtures::three_level();
        let root_a = NodeId::new(0, 0, 0);
        let root_b = NodeId::new(0, 1, 0);
        let mid = NodeId::new(1, 0, 0);
        let top = NodeId::new(2, 0, 0);

        let mut trees = Vec::new();
        for has_a in [false, true] {
            for has_b in [false, true] {
                // 0 = absent, 1 = under root_a, 2 = under root_b
                for mid_state in 0..3u8 {
                    for has_top in [false, true] {
                        if mid_state == 1 && !has_a {
                            continue;
                        }
                        if mid_state == 2 && !has_b {
                            continue;
                        }
                        if has_top && mid_state == 0 {
                            continue;
                        }
                        let mut nodes = Vec::new();
                        let mut pairs = Vec::new();
                        if has_a {
                            nodes.push(root_a);
                        }
                        if has_b {
                            nodes.push(root_b);
                        }
                        if mid_state > 0 {
                            let root = if mid_state == 1 { root_a } else { root_b };
                            nodes.push(mid);
                            pairs.push((root, mid));
                            if has_top {
                                nodes.push(top);
                                pairs.push((mid, top));
                                pairs.push((root, top));
                            }
                        }
                        let tree =
                            validate_relation(&spec, &TreeRelation { nodes, pairs })
                                .expect("window trees are valid");
                        trees.push(tree);
                    }
                }
            }
        }

        // every assignment of {unset, 0, 1} to the two coords of each node
        let mut conditions = Vec::new();
        for tree in &trees {
            let nodes: Vec<NodeId> = tree.nodes().collect();
            let mut states = vec![0u8; nodes.len() * 2];
            loop {
                let mut pieces: BTreeMap<NodeId, CohenPiece> = BTreeMap::new();
                for (ni, &n) in nodes.iter().enumerate() {
                    let mut piece = CohenPiece::empty();
                    for ci in 0..2u32 {
                        match states[ni * 2 + ci as usize] {
                            0 => {}
                            1 => piece.insert(Coord::new(n.level, ci), false),
                            _ => piece.insert(Coord::new(n.level, ci), true),
                        }
                    }
                    pieces.insert(n, piece);
                }
                conditions.push(
                    validate_condition(&spec, tree.clone(), pieces)
                        .expect("window conditions are valid"),
                );
                // odometer over 3^(2 * nodes)
                let mut i = 0;
                loop {
                    if i == states.len() {
                        break;
                    }
                    states[i] += 1;
                    if states[i] < 3 {
                        break;
                    }
                    states[i] = 0;
                    i += 1;
                }
                if i == states.len() {
                    break;
                }
            }
        }

        let n = conditions.len();
        let words = n.div_ceil(64);
        // node and bit counts can only grow toward stronger conditions;
        // comparing them first skips most of the n^2 literal checks
        let weight: Vec<(usize, usize)> = conditions
            .iter()
            .map(|c| {
                let bits = c.pieces().map(|(_, piece)| piece.len()).sum();
                (c.tree().len(), bits)
            })
            .collect();
        let below: Vec<Vec<u64>> = (0..n)
            .into_par_iter()
            .map(|y| {
                let mut row = vec![0u64; words];
                for x in 0..n {
                    if weight[x].0 < weight[y].0 || weight[x].1 < weight[y].1 {
                        continue;
                    }
                    if leq_literal(&conditions[x], &conditions[y]) {
                        row[x / 64] |= 1 << (x % 64);
                    }
                }
                row
            })
            .collect();
        let index = conditions
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        ConditionUniverse {
            spec,
            conditions,
            index,
            below,
            words,
        }
    }

    /// The shared instance; the order matrix is costly enough to build once
    /// per process.
    pub fn shared() -> &'static ConditionUniverse {
        static SHARED: std::sync::OnceLock<ConditionUniverse> = std::sync::OnceLock::new();
        SHARED.get_or_init(ConditionUniverse::three_level_window)
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn index_of(&self, c: &Condition) -> Option<usize> {
        self.index.get(c).copied()
    }

    /// `x <= y` in the precomputed literal order.
    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.below[y][x / 64] & (1 << (x % 64)) != 0
    }

    /// Brute-force greatest lower bound of two members: scan the common
    /// lower bounds for a maximum. `None` when no common extension exists.
    pub fn glb(&self, p: usize, q: usize) -> Option<usize> {
        let mut candidate: Option<usize> = None;
        let mut lower = vec![0u64; self.words];
        for w in 0..self.words {
            lower[w] = self.below[p][w] & self.below[q][w];
            let mut bits = lower[w];
            while bits != 0 {
                let s = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                candidate = match candidate {
                    None => Some(s),
                    Some(c) if self.leq(c, s) => Some(s),
                    keep => keep,
                };
            }
        }
        let c = candidate?;
        // a maximum must dominate every common lower bound
        for w in 0..self.words {
            if lower[w] & !self.below[c][w] != 0 {
                return None;
            }
        }
        Some(c)
    }
}

// ---------------------------------------------------------------------------
// Cloud window
// ---------------------------------------------------------------------------

/// The index window below `delta`: all blocks under it, offsets below
/// `max_offset`.
pub fn index_window(delta: OrdIndex, max_offset: u32) -> Vec<OrdIndex> {
    let mut window = Vec::new();
    for block in 0..delta.block {
        for offset in 0..max_offset {
            window.push(OrdIndex::new(block, offset));
        }
    }
    window
}

/// Every permutation of the window, as explicit move lists with fixed
/// points dropped.
pub fn window_permutations(window: &[OrdIndex]) -> Vec<Vec<(OrdIndex, OrdIndex)>> {
    let mut images: Vec<OrdIndex> = window.to_vec();
    let mut out = Vec::new();
    permute(&mut images, 0, &mut |perm| {
        let moves: Vec<(OrdIndex, OrdIndex)> = window
            .iter()
            .zip(perm.iter())
            .filter(|(s, i)| s != i)
            .map(|(s, i)| (*s, *i))
            .collect();
        out.push(moves);
    });
    out
}

fn permute(items: &mut [OrdIndex], start: usize, visit: &mut impl FnMut(&[OrdIndex])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

/// The full function table of "block base after sigma" on the window,
/// computed straight from the move list.
pub fn composite_table(window: &[OrdIndex], moves: &[(OrdIndex, OrdIndex)]) -> Vec<OrdIndex> {
    window
        .iter()
        .map(|&mu| {
            let image = moves
                .iter()
                .find(|(src, _)| *src == mu)
                .map(|(_, img)| *img)
                .unwrap_or(mu);
            image.block_base()
        })
        .collect()
}
