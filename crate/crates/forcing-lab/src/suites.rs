//! The property suites: every module's invariants, runnable from the CLI
//! and from the acceptance tests. Each suite is deterministic in its seed;
//! trials are independent ChaCha streams and may run in parallel.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use forcing_core::fixtures;
use forcing_core::generic::{
    build_chain, cohen_set, requirement_met, surjection_value_at_node, GenericError, Requirement,
};
use forcing_core::ladder::{cmp_idx, LadderSpec, LevelKind, NodeId, OrdIndex};
use forcing_core::poset::{validate_condition, CohenPiece, Condition, Coord};
use forcing_core::sampling::{
    sample_condition, sample_cross_block_perm, sample_extension, sample_homogenize_triple,
    sample_index_perm, sample_node, sample_perm, sample_small_perm, trial_rng, SampleSizes,
};
use forcing_core::symmetry::{
    clouds_equal, homogenize, surjection_invariant_under, CloudElement, IndexPerm,
};
use forcing_core::tree::validate_relation;

use crate::oracles;
use crate::report::RunReport;

/// The fixed requirement script exercised by the generic suite and shipped
/// with the CLI samples.
pub const DEMO_REQUIREMENTS_JSON: &str = include_str!("../data/demo_reqs.json");

pub fn demo_requirements() -> Vec<Requirement> {
    serde_json::from_str(DEMO_REQUIREMENTS_JSON).expect("bundled script parses")
}

/// Runs `trials` independent seeded trials and aggregates a report; the
/// counterexample, if any, is the lowest-index failure regardless of
/// parallel scheduling.
fn run_seeded_suite(
    command: &str,
    seed: u64,
    trials: u64,
    trial: impl Fn(u64, &mut ChaCha8Rng) -> Result<(), String> + Sync,
) -> RunReport {
    let start = Instant::now();
    let mut failures: Vec<(u64, String)> = (0..trials)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = trial_rng(seed, t);
            trial(t, &mut rng).err().map(|msg| (t, msg))
        })
        .collect();
    failures.sort_by(|a, b| a.0.cmp(&b.0));
    let passed = trials - failures.len() as u64;
    let counterexample = failures
        .into_iter()
        .next()
        .map(|(t, msg)| format!("trial {t}: {msg}"));
    RunReport::new(command, seed, trials, passed, counterexample, start.elapsed())
}

fn fail(msg: impl Into<String>) -> Result<(), String> {
    Err(msg.into())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// ladder
// ---------------------------------------------------------------------------

/// Total-order laws for index comparison, block-base laws, and the shape of
/// the limits below each admissible bound.
pub fn ladder_order_laws(spec: &LadderSpec, seed: u64, trials: u64) -> RunReport {
    run_seeded_suite("ladder-order-laws", seed, trials, |_, rng| {
        let draw = |rng: &mut ChaCha8Rng| OrdIndex::new(rng.gen_range(0..5), rng.gen_range(0..8));
        let (a, b, c) = (draw(rng), draw(rng), draw(rng));
        use std::cmp::Ordering::*;
        ensure(
            cmp_idx(a, b) == cmp_idx(b, a).reverse(),
            || format!("antisymmetry broke on {a} vs {b}"),
        )?;
        ensure(cmp_idx(a, a) == Equal, || format!("{a} not equal to itself"))?;
        if cmp_idx(a, b) != Greater && cmp_idx(b, c) != Greater {
            ensure(cmp_idx(a, c) != Greater, || {
                format!("transitivity broke on {a}, {b}, {c}")
            })?;
        }
        let base = a.block_base();
        ensure(base <= a && base.block_base() == base && base.offset == 0, || {
            format!("block base laws broke at {a}")
        })?;

        for level in 0..spec.level_count() {
            for delta in spec.limits_below(level).expect("level in range") {
                ensure(delta.offset == 0 && delta.block >= 1, || {
                    format!("limit {delta} at level {level} is not a limit")
                })?;
                if a < delta {
                    let base = a.block_base();
                    ensure(base.offset == 0 && base.block < delta.block, || {
                        format!("block base of {a} escapes below {delta}")
                    })?;
                }
            }
        }
        Ok(())
    })
}

/// Exhaustive agreement of ladder validation with a literal restatement of
/// its invariants, over every kind/block combination of length up to 4 with
/// block counts up to 3 (including mismatched lengths).
pub fn ladder_spec_exhaustive(seed: u64) -> RunReport {
    let start = Instant::now();
    let kinds = [LevelKind::First, LevelKind::Successor, LevelKind::Limit];

    fn invariants_hold(ladder: &[LevelKind], blocks: &[u32]) -> bool {
        !ladder.is_empty()
            && ladder[0] == LevelKind::First
            && ladder[1..].iter().all(|k| *k != LevelKind::First)
            && ladder.len() == blocks.len()
            && blocks.iter().all(|&b| b >= 1)
            && blocks.windows(2).all(|w| w[0] <= w[1])
    }

    // all kind sequences of length 0..=4 and block sequences over 0..=3
    let mut ladders: Vec<Vec<LevelKind>> = vec![vec![]];
    let mut frontier = vec![Vec::new()];
    for _ in 0..4 {
        let mut next = Vec::new();
        for prefix in &frontier {
            for k in kinds {
                let mut extended: Vec<LevelKind> = prefix.clone();
                extended.push(k);
                next.push(extended);
            }
        }
        ladders.extend(next.iter().cloned());
        frontier = next;
    }
    let mut block_lists: Vec<Vec<u32>> = vec![vec![]];
    let mut frontier: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..4 {
        let mut next = Vec::new();
        for prefix in &frontier {
            for b in 0..=3u32 {
                let mut extended = prefix.clone();
                extended.push(b);
                next.push(extended);
            }
        }
        block_lists.extend(next.iter().cloned());
        frontier = next;
    }

    let mut attempted = 0u64;
    let mut passed = 0u64;
    let mut counterexample = None;
    for ladder in &ladders {
        for blocks in &block_lists {
            attempted += 1;
            let verdict = LadderSpec::validate(ladder.clone(), blocks.clone()).is_ok();
            if verdict == invariants_hold(ladder, blocks) {
                passed += 1;
            } else if counterexample.is_none() {
                counterexample = Some(format!("ladder {ladder:?} blocks {blocks:?}"));
            }
        }
    }
    RunReport::new(
        "ladder-spec-exhaustive",
        seed,
        attempted,
        passed,
        counterexample,
        start.elapsed(),
    )
}

// ---------------------------------------------------------------------------
// trees
// ---------------------------------------------------------------------------

/// Exhaustive agreement of relation validation with the literal five-axiom
/// oracle, over every relation on node subsets of size up to 4 drawn from
/// the three-level fixture's space with offsets below 2.
pub fn tree_axioms_oracle(seed: u64) -> RunReport {
    let start = Instant::now();
    let spec = fixtures::three_level();
    let window = oracles::node_window(&spec, 2);
    let subsets = oracles::subsets_up_to(&window, 4);

    struct Tally {
        attempted: u64,
        passed: u64,
        first_failure: Option<(usize, u32)>,
    }

    let tallies: Vec<Tally> = subsets
        .par_iter()
        .enumerate()
        .map(|(subset_index, nodes)| {
            let k = nodes.len();
            let mask_count: u64 = 1 << (k * k);
            let mut tally = Tally {
                attempted: 0,
                passed: 0,
                first_failure: None,
            };
            let mut raw = oracles::mask_relation(nodes, 0);
            for mask in 0..mask_count {
                let mask = mask as u32;
                tally.attempted += 1;
                let oracle = oracles::tree_axioms_verdict(&spec, nodes, mask);
                raw.pairs.clear();
                for i in 0..k {
                    for j in 0..k {
                        if mask & (1 << (i * k + j)) != 0 {
                            raw.pairs.push((nodes[i], nodes[j]));
                        }
                    }
                }
                let implementation = validate_relation(&spec, &raw);
                let agree = match (&oracle, &implementation) {
                    (Some(parents), Ok(tree)) => {
                        let impl_parents: Vec<(NodeId, NodeId)> = tree
                            .nodes()
                            .filter_map(|n| tree.parent(n).map(|p| (n, p)))
                            .collect();
                        let round_trip = {
                            let mut given = raw.pairs.clone();
                            given.sort_unstable();
                            given.dedup();
                            tree.to_relation().pairs == given
                        };
                        *parents == impl_parents && round_trip
                    }
                    (None, Err(_)) => true,
                    _ => false,
                };
                if agree {
                    tally.passed += 1;
                } else if tally.first_failure.is_none() {
                    tally.first_failure = Some((subset_index, mask));
                }
            }
            tally
        })
        .collect();

    let attempted: u64 = tallies.iter().map(|t| t.attempted).sum();
    let passed: u64 = tallies.iter().map(|t| t.passed).sum();
    let counterexample = tallies
        .iter()
        .filter_map(|t| t.first_failure)
        .min()
        .map(|(subset_index, mask)| {
            let raw = oracles::mask_relation(&subsets[subset_index], mask);
            format!(
                "disagreement on {}",
                serde_json::to_string(&raw).unwrap_or_default()
            )
        });
    RunReport::new(
        "tree-axioms-oracle",
        seed,
        attempted,
        passed,
        counterexample,
        start.elapsed(),
    )
}

/// Subtree monotonicity and idempotence, merge laws, branch lengths, and
/// relation round trips on random trees.
pub fn tree_operation_laws(spec: &LadderSpec, seed: u64, trials: u64) -> RunReport {
    let sizes = SampleSizes::default();
    let spec = spec.clone();
    run_seeded_suite("tree-operation-laws", seed, trials, move |_, rng| {
        let tree = forcing_core::sampling::sample_tree(rng, &spec, &sizes);

        // branch lengths: one predecessor per lower level
        for n in tree.nodes() {
            let branch = tree.branch(n).expect("node in tree");
            ensure(branch.len() as u32 == n.level + 1, || {
                format!("branch of {n} has {} nodes", branch.len())
            })?;
        }

        // round trip through the full relation
        let revalidated = validate_relation(&spec, &tree.to_relation())
            .map_err(|e| format!("round trip failed: {e:?}"))?;
        ensure(revalidated == tree, || "round trip changed the tree".into())?;

        // generated subtrees: monotone, idempotent on the maximal set
        let all: Vec<NodeId> = tree.nodes().collect();
        let picks2: Vec<NodeId> = all.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let picks1: Vec<NodeId> = picks2.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let sub1 = tree.generated_subtree(picks1).expect("picks in tree");
        let sub2 = tree.generated_subtree(picks2).expect("picks in tree");
        ensure(sub2.contains_subtree(&sub1), || {
            "generated subtree is not monotone".into()
        })?;
        ensure(
            tree.generated_subtree(tree.maximal_nodes()).expect("maximal in tree") == tree,
            || "closure of the maximal set lost nodes".into(),
        )?;

        // merge: commutative and associative on subtrees of a common tree
        let pick = |rng: &mut ChaCha8Rng| {
            let picks: Vec<NodeId> = all.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
            tree.generated_subtree(picks).expect("picks in tree")
        };
        let (t1, t2, t3) = (pick(rng), pick(rng), pick(rng));
        let m12 = t1.merge(&t2).map_err(|e| e.to_string())?;
        ensure(m12 == t2.merge(&t1).map_err(|e| e.to_string())?, || {
            "merge is not commutative".into()
        })?;
        ensure(m12.contains_subtree(&t1) && m12.contains_subtree(&t2), || {
            "merge lost a subtree".into()
        })?;
        let left = m12.merge(&t3).map_err(|e| e.to_string())?;
        let right = t1
            .merge(&t2.merge(&t3).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        ensure(left == right, || "merge is not associative".into())?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// poset
// ---------------------------------------------------------------------------

/// Partial-order laws of the extension order, symmetry of compatibility,
/// and monotonicity of restriction, on random conditions.
pub fn poset_order_laws(spec: &LadderSpec, seed: u64, trials: u64) -> RunReport {
    let sizes = SampleSizes::default();
    let spec = spec.clone();
    run_seeded_suite("poset-order-laws", seed, trials, move |_, rng| {
        let p = sample_condition(rng, &spec, &sizes);
        let q = sample_extension(rng, &spec, &p, &sizes);
        let r = sample_extension(rng, &spec, &q, &sizes);
        let s = sample_condition(rng, &spec, &sizes);

        ensure(p.leq(&p), || "reflexivity broke".into())?;
        ensure(q.leq(&p) && r.leq(&q) && r.leq(&p), || {
            "transitivity broke along an extension chain".into()
        })?;
        if p.leq(&q) {
            ensure(p == q, || "antisymmetry broke".into())?;
        }
        ensure(p.compatible(&s) == s.compatible(&p), || {
            "compatibility is not symmetric".into()
        })?;
        ensure(p.compatible(&Condition::empty()), || {
            "empty condition must be compatible with everything".into()
        })?;

        // common extensions: idempotent, lower bounds, absorb extensions
        ensure(p.common_extension(&p) == Ok(p.clone()), || {
            "self-meet is not the identity".into()
        })?;
        if let Ok(m) = p.common_extension(&s) {
            ensure(m.leq(&p) && m.leq(&s), || {
                "common extension is not a lower bound".into()
            })?;
        }
        ensure(p.common_extension(&q) == Ok(q.clone()), || {
            "meet with an extension must be that extension".into()
        })?;

        // restriction: monotone in the picks
        let all: Vec<NodeId> = p.tree().nodes().collect();
        let picks2: Vec<NodeId> = all.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let picks1: Vec<NodeId> = picks2.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let sub1 = p.tree().generated_subtree(picks1).expect("picks in tree");
        let sub2 = p.tree().generated_subtree(picks2).expect("picks in tree");
        let r1 = p.restrict(&sub1).expect("subtree of p");
        let r2 = p.restrict(&sub2).expect("subtree of p");
        ensure(r2.leq(&r1) && p.leq(&r2), || {
            "restriction is not monotone in the picks".into()
        })?;
        Ok(())
    })
}

/// Exhaustive agreement of the implemented meet with brute-force greatest
/// lower bound search: every ordered pair of conditions on trees of at
/// most 3 nodes, with the search ranging over the full union-closed
/// window (whose members reach 4 nodes).
pub fn poset_meet_oracle(seed: u64) -> RunReport {
    let start = Instant::now();
    let universe = oracles::ConditionUniverse::shared();
    let small: Vec<usize> = (0..universe.len())
        .filter(|&i| universe.conditions[i].tree().len() <= 3)
        .collect();
    let n = small.len();

    let failures: Vec<(usize, usize)> = small
        .par_iter()
        .flat_map_iter(|&p| {
            let small = &small;
            small.iter().filter_map(move |&q| {
                let implemented = universe.conditions[p].common_extension(&universe.conditions[q]);
                let oracle = universe.glb(p, q);
                let agree = match (&implemented, oracle) {
                    (Ok(m), Some(g)) => universe.conditions[g] == *m,
                    (Err(_), None) => true,
                    _ => false,
                };
                if agree {
                    None
                } else {
                    Some((p, q))
                }
            })
        })
        .collect();

    let attempted = (n * n) as u64;
    let passed = attempted - failures.len() as u64;
    let counterexample = failures.iter().min().map(|&(p, q)| {
        format!(
            "meet disagreement between {} and {}",
            serde_json::to_string(&universe.conditions[p]).unwrap_or_default(),
            serde_json::to_string(&universe.conditions[q]).unwrap_or_default()
        )
    });
    RunReport::new(
        "poset-meet-oracle",
        seed,
        attempted,
        passed,
        counterexample,
        start.elapsed(),
    )
}

// ---------------------------------------------------------------------------
// permutations
// ---------------------------------------------------------------------------

/// The automorphism laws: permutations preserve the order and compatibility
/// in both directions, composition acts sequentially, images stay valid.
pub fn perm_automorphism_laws(spec: &LadderSpec, seed: u64, trials: u64) -> RunReport {
    let sizes = SampleSizes::default();
    let spec = spec.clone();
    run_seeded_suite("perm-automorphism-laws", seed, trials, move |_, rng| {
        let pi = sample_perm(rng, &spec, &sizes);
        let rho = sample_perm(rng, &spec, &sizes);
        let p = sample_condition(rng, &spec, &sizes);
        let q = if rng.gen_bool(0.5) {
            sample_extension(rng, &spec, &p, &sizes)
        } else {
            sample_condition(rng, &spec, &sizes)
        };

        let pi_p = pi.apply_condition(&p);
        let pi_q = pi.apply_condition(&q);

        // images are honest conditions
        let pieces = pi_p.pieces().map(|(n, piece)| (n, piece.clone())).collect();
        validate_condition(&spec, pi_p.tree().clone(), pieces)
            .map_err(|e| format!("image of a condition failed validation: {e:?}"))?;
        ensure(
            pi_p.tree().maximal_nodes().len() == p.tree().maximal_nodes().len(),
            || "image changed the number of maximal nodes".into(),
        )?;

        ensure(p.leq(&q) == pi_p.leq(&pi_q), || {
            "order preservation broke".into()
        })?;
        ensure(q.leq(&p) == pi_q.leq(&pi_p), || {
            "order preservation broke in reverse".into()
        })?;
        ensure(p.compatible(&q) == pi_p.compatible(&pi_q), || {
            "compatibility preservation broke".into()
        })?;

        let composed = pi.compose(&rho).apply_condition(&p);
        let sequential = pi.apply_condition(&rho.apply_condition(&p));
        ensure(composed == sequential, || "composition law broke".into())?;

        ensure(pi.invert().apply_condition(&pi_p) == p, || {
            "inverse does not undo the action".into()
        })?;
        Ok(())
    })
}

/// Small permutations are closed under composition and inverse.
pub fn perm_small_subgroup(spec: &LadderSpec, seed: u64, trials: u64) -> RunReport {
    let sizes = SampleSizes::default();
    let spec = spec.clone();
    run_seeded_suite("perm-small-subgroup", seed, trials, move |_, rng| {
        let a = sample_small_perm(rng, &spec, &sizes);
        let b = sample_small_perm(rng, &spec, &sizes);
        ensure(a.is_small() && b.is_small(), || "sampler broke".into())?;
        ensure(a.compose(&b).is_small(), || {
            "composition left the small subgroup".into()
        })?;
        ensure(a.invert().is_small(), || {
            "inverse left the small subgroup".into()
        })?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// symmetry
// ---------------------------------------------------------------------------

/// The homogenization suite: for random hypothesis-satisfying triples,
/// the produced permutation is small, fixes the common condition's tree
/// pointwise, and makes the two extensions compatible.
pub fn lemma1_homogenize(
    command: &str,
    spec: &LadderSpec,
    seed: u64,
    trials: u64,
    sizes: SampleSizes,
) -> RunReport {
    let spec = spec.clone();
    run_seeded_suite(command, seed, trials, move |_, rng| {
        let (r, p, q) = sample_homogenize_triple(rng, &spec, &sizes);
        let dump = || {
            json!({"r": r, "p": p, "q": q}).to_string()
        };
        let pi = homogenize(&spec, &r, &p, &q)
            .map_err(|e| format!("homogenize refused a valid triple ({e}): {}", dump()))?;
        ensure(pi.is_small(), || format!("permutation not small: {}", dump()))?;
        ensure(
            r.tree().nodes().all(|n| pi.apply_node(n) == n),
            || format!("permutation moves the common tree: {}", dump()),
        )?;
        ensure(pi.apply_condition(&r) == r, || {
            format!("image of the common condition changed: {}", dump())
        })?;
        let moved = pi.apply_condition(&q);
        let pieces = moved.pieces().map(|(n, piece)| (n, piece.clone())).collect();
        validate_condition(&spec, moved.tree().clone(), pieces)
            .map_err(|e| format!("moved condition invalid ({e:?}): {}", dump()))?;
        ensure(p.compatible(&moved), || {
            format!("images stay incompatible: {}", dump())
        })?;
        Ok(())
    })
}

/// Positive and negative invariance: small permutations never disturb the
/// block surjection; permutations with a cross-block move below the bound
/// always do.
pub fn surjection_invariance(spec: &LadderSpec, seed: u64, trials_each: u64) -> RunReport {
    let sizes = SampleSizes::default();
    let spec_owned = spec.clone();
    let cross_levels: Vec<u32> = (0..spec.level_count())
        .filter(|&l| spec.block_count(l).unwrap() >= 2)
        .collect();
    let negatives = if cross_levels.is_empty() { 0 } else { trials_each };
    let spec2 = spec.clone();
    let positive = run_seeded_suite(
        "surjection-invariance",
        seed,
        trials_each,
        move |_, rng| {
            let pi = sample_small_perm(rng, &spec_owned, &sizes);
            let level = rng.gen_range(0..spec_owned.level_count());
            let deltas = spec_owned.admissible_deltas(level).expect("level in range");
            let delta = deltas[rng.gen_range(0..deltas.len())];
            ensure(
                surjection_invariant_under(&spec_owned, &pi, level, delta)
                    .map_err(|e| e.to_string())?,
                || format!("small permutation flagged at level {level}, delta {delta}"),
            )
        },
    );
    if negatives == 0 {
        return positive;
    }
    let negative = run_seeded_suite(
        "surjection-invariance-negative",
        seed,
        negatives,
        move |_, rng| {
            let level = cross_levels[rng.gen_range(0..cross_levels.len())];
            let deltas = spec2.admissible_deltas(level).expect("level in range");
            let delta = deltas[rng.gen_range(0..deltas.len())];
            let pi = sample_cross_block_perm(rng, &spec2, level, delta, &sizes);
            ensure(
                !surjection_invariant_under(&spec2, &pi, level, delta)
                    .map_err(|e| e.to_string())?,
                || format!("cross-block move went unnoticed at level {level}, delta {delta}"),
            )
        },
    );
    let attempted = positive.attempted + negative.attempted;
    let passed = positive.passed + negative.passed;
    let counterexample = positive.counterexample.or(negative.counterexample);
    RunReport::new(
        "surjection-invariance",
        seed,
        attempted,
        passed,
        counterexample,
        positive.elapsed + negative.elapsed,
    )
}

/// Cloud equality is an equivalence relation; block-preserving sigmas all
/// collapse onto the plain surjection.
pub fn cloud_equivalence(spec: &LadderSpec, seed: u64, trials: u64) -> RunReport {
    let spec = spec.clone();
    run_seeded_suite("cloud-equivalence", seed, trials, move |_, rng| {
        let level = rng.gen_range(0..spec.level_count());
        let deltas = spec.admissible_deltas(level).expect("level in range");
        let delta = deltas[rng.gen_range(0..deltas.len())];

        let a = CloudElement::from_sigma(sample_index_perm(rng, level, delta, 4));
        let b = CloudElement::from_sigma(sample_index_perm(rng, level, delta, 4));
        let c = CloudElement::from_sigma(sample_index_perm(rng, level, delta, 4));

        let eq = |x: &CloudElement, y: &CloudElement| clouds_equal(x, y).expect("same parameters");
        ensure(eq(&a, &a), || "reflexivity broke".into())?;
        ensure(eq(&a, &b) == eq(&b, &a), || "symmetry broke".into())?;
        if eq(&a, &b) && eq(&b, &c) {
            ensure(eq(&a, &c), || "transitivity broke".into())?;
        }

        // block-preserving sigmas land on the identity's cloud element
        let within = CloudElement::from_sigma(sample_within_block_index_perm(rng, level, delta));
        let identity = CloudElement::from_sigma(IndexPerm::identity(level, delta));
        ensure(eq(&within, &identity), || {
            "a block-preserving sigma changed the composite".into()
        })?;
        Ok(())
    })
}

fn sample_within_block_index_perm(
    rng: &mut ChaCha8Rng,
    level: u32,
    delta: OrdIndex,
) -> IndexPerm {
    let block = rng.gen_range(0..delta.block);
    let mut offsets: Vec<u32> = (0..4).collect();
    for i in (1..offsets.len()).rev() {
        let j = rng.gen_range(0..=i);
        offsets.swap(i, j);
    }
    let moves = (0..4u32)
        .zip(offsets)
        .filter(|(src, img)| src != img)
        .map(|(src, img)| (OrdIndex::new(block, src), OrdIndex::new(block, img)))
        .collect();
    IndexPerm::new(level, delta, moves).expect("moves stay below delta")
}

/// Exhaustive agreement of cloud equality with full function tables over
/// the window of all permutations supported on offsets below 3 under the
/// bound (2, 0).
pub fn cloud_window_oracle(seed: u64) -> RunReport {
    let start = Instant::now();
    let delta = OrdIndex::new(2, 0);
    let level = 1; // bound (2,0) is admissible at the fixture's level 1
    let window = oracles::index_window(delta, 3);
    let perms = oracles::window_permutations(&window);

    let elements: Vec<CloudElement> = perms
        .iter()
        .map(|moves| {
            CloudElement::from_sigma(
                IndexPerm::new(level, delta, moves.iter().copied().collect())
                    .expect("window permutations are valid"),
            )
        })
        .collect();
    let tables: Vec<Vec<OrdIndex>> = perms
        .iter()
        .map(|moves| oracles::composite_table(&window, moves))
        .collect();

    let n = elements.len();
    let failures: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let elements = &elements;
            let tables = &tables;
            (0..n).filter_map(move |j| {
                let implemented =
                    clouds_equal(&elements[i], &elements[j]).expect("same parameters");
                let oracle = tables[i] == tables[j];
                if implemented == oracle {
                    None
                } else {
                    Some((i, j))
                }
            })
        })
        .collect();

    let attempted = (n * n) as u64;
    let passed = attempted - failures.len() as u64;
    let counterexample = failures.iter().min().map(|&(i, j)| {
        format!(
            "cloud disagreement between {} and {}",
            serde_json::to_string(&elements[i]).unwrap_or_default(),
            serde_json::to_string(&elements[j]).unwrap_or_default()
        )
    });
    RunReport::new(
        "cloud-window-oracle",
        seed,
        attempted,
        passed,
        counterexample,
        start.elapsed(),
    )
}

// ---------------------------------------------------------------------------
// generic simulation
// ---------------------------------------------------------------------------

/// Chains built against random requirement scripts descend, meet every
/// requirement per the independent checker, and keep Cohen sets monotone;
/// trial 0 replays the bundled script, trial 1 the unsatisfiable
/// limit-level case.
pub fn generic_chain(spec: &LadderSpec, seed: u64, random_trials: u64) -> RunReport {
    let spec = spec.clone();
    run_seeded_suite("generic-chain", seed, random_trials + 2, move |t, rng| {
        match t {
            0 => {
                let fixture_spec = fixtures::three_level();
                let reqs = demo_requirements();
                verify_script(&fixture_spec, &Condition::empty(), &reqs, 1234)
            }
            1 => verify_unsatisfiable_limit_case(),
            _ => {
                let reqs = sample_requirements(rng, &spec);
                let script_seed = rng.gen();
                match build_chain(&spec, &Condition::empty(), &reqs, script_seed) {
                    Ok(_) => verify_script(&spec, &Condition::empty(), &reqs, script_seed),
                    Err(err) => verify_unsatisfiable_claim(&spec, &reqs, script_seed, &err),
                }
            }
        }
    })
}

fn sample_requirements(rng: &mut ChaCha8Rng, spec: &LadderSpec) -> Vec<Requirement> {
    let sizes = SampleSizes::default();
    let count = rng.gen_range(1..=8);
    (0..count)
        .map(|_| match rng.gen_range(0..3) {
            0 => Requirement::RequireNode {
                node: sample_node(rng, spec, &sizes),
            },
            1 => {
                let node = sample_node(rng, spec, &sizes);
                let owners: Vec<u32> = (0..=node.level)
                    .filter(|&l| spec.kind(l) != Some(LevelKind::Limit))
                    .collect();
                let interval = owners[rng.gen_range(0..owners.len())];
                Requirement::DecideCoord {
                    node,
                    coord: Coord::new(interval, rng.gen_range(0..sizes.max_coord_offset)),
                    bit: match rng.gen_range(0..3) {
                        0 => None,
                        1 => Some(false),
                        _ => Some(true),
                    },
                }
            }
            _ => {
                let a = sample_node(rng, spec, &sizes);
                let b = loop {
                    let candidate =
                        forcing_core::sampling::sample_node_at(rng, spec, a.level, &sizes);
                    if candidate != a {
                        break candidate;
                    }
                };
                Requirement::SeparatePair { a, b }
            }
        })
        .collect()
}

/// Rebuilds the chain and checks every property the chain promises.
pub fn verify_script(
    spec: &LadderSpec,
    start: &Condition,
    reqs: &[Requirement],
    seed: u64,
) -> Result<(), String> {
    let chain = build_chain(spec, start, reqs, seed)
        .map_err(|e| format!("chain failed to build: {e}"))?;
    let steps = chain.steps();
    ensure(steps.len() == reqs.len() + 1, || {
        "one step per requirement, plus the start".into()
    })?;
    for pair in steps.windows(2) {
        ensure(pair[1].leq(&pair[0]), || "chain is not descending".into())?;
    }

    let final_cond = chain.final_condition();
    for (i, req) in reqs.iter().enumerate() {
        let met = requirement_met(spec, final_cond, req).map_err(|e| e.to_string())?;
        ensure(met, || format!("requirement {i} unmet in the final condition"))?;
    }

    // Cohen sets only grow along the chain
    for n in final_cond.tree().nodes() {
        let mut previous: Option<forcing_core::generic::CohenSet> = None;
        for step in steps {
            if !step.tree().contains(n) {
                continue;
            }
            let current = cohen_set(step, n).map_err(|e| e.to_string())?;
            if let Some(prev) = &previous {
                ensure(
                    prev.ones.is_subset(&current.ones) && prev.zeros.is_subset(&current.zeros),
                    || format!("Cohen set of {n} shrank along the chain"),
                )?;
            }
            previous = Some(current);
        }
    }

    // nodes sharing a branch prefix agree on the coordinates it owns
    let nodes: Vec<NodeId> = final_cond.tree().nodes().collect();
    for (i, &x) in nodes.iter().enumerate() {
        for &y in nodes.iter().skip(i + 1).filter(|m| m.level == x.level) {
            let bx = final_cond.tree().branch(x).expect("in tree");
            let by = final_cond.tree().branch(y).expect("in tree");
            let cx = cohen_set(final_cond, x).map_err(|e| e.to_string())?;
            let cy = cohen_set(final_cond, y).map_err(|e| e.to_string())?;
            for level in 0..=x.level {
                if bx[level as usize] != by[level as usize] {
                    continue;
                }
                let slice = |s: &std::collections::BTreeSet<Coord>| -> Vec<Coord> {
                    s.iter().copied().filter(|c| c.interval == level).collect()
                };
                ensure(
                    slice(&cx.ones) == slice(&cy.ones) && slice(&cx.zeros) == slice(&cy.zeros),
                    || format!("{x} and {y} disagree on their shared level-{level} prefix"),
                )?;
            }
        }
    }

    // the surjection on extracted Cohen sets is the block base
    for n in final_cond.tree().nodes() {
        for delta in spec.admissible_deltas(n.level).expect("level in range") {
            if n.idx >= delta {
                continue;
            }
            let value = surjection_value_at_node(spec, final_cond, n.level, delta, n)
                .map_err(|e| e.to_string())?;
            ensure(value == n.idx.block_base(), || {
                format!("surjection at {n} returned {value}")
            })?;
        }
    }
    Ok(())
}

/// The hand-built unsatisfiable case: two limit-level nodes over a shared
/// chain can never be separated, because limit pieces stay empty.
pub fn verify_unsatisfiable_limit_case() -> Result<(), String> {
    let spec = fixtures::with_limit();
    let root = NodeId::new(0, 0, 0);
    let mid = NodeId::new(1, 0, 0);
    let a = NodeId::new(2, 0, 0);
    let b = NodeId::new(2, 0, 1);
    let tree = validate_relation(
        &spec,
        &forcing_core::tree::TreeRelation {
            nodes: vec![],
            pairs: vec![(root, mid), (root, a), (root, b), (mid, a), (mid, b)],
        },
    )
    .map_err(|e| format!("fixture tree invalid: {e:?}"))?;
    let pieces = tree.nodes().map(|n| (n, CohenPiece::empty())).collect();
    let start =
        validate_condition(&spec, tree, pieces).map_err(|e| format!("fixture invalid: {e:?}"))?;

    let reqs = vec![Requirement::SeparatePair { a, b }];
    match build_chain(&spec, &start, &reqs, 0) {
        Err(err) if matches!(err.source, GenericError::Unsatisfiable(_)) && err.index == 0 => {
            Ok(())
        }
        other => fail(format!(
            "expected Unsatisfiable at index 0, got {other:?}"
        )),
    }
}

/// Confirms an unsatisfiability verdict: replays the prefix and checks the
/// two branches really coincide at every non-limit level.
fn verify_unsatisfiable_claim(
    spec: &LadderSpec,
    reqs: &[Requirement],
    seed: u64,
    err: &forcing_core::generic::ChainError,
) -> Result<(), String> {
    let GenericError::Unsatisfiable(_) = &err.source else {
        return fail(format!("chain failed with a non-unsatisfiable error: {err}"));
    };
    let Requirement::SeparatePair { a, b } = &reqs[err.index] else {
        return fail("only separate-pair requirements may be unsatisfiable");
    };
    let prefix = build_chain(spec, &Condition::empty(), &reqs[..err.index], seed)
        .map_err(|e| format!("prefix no longer builds: {e}"))?;
    let cond = prefix.final_condition();
    if !cond.tree().contains(*a) || !cond.tree().contains(*b) {
        return fail("unsatisfiable verdict for nodes not yet pinned down");
    }
    let ba = cond.tree().branch(*a).expect("in tree");
    let bb = cond.tree().branch(*b).expect("in tree");
    for level in 0..=a.level {
        if ba[level as usize] != bb[level as usize]
            && spec.kind(level) != Some(LevelKind::Limit)
        {
            return fail(format!(
                "claimed unsatisfiable, but branches split at non-limit level {level}"
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// everything
// ---------------------------------------------------------------------------

/// Runs every suite at its documented trial count. Randomized suites run
/// over the given spec; the exhaustive oracle suites are pinned to their
/// calibrated fixture windows.
pub fn run_all(spec: &LadderSpec, seed: u64) -> Vec<RunReport> {
    vec![
        ladder_order_laws(spec, seed, 5_000),
        ladder_spec_exhaustive(seed),
        tree_operation_laws(spec, seed.wrapping_add(1), 2_000),
        tree_axioms_oracle(seed),
        poset_order_laws(spec, seed.wrapping_add(2), 2_000),
        poset_meet_oracle(seed),
        perm_automorphism_laws(spec, seed.wrapping_add(3), 5_000),
        perm_small_subgroup(spec, seed.wrapping_add(4), 2_000),
        lemma1_homogenize(
            "lemma1-homogenize",
            spec,
            seed.wrapping_add(5),
            10_000,
            SampleSizes::default(),
        ),
        surjection_invariance(spec, seed.wrapping_add(6), 2_000),
        cloud_equivalence(spec, seed.wrapping_add(7), 2_000),
        cloud_window_oracle(seed),
        generic_chain(spec, seed.wrapping_add(8), 500),
    ]
}
