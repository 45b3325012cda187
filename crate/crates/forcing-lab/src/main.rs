//! The `forcing-lab` command line: validate artifact files, fuzz the
//! homogenization lemma, replay generic-filter scripts, and run the full
//! property suite.
//!
//! Exit codes: 0 success, 1 semantic failure or counterexample, 2 usage or
//! parse errors. Machine-readable JSON goes to stdout (and `--report`
//! files); progress and timing go to stderr, so stdout is byte-identical
//! across runs with equal flags and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use forcing_core::generic::{
    build_chain, cohen_set, requirement_met, surjection_value_at_node, Requirement,
};
use forcing_core::ladder::{LadderSpec, LevelKind, NodeId};
use forcing_core::perm::RawPerm;
use forcing_core::poset::RawCondition;
use forcing_core::sampling::SampleSizes;
use forcing_core::tree::{validate_relation, TreeRelation};
use forcing_core::Condition;
use forcing_lab::report::RunReport;
use forcing_lab::suites;

#[derive(Parser)]
#[command(name = "forcing-lab", version, about = "Workbench for tree-indexed Cohen forcing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a spec, tree, condition, or permutation file (kind
    /// auto-detected from its top-level keys)
    Validate {
        /// File to validate
        path: PathBuf,
        /// Write the (valid) tree as a DOT graph, edges child -> parent
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Ladder spec to validate against; without it only structural
        /// checks run (node-space membership and level kinds are unknown)
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Fuzz the homogenization lemma with random hypothesis-satisfying
    /// triples
    FuzzLemma1 {
        /// Ladder spec file
        #[arg(long)]
        spec: PathBuf,
        /// Number of random triples
        #[arg(long)]
        trials: u64,
        /// RNG seed
        #[arg(long)]
        seed: u64,
        /// Cap on tree size per sampled condition
        #[arg(long, default_value_t = 12)]
        max_nodes: usize,
        /// Also write the JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build a chain meeting a requirement script, then print every Cohen
    /// set and surjection value of the final condition
    DemoGeneric {
        /// Ladder spec file
        #[arg(long)]
        spec: PathBuf,
        /// Requirement script (JSON array)
        #[arg(long)]
        reqs: PathBuf,
        /// RNG seed
        #[arg(long)]
        seed: u64,
        /// Condition file to start from (default: the empty condition)
        #[arg(long)]
        start: Option<PathBuf>,
        /// Also write the JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run every property suite at its documented trial count
    Suite {
        /// Ladder spec file
        #[arg(long)]
        spec: PathBuf,
        /// RNG seed
        #[arg(long)]
        seed: u64,
        /// Also write the JSON report array here
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(code)` for completed commands; `Err` for usage and parse problems,
/// which exit 2.
fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Validate { path, dot, spec } => cmd_validate(&path, dot.as_deref(), spec.as_deref()),
        Command::FuzzLemma1 {
            spec,
            trials,
            seed,
            max_nodes,
            report,
        } => cmd_fuzz_lemma1(&spec, trials, seed, max_nodes, report.as_deref()),
        Command::DemoGeneric {
            spec,
            reqs,
            seed,
            start,
            report,
        } => cmd_demo_generic(&spec, &reqs, seed, start.as_deref(), report.as_deref()),
        Command::Suite { spec, seed, report } => cmd_suite(&spec, seed, report.as_deref()),
    }
}

fn read_json(path: &Path) -> Result<serde_json::Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Re-parses a JSON value into a concrete type, reporting the JSON path of
/// the first offending element.
fn parse_value<T: serde::de::DeserializeOwned>(
    value: serde_json::Value,
    what: &str,
) -> Result<T, String> {
    let deserializer = value;
    serde_path_to_error::deserialize(deserializer)
        .map_err(|e| format!("{what}: at {}: {}", e.path(), e.inner()))
}

fn load_spec(path: &Path) -> Result<LadderSpec, String> {
    parse_value(read_json(path)?, "spec file")
}

fn write_report_file(path: Option<&Path>, json: &str) -> Result<(), String> {
    if let Some(path) = path {
        fs::write(path, format!("{json}\n")).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

enum FileKind {
    Spec(forcing_core::ladder::RawLadderSpec),
    Tree(TreeRelation),
    Condition(RawCondition),
    Perm(RawPerm),
}

fn detect_kind(value: &serde_json::Value) -> Option<&'static str> {
    let obj = value.as_object()?;
    if obj.contains_key("ladder") && obj.contains_key("blocks") {
        Some("spec")
    } else if obj.contains_key("nodes") && obj.contains_key("pairs") {
        Some("tree")
    } else if obj.contains_key("tree") && obj.contains_key("pieces") {
        Some("condition")
    } else if obj.contains_key("moves") {
        Some("perm")
    } else {
        None
    }
}

/// A spec that accepts every node mentioned by the artifact, for running
/// the structural checks when no spec file is given. All levels above 0
/// are presumed successors, so level-kind rules are not exercised.
fn permissive_spec(nodes: impl Iterator<Item = NodeId>) -> LadderSpec {
    let mut max_level = 0u32;
    let mut max_block = 0u32;
    for n in nodes {
        max_level = max_level.max(n.level);
        max_block = max_block.max(n.idx.block);
    }
    let mut kinds = vec![LevelKind::First];
    kinds.extend(std::iter::repeat_n(LevelKind::Successor, max_level as usize));
    LadderSpec::validate(kinds, vec![max_block + 1; max_level as usize + 1])
        .expect("constant block counts are monotone")
}

fn cmd_validate(path: &Path, dot: Option<&Path>, spec_path: Option<&Path>) -> Result<u8, String> {
    let value = read_json(path)?;
    let kind = detect_kind(&value)
        .ok_or_else(|| format!("{}: unrecognized top-level keys", path.display()))?;
    let given_spec = spec_path.map(load_spec).transpose()?;

    let parsed = match kind {
        "spec" => FileKind::Spec(parse_value(value, "spec file")?),
        "tree" => FileKind::Tree(parse_value(value, "tree file")?),
        "condition" => FileKind::Condition(parse_value(value, "condition file")?),
        "perm" => FileKind::Perm(parse_value(value, "permutation file")?),
        _ => unreachable!(),
    };

    if dot.is_some() && !matches!(parsed, FileKind::Tree(_) | FileKind::Condition(_)) {
        return Err("--dot needs a tree or condition file".into());
    }

    let diagnostics: Vec<String> = match &parsed {
        FileKind::Spec(raw) => {
            match LadderSpec::validate(raw.ladder.clone(), raw.blocks.clone()) {
                Ok(_) => vec![],
                Err(errors) => errors.iter().map(|e| e.to_string()).collect(),
            }
        }
        FileKind::Tree(raw) => {
            let spec = given_spec.clone().unwrap_or_else(|| {
                permissive_spec(
                    raw.nodes
                        .iter()
                        .copied()
                        .chain(raw.pairs.iter().flat_map(|&(a, b)| [a, b])),
                )
            });
            match validate_relation(&spec, raw) {
                Ok(tree) => {
                    if let Some(out) = dot {
                        fs::write(out, tree.to_dot())
                            .map_err(|e| format!("{}: {e}", out.display()))?;
                    }
                    vec![]
                }
                Err(errors) => errors.iter().map(|e| e.to_string()).collect(),
            }
        }
        FileKind::Condition(raw) => {
            let spec = given_spec.clone().unwrap_or_else(|| {
                permissive_spec(
                    raw.tree
                        .nodes
                        .iter()
                        .copied()
                        .chain(raw.tree.pairs.iter().flat_map(|&(a, b)| [a, b]))
                        .chain(raw.pieces.iter().map(|entry| entry.node)),
                )
            });
            match raw.validate(&spec) {
                Ok(cond) => {
                    if let Some(out) = dot {
                        fs::write(out, cond.tree().to_dot())
                            .map_err(|e| format!("{}: {e}", out.display()))?;
                    }
                    vec![]
                }
                Err(err) => err.to_string().lines().map(|s| s.to_string()).collect(),
            }
        }
        FileKind::Perm(raw) => {
            let spec = given_spec.clone().unwrap_or_else(|| {
                permissive_spec(raw.moves.iter().flat_map(|&(a, b)| [a, b]))
            });
            let moves: BTreeMap<NodeId, NodeId> = raw.moves.iter().copied().collect();
            if moves.len() != raw.moves.len() {
                vec!["NotInjective: a source node is listed twice".to_string()]
            } else {
                match forcing_core::perm::validate_perm(&spec, moves) {
                    Ok(_) => vec![],
                    Err(errors) => errors.iter().map(|e| e.to_string()).collect(),
                }
            }
        }
    };

    if diagnostics.is_empty() {
        println!("OK");
        Ok(0)
    } else {
        for line in diagnostics {
            println!("{line}");
        }
        Ok(1)
    }
}

// ---------------------------------------------------------------------------
// fuzz-lemma1
// ---------------------------------------------------------------------------

fn cmd_fuzz_lemma1(
    spec_path: &Path,
    trials: u64,
    seed: u64,
    max_nodes: usize,
    report_path: Option<&Path>,
) -> Result<u8, String> {
    if trials == 0 {
        return Err("--trials must be positive".into());
    }
    if max_nodes == 0 {
        return Err("--max-nodes must be positive".into());
    }
    let spec = load_spec(spec_path)?;
    let sizes = SampleSizes {
        max_nodes,
        ..SampleSizes::default()
    };
    let report = suites::lemma1_homogenize("fuzz-lemma1", &spec, seed, trials, sizes);
    finish_with_report(report, report_path)
}

fn finish_with_report(report: RunReport, report_path: Option<&Path>) -> Result<u8, String> {
    eprintln!("{}", report.human_line());
    if let Some(counterexample) = &report.counterexample {
        eprintln!("counterexample: {counterexample}");
    }
    let json = report.to_json();
    println!("{json}");
    write_report_file(report_path, &json)?;
    Ok(u8::from(!report.all_passed()))
}

// ---------------------------------------------------------------------------
// demo-generic
// ---------------------------------------------------------------------------

fn cmd_demo_generic(
    spec_path: &Path,
    reqs_path: &Path,
    seed: u64,
    start_path: Option<&Path>,
    report_path: Option<&Path>,
) -> Result<u8, String> {
    let spec = load_spec(spec_path)?;
    let reqs: Vec<Requirement> = parse_value(read_json(reqs_path)?, "requirement script")?;
    let start_condition = match start_path {
        None => Condition::empty(),
        Some(path) => {
            let raw: RawCondition = parse_value(read_json(path)?, "start condition")?;
            raw.validate(&spec)
                .map_err(|e| format!("{}: {e}", path.display()))?
        }
    };

    let start = std::time::Instant::now();
    let chain = match build_chain(&spec, &start_condition, &reqs, seed) {
        Ok(chain) => chain,
        Err(err) => {
            println!("requirement {} failed: {}", err.index, err.source);
            return Ok(1);
        }
    };

    for (i, step) in chain.steps().iter().enumerate() {
        let bits: usize = step.pieces().map(|(_, piece)| piece.len()).sum();
        match i {
            0 => println!("step 0: start ({} nodes, {} bits)", step.tree().len(), bits),
            _ => println!(
                "step {i}: met {} ({} nodes, {} bits)",
                serde_json::to_string(&reqs[i - 1]).unwrap_or_default(),
                step.tree().len(),
                bits
            ),
        }
    }

    let final_cond = chain.final_condition();
    let mut met_count = 0u64;
    let mut first_unmet = None;
    for (i, req) in reqs.iter().enumerate() {
        if requirement_met(&spec, final_cond, req).map_err(|e| e.to_string())? {
            met_count += 1;
        } else if first_unmet.is_none() {
            first_unmet = Some(format!("requirement {i} not met in the final condition"));
        }
    }
    println!("verified: {met_count}/{} requirements hold in the final condition", reqs.len());

    let mut node_payloads = Vec::new();
    for n in final_cond.tree().nodes() {
        let cs = cohen_set(final_cond, n).map_err(|e| e.to_string())?;
        let ones: Vec<_> = cs.ones.iter().copied().collect();
        let zeros: Vec<_> = cs.zeros.iter().copied().collect();
        println!(
            "node {n}: ones {} zeros {}",
            serde_json::to_string(&ones).unwrap_or_default(),
            serde_json::to_string(&zeros).unwrap_or_default()
        );
        let mut surjections = Vec::new();
        for delta in spec.admissible_deltas(n.level).map_err(|e| e.to_string())? {
            if n.idx >= delta {
                continue;
            }
            let value = surjection_value_at_node(&spec, final_cond, n.level, delta, n)
                .map_err(|e| e.to_string())?;
            println!("  surjection(level {}, delta {delta}) -> {value}", n.level);
            surjections.push(json!({"delta": delta, "value": value}));
        }
        node_payloads.push(json!({
            "node": n,
            "ones": ones,
            "zeros": zeros,
            "surjections": surjections,
        }));
    }

    let report = RunReport::new(
        "demo-generic",
        seed,
        reqs.len() as u64,
        met_count,
        first_unmet,
        start.elapsed(),
    );
    eprintln!("{}", report.human_line());
    let payload = json!({
        "command": report.command,
        "seed": report.seed,
        "attempted": report.attempted,
        "passed": report.passed,
        "duration_ms": report.duration_ms,
        "counterexample": report.counterexample,
        "steps": chain.steps(),
        "nodes": node_payloads,
    });
    let json = serde_json::to_string(&payload).expect("payload serializes");
    println!("{json}");
    write_report_file(report_path, &json)?;
    Ok(u8::from(!report.all_passed()))
}

// ---------------------------------------------------------------------------
// suite
// ---------------------------------------------------------------------------

fn cmd_suite(spec_path: &Path, seed: u64, report_path: Option<&Path>) -> Result<u8, String> {
    let spec = load_spec(spec_path)?;
    let reports = suites::run_all(&spec, seed);
    let mut all_passed = true;
    for report in &reports {
        eprintln!("{}", report.human_line());
        if let Some(counterexample) = &report.counterexample {
            eprintln!("counterexample: {counterexample}");
        }
        all_passed &= report.all_passed();
    }
    let json = serde_json::to_string(&reports).expect("reports serialize");
    println!("{json}");
    write_report_file(report_path, &json)?;
    Ok(u8::from(!all_passed))
}
