//! The acceptance suite: one test per acceptance criterion, each printing a
//! pass/fail line. Run with `cargo test -p forcing-lab --test acceptance`
//! (add `-- --nocapture` to see the lines as they complete).

use std::sync::OnceLock;
use std::time::Instant;

use forcing_core::fixtures;
use forcing_core::generic::Requirement;
use forcing_core::poset::Condition;
use forcing_core::sampling::SampleSizes;
use forcing_lab::report::RunReport;
use forcing_lab::suites;

const SEED: u64 = 42;

/// Full documented-count suite runs, shared by the oracle criteria and the
/// determinism criterion.
fn first_run() -> &'static Vec<RunReport> {
    static RUN: OnceLock<Vec<RunReport>> = OnceLock::new();
    RUN.get_or_init(|| suites::run_all(&fixtures::three_level(), SEED))
}

fn second_run() -> &'static Vec<RunReport> {
    static RUN: OnceLock<Vec<RunReport>> = OnceLock::new();
    RUN.get_or_init(|| suites::run_all(&fixtures::three_level(), SEED))
}

fn report_named<'a>(reports: &'a [RunReport], name: &str) -> &'a RunReport {
    reports
        .iter()
        .find(|r| r.command == name)
        .unwrap_or_else(|| panic!("suite {name} missing from the run"))
}

fn conclude(criterion: &str, outcome: Result<String, String>) {
    match outcome {
        Ok(detail) => println!("[PASS] {criterion}: {detail}"),
        Err(detail) => {
            println!("[FAIL] {criterion}: {detail}");
            panic!("acceptance criterion failed: {criterion}: {detail}");
        }
    }
}

#[test]
fn criterion_lemma1_suite() {
    let sizes = SampleSizes {
        max_nodes: 12,
        max_piece_bits: 8,
        max_offset: 6,
        max_coord_offset: 6,
    };
    let start = Instant::now();
    let three = suites::lemma1_homogenize(
        "lemma1-acceptance-3level",
        &fixtures::three_level(),
        SEED,
        5_000,
        sizes,
    );
    let limit = suites::lemma1_homogenize(
        "lemma1-acceptance-limit",
        &fixtures::with_limit(),
        SEED + 1,
        5_000,
        sizes,
    );
    let elapsed = start.elapsed();
    let outcome = if !three.all_passed() {
        Err(format!(
            "three-level run failed: {:?}",
            three.counterexample
        ))
    } else if !limit.all_passed() {
        Err(format!("limit run failed: {:?}", limit.counterexample))
    } else if elapsed.as_secs() >= 60 {
        Err(format!("too slow: {elapsed:?} (budget 60 s)"))
    } else {
        Ok(format!(
            "10000/10000 homogenizations small, fixing, compatible in {elapsed:?}"
        ))
    };
    conclude("lemma-1 suite", outcome);
}

#[test]
fn criterion_tree_oracle_equivalence() {
    let report = report_named(first_run(), "tree-axioms-oracle");
    let outcome = if report.all_passed() {
        Ok(format!(
            "{} relations, exact agreement with the five-axiom oracle",
            report.attempted
        ))
    } else {
        Err(format!(
            "{} disagreements, first: {:?}",
            report.attempted - report.passed,
            report.counterexample
        ))
    };
    conclude("tree validation oracle equivalence", outcome);
}

#[test]
fn criterion_poset_meet_oracle() {
    let report = report_named(first_run(), "poset-meet-oracle");
    let outcome = if report.all_passed() {
        Ok(format!(
            "{} condition pairs, meets match brute-force greatest lower bounds",
            report.attempted
        ))
    } else {
        Err(format!(
            "{} disagreements, first: {:?}",
            report.attempted - report.passed,
            report.counterexample
        ))
    };
    conclude("poset meet oracle", outcome);
}

#[test]
fn criterion_automorphism_laws() {
    let report = suites::perm_automorphism_laws(&fixtures::three_level(), SEED, 5_000);
    let outcome = if report.all_passed() {
        Ok("5000/5000 trials preserve order, compatibility, and composition".to_string())
    } else {
        Err(format!("first failure: {:?}", report.counterexample))
    };
    conclude("automorphism laws", outcome);
}

#[test]
fn criterion_surjection_invariance() {
    let report = suites::surjection_invariance(&fixtures::three_level(), SEED, 2_000);
    let outcome = if report.all_passed() && report.attempted == 4_000 {
        Ok("2000 small permutations invariant, 2000 cross-block permutations flagged".to_string())
    } else {
        Err(format!(
            "{}/{} passed, first failure: {:?}",
            report.passed, report.attempted, report.counterexample
        ))
    };
    conclude("surjection invariance", outcome);
}

#[test]
fn criterion_cloud_oracle() {
    let report = report_named(first_run(), "cloud-window-oracle");
    let outcome = if !report.all_passed() {
        Err(format!(
            "{} disagreements, first: {:?}",
            report.attempted - report.passed,
            report.counterexample
        ))
    } else if report.elapsed.as_secs() >= 10 {
        Err(format!("too slow: {:?} (budget 10 s)", report.elapsed))
    } else {
        Ok(format!(
            "{} sigma pairs agree with exhaustive window tables in {:?}",
            report.attempted, report.elapsed
        ))
    };
    conclude("cloud equality oracle", outcome);
}

#[test]
fn criterion_generic_simulation() {
    let reqs: Vec<Requirement> = suites::demo_requirements();
    let outcome = (|| {
        if reqs.len() != 20 {
            return Err(format!("script has {} requirements, wanted 20", reqs.len()));
        }
        suites::verify_script(&fixtures::three_level(), &Condition::empty(), &reqs, SEED)?;
        suites::verify_unsatisfiable_limit_case()?;
        Ok("20-requirement chain met and verified; shared-chain separation unsatisfiable"
            .to_string())
    })();
    conclude("generic simulation", outcome);
}

#[test]
fn criterion_report_determinism() {
    let first = serde_json::to_string(first_run()).expect("reports serialize");
    let second = serde_json::to_string(second_run()).expect("reports serialize");
    let outcome = if first == second {
        Ok(format!(
            "two full suite runs over seed {SEED} produced byte-identical JSON ({} bytes)",
            first.len()
        ))
    } else {
        Err("suite reports differ between repeated runs".to_string())
    };
    conclude("report determinism", outcome);
}
