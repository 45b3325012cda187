//! Verification harness for the forcing combinatorics library: run reports,
//! independently written brute-force oracles, and the property suites the
//! CLI and the acceptance tests both run.

pub mod oracles;
pub mod report;
pub mod suites;
