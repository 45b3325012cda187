//! Run reports: one summary per command or suite, with a JSON form that is
//! byte-identical across repeated runs of the same seed.

use std::time::Duration;

use serde::Serialize;

/// Outcome of a batch of trials.
///
/// `duration_ms` is pinned to zero in the serialized report so that equal
/// (command, seed) runs produce identical bytes; wall-clock timing is
/// carried separately for human-readable output.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub attempted: u64,
    pub passed: u64,
    pub duration_ms: u64,
    pub counterexample: Option<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RunReport {
    pub fn new(
        command: impl Into<String>,
        seed: u64,
        attempted: u64,
        passed: u64,
        counterexample: Option<String>,
        elapsed: Duration,
    ) -> Self {
        assert!(passed <= attempted, "passed must not exceed attempted");
        assert_eq!(
            counterexample.is_some(),
            passed < attempted,
            "counterexample present iff some trial failed"
        );
        RunReport {
            command: command.into(),
            seed,
            attempted,
            passed,
            duration_ms: 0,
            counterexample,
            elapsed,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.attempted
    }

    /// One human-readable line; wall-clock time lives here, not in the JSON.
    pub fn human_line(&self) -> String {
        let status = if self.all_passed() { "pass" } else { "FAIL" };
        format!(
            "[{status}] {}: {}/{} trials (seed {}, {:.1} ms)",
            self.command,
            self.passed,
            self.attempted,
            self.seed,
            self.elapsed.as_secs_f64() * 1e3,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_has_the_fixed_keys_and_no_timing() {
        let report = RunReport::new("demo", 3, 10, 10, None, Duration::from_millis(123));
        assert_eq!(
            report.to_json(),
            r#"{"command":"demo","seed":3,"attempted":10,"passed":10,"duration_ms":0,"counterexample":null}"#
        );
        assert!(report.human_line().starts_with("[pass] demo: 10/10"));
    }

    #[test]
    #[should_panic(expected = "counterexample")]
    fn failed_trials_require_a_counterexample() {
        let _ = RunReport::new("demo", 3, 10, 9, None, Duration::ZERO);
    }
}
