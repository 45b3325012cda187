//! Small ladder specs used across tests, suites, and examples.

use crate::ladder::{LadderSpec, LevelKind};

/// Three levels `[first, succ, succ]` with block counts `[2, 2, 3]`.
pub fn three_level() -> LadderSpec {
    LadderSpec::validate(
        vec![LevelKind::First, LevelKind::Successor, LevelKind::Successor],
        vec![2, 2, 3],
    )
    .expect("fixture is valid")
}

/// Four levels `[first, succ, limit, succ]` with block counts `[2, 2, 2, 3]`;
/// the limit level exercises the empty-piece rule.
pub fn with_limit() -> LadderSpec {
    LadderSpec::validate(
        vec![
            LevelKind::First,
            LevelKind::Successor,
            LevelKind::Limit,
            LevelKind::Successor,
        ],
        vec![2, 2, 2, 3],
    )
    .expect("fixture is valid")
}
