//! Acceptance checks for causex live in `tests/acceptance.rs`.
