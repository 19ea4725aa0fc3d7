//! Test-only crate: the acceptance suite is `tests/acceptance.rs`.
