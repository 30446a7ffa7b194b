//! Test-only crate. The acceptance suite lives in `tests/acceptance.rs` and
//! runs with `cargo test -p qtrack-verify`.
