//! Acceptance suite for the rankscope workspace. The checks live in
//! `tests/acceptance`; run them with `cargo test -p rankscope-validation`.
