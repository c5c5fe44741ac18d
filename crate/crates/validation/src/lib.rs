//! Holds the workspace acceptance suite in `tests/acceptance.rs`. The crate
//! has no library code of its own.
