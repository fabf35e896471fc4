//! Bench-only crate; see benches/pipelines.rs.
