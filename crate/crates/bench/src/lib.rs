//! Benchmark-only crate; see `benches/engine.rs`.

pub use criterion;
