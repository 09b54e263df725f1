//! Benchmarks only; see `benches/stages.rs`.
