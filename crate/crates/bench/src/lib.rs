//! Benchmarks for the `neighsel` solver live in `benches/`.
