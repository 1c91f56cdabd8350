//! Criterion benchmarks for casimir-core live under `benches/`.
