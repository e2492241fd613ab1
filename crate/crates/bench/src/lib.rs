//! Criterion benchmarks for the kernels live under `benches/`.
