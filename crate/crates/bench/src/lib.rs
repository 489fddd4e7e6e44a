//! Criterion benchmarks for the spike-count pipeline live in `benches/`.
