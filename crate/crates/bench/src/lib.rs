//! Criterion benchmarks for the grasping pipeline; see `benches/`.
