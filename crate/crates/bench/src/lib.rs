//! Criterion benchmarks for `convgeom-core`; see `benches/`.
