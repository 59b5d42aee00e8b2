//! Criterion benchmarks for `eig-core`; see `benches/`.
