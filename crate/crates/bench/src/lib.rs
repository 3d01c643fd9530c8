//! Criterion benchmarks for the basket-trial engine; see `benches/`.
