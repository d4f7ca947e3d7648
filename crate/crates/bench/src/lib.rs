//! Criterion benchmarks for the twosphere kernels; see `benches/`.
