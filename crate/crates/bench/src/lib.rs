//! Criterion benchmarks for the optimizer step, the chain gradient and the OLO construction live in `benches/`.
