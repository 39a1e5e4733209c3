//! Criterion benchmarks for the pipeline stages live in `benches/`.
