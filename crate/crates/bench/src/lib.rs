//! Benchmark-only crate; the benchmarks live in `benches/core_ops.rs`.
//! Run them with `cargo bench -p csgerbe-bench`.
