//! Criterion benchmarks for the transforms, exact coherence, and solvers.
//! Run with `cargo bench -p localcoh-bench`.
