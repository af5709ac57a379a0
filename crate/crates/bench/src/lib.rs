//! Benchmarks only; see benches/solver.rs.
