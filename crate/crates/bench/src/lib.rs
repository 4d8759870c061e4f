//! Benchmarks for the cubenet planner and simulator.
