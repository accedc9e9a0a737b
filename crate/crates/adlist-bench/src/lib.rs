//! Benchmark harness for the adlist crate: uniform-access and LRU workloads
//! over three list implementations, with repeat statistics and CSV output.

pub mod config;
pub mod csvout;
pub mod dlist;
pub mod stats;
pub mod workload;
