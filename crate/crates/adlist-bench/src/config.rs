//! CLI definition, presets and validation.
//!
//! Preset parameters (picks/inserts/available per thread, eviction batch and
//! cost) can all be overridden on the command line; unspecified ones fall
//! back to the workload's preset. Exit codes: 0 ok, 1 config error, 2 I/O
//! error.

use clap::{Parser, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Workload {
    Uniform,
    LruWarmup,
    LruReclaim,
    LruReprioritize,
    DummySweep,
}

impl Workload {
    pub fn name(self) -> &'static str {
        match self {
            Workload::Uniform => "uniform",
            Workload::LruWarmup => "lru-warmup",
            Workload::LruReclaim => "lru-reclaim",
            Workload::LruReprioritize => "lru-reprioritize",
            Workload::DummySweep => "dummy-sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImplKind {
    Dlist,
    Adlist,
    AdlistDummy,
}

impl ImplKind {
    pub fn name(self) -> &'static str {
        match self {
            ImplKind::Dlist => "dlist",
            ImplKind::Adlist => "adlist",
            ImplKind::AdlistDummy => "adlist-dummy",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bench",
    about = "List benchmark harness: uniform-access and LRU workloads over \
             dlist, adlist and the dummy-node extended adlist"
)]
pub struct Cli {
    #[arg(long, value_enum)]
    pub workload: Workload,

    #[arg(long = "impl", value_enum)]
    pub impl_kind: ImplKind,

    #[arg(long)]
    pub threads: usize,

    #[arg(long)]
    pub repeats: usize,

    #[arg(long)]
    pub seed: u64,

    /// Uniform workload: elements inserted/removed per batch.
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,

    /// Uniform workload: batches per thread.
    #[arg(long, default_value_t = 1000)]
    pub batches: usize,

    /// LRU workloads: re-prioritize picks per thread (preset default).
    #[arg(long)]
    pub picks: Option<usize>,

    /// LRU workloads: inserts per thread (preset default).
    #[arg(long)]
    pub inserts: Option<usize>,

    /// LRU workloads: initially available elements per thread (preset default).
    #[arg(long)]
    pub available: Option<usize>,

    /// LRU workloads: elements evicted from the tail per eviction.
    #[arg(long, default_value_t = 100)]
    pub evict_k: usize,

    /// LRU workloads: simulated reclaim cost per evicted element.
    #[arg(long, default_value_t = 50)]
    pub evict_cost_us: u64,

    #[arg(long, default_value_t = 64)]
    pub dummy_nodes: usize,

    #[arg(long)]
    pub out: PathBuf,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct Config {
    pub workload: Workload,
    pub impl_kind: ImplKind,
    pub threads: usize,
    pub repeats: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub batches: usize,
    pub picks: usize,
    pub inserts: usize,
    pub available: usize,
    pub evict_k: usize,
    pub evict_cost_us: u64,
    pub dummy_nodes: usize,
    pub out: PathBuf,
}

/// LRU preset values: (picks, inserts, available) per thread. Warmup does no
/// eviction by construction (inserts == available).
fn preset(workload: Workload) -> (usize, usize, usize) {
    match workload {
        Workload::LruWarmup => (100_000, 100_000, 100_000),
        Workload::LruReclaim => (200_000, 20_000, 10_000),
        Workload::LruReprioritize | Workload::DummySweep => (2_000_000, 20_000, 10_000),
        Workload::Uniform => (0, 0, 0),
    }
}

impl Cli {
    pub fn resolve(self) -> Result<Config, String> {
        let (p, i, a) = preset(self.workload);
        let cfg = Config {
            workload: self.workload,
            impl_kind: self.impl_kind,
            threads: self.threads,
            repeats: self.repeats,
            seed: self.seed,
            batch_size: self.batch_size,
            batches: self.batches,
            picks: self.picks.unwrap_or(p),
            inserts: self.inserts.unwrap_or(i),
            available: self.available.unwrap_or(a),
            evict_k: self.evict_k,
            evict_cost_us: self.evict_cost_us,
            dummy_nodes: self.dummy_nodes,
            out: self.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), String> {
        if self.threads == 0 {
            return Err("--threads must be positive".into());
        }
        if self.repeats == 0 {
            return Err("--repeats must be positive".into());
        }
        if self.dummy_nodes == 0 {
            return Err("--dummy-nodes must be positive".into());
        }
        match self.workload {
            Workload::Uniform => {
                if self.batch_size == 0 || self.batches == 0 {
                    return Err("--batch-size and --batches must be positive".into());
                }
                if self.impl_kind == ImplKind::AdlistDummy {
                    return Err("uniform workload supports --impl dlist|adlist".into());
                }
            }
            Workload::LruWarmup | Workload::LruReclaim | Workload::LruReprioritize => {
                if self.picks == 0 || self.inserts == 0 || self.available == 0 {
                    return Err("--picks, --inserts and --available must be positive".into());
                }
                if self.inserts > self.available && self.evict_k == 0 {
                    return Err(
                        "--evict-k must be positive when inserts exceed the available pool"
                            .into(),
                    );
                }
            }
            Workload::DummySweep => {
                if self.impl_kind != ImplKind::AdlistDummy {
                    return Err("dummy-sweep requires --impl adlist-dummy".into());
                }
                if self.picks == 0 || self.inserts == 0 || self.available == 0 {
                    return Err("--picks, --inserts and --available must be positive".into());
                }
            }
        }
        Ok(())
    }

    /// Total element arena size for LRU runs.
    pub fn arena_size(&self) -> usize {
        self.threads * self.available
    }
}
