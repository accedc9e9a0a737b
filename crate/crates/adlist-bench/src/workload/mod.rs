//! Workload drivers and dispatch.

pub mod lru;
pub mod sweep;
pub mod uniform;

use crate::config::{Config, Workload};
use crate::csvout::Group;

/// Runs the configured workload for all repeats and returns the result
/// groups in emission order.
pub fn run_config(cfg: &Config) -> Vec<Group> {
    match cfg.workload {
        Workload::DummySweep => sweep::run(cfg),
        Workload::Uniform => vec![collect(cfg, |r| uniform::run_once(cfg, r))],
        Workload::LruWarmup | Workload::LruReclaim | Workload::LruReprioritize => {
            vec![collect(cfg, |r| lru::run_once(cfg, r))]
        }
    }
}

fn collect(cfg: &Config, mut once: impl FnMut(usize) -> f64) -> Group {
    Group {
        workload: cfg.workload.name().into(),
        impl_name: cfg.impl_kind.name().into(),
        threads: cfg.threads,
        // dummy_count is only meaningful for the extended list
        dummy_count: match cfg.impl_kind {
            crate::config::ImplKind::AdlistDummy => cfg.dummy_nodes,
            _ => 0,
        },
        seconds: (0..cfg.repeats).map(&mut once).collect(),
    }
}
