//! Dummy-node sweep: the reprioritize mix at fixed thread count across
//! dummy_count in {1, 2, 4, 8, 16, 32, 64}, plus the c/log2(n) fit used to
//! check the shape of the curve.

use crate::config::{Config, Workload};
use crate::csvout::Group;
use crate::workload::lru;

pub const DUMMY_COUNTS: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

/// Runs the sweep; one [`Group`] per dummy count, in ascending order.
pub fn run(cfg: &Config) -> Vec<Group> {
    DUMMY_COUNTS
        .iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.dummy_nodes = n;
            c.workload = Workload::LruReprioritize;
            let seconds = (0..cfg.repeats).map(|r| lru::run_once(&c, r)).collect();
            Group {
                workload: cfg.workload.name().into(),
                impl_name: cfg.impl_kind.name().into(),
                threads: cfg.threads,
                dummy_count: n,
                seconds,
            }
        })
        .collect()
}

/// Least-squares scale for the model m(n) = c / log2(n), fitted over the
/// points with n >= 2: c = sum(m_i x_i) / sum(x_i^2) with x_i = 1/log2(n_i).
pub fn fit_scale(points: &[(usize, f64)]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(n, m) in points {
        assert!(n >= 2, "fit only defined for n >= 2");
        let x = 1.0 / (n as f64).log2();
        num += m * x;
        den += x * x;
    }
    assert!(den > 0.0);
    num / den
}

/// Model prediction at n (n >= 2).
pub fn predict(c: f64, n: usize) -> f64 {
    c / (n as f64).log2()
}
