//! Python bindings: thin wrappers around the concurrent list, the dummy-node
//! extended list and the mutex baseline, plus a benchmark runner.
//!
//! Values are unsigned 64-bit integers; each list owns the nodes it created
//! and frees them on removal or drop.

use adlist::lru::{BaselineList, ExtendedList};
use adlist::{AdList, AdlNode, Direction};
use adlist_bench::config::{Config, ImplKind, Workload};
use adlist_bench::workload::run_config;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ptr::NonNull;
use std::sync::Mutex;

#[repr(C)]
struct Elem {
    node: AdlNode,
    val: u64,
}

fn new_elem(val: u64) -> NonNull<AdlNode> {
    let e = Box::leak(Box::new(Elem {
        node: AdlNode::new(),
        val,
    }));
    NonNull::from(&mut e.node)
}

fn val_of(n: NonNull<AdlNode>) -> u64 {
    unsafe { (*n.as_ptr().cast::<Elem>()).val }
}

unsafe fn reclaim(n: NonNull<AdlNode>) {
    drop(Box::from_raw(n.as_ptr().cast::<Elem>()));
}

fn collect(list: &AdList, dir: Direction) -> Vec<u64> {
    let mut out = Vec::new();
    let mut it = list.iter(dir);
    while let Some(n) = it.next_node() {
        out.push(val_of(n));
    }
    out
}

fn drain(list: &AdList) {
    while let Some(n) = list.pop_front() {
        unsafe { reclaim(n) };
    }
}

/// Concurrent doubly-linked list of integers.
#[pyclass(name = "List")]
struct PyList_ {
    inner: AdList,
}

#[pymethods]
impl PyList_ {
    #[new]
    fn new() -> Self {
        PyList_ {
            inner: AdList::new(),
        }
    }

    fn push_front(&self, py: Python<'_>, val: u64) {
        py.allow_threads(|| {
            let n = new_elem(val);
            unsafe {
                self.inner.push_front(n);
                n.as_ref().unpin();
            }
        })
    }

    fn push_back(&self, py: Python<'_>, val: u64) {
        py.allow_threads(|| {
            let n = new_elem(val);
            unsafe {
                self.inner.push_back(n);
                n.as_ref().unpin();
            }
        })
    }

    fn pop_front(&self, py: Python<'_>) -> Option<u64> {
        py.allow_threads(|| {
            self.inner.pop_front().map(|n| {
                let v = val_of(n);
                unsafe { reclaim(n) };
                v
            })
        })
    }

    fn pop_back(&self, py: Python<'_>) -> Option<u64> {
        py.allow_threads(|| {
            self.inner.pop_back().map(|n| {
                let v = val_of(n);
                unsafe { reclaim(n) };
                v
            })
        })
    }

    /// Removes the first occurrence of `val`; returns whether it was found.
    fn remove(&self, py: Python<'_>, val: u64) -> bool {
        py.allow_threads(|| {
            let mut it = self.inner.iter(Direction::Forward);
            while let Some(n) = it.next_node() {
                if val_of(n) == val {
                    if let Some(dead) = it.pop_current() {
                        unsafe { reclaim(dead) };
                        return true;
                    }
                    // lost the race to a concurrent delete; keep scanning
                }
            }
            false
        })
    }

    fn to_list(&self, py: Python<'_>) -> Vec<u64> {
        py.allow_threads(|| collect(&self.inner, Direction::Forward))
    }

    fn to_list_reversed(&self, py: Python<'_>) -> Vec<u64> {
        py.allow_threads(|| collect(&self.inner, Direction::Backward))
    }

    fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    fn __len__(&self, py: Python<'_>) -> usize {
        self.to_list(py).len()
    }
}

impl Drop for PyList_ {
    fn drop(&mut self) {
        drain(&self.inner);
    }
}

/// Extended list with permanently hidden dummy anchor nodes at the head.
#[pyclass(name = "ExtendedList")]
struct PyExtList {
    inner: ExtendedList,
    rng: Mutex<ChaCha8Rng>,
}

#[pymethods]
impl PyExtList {
    #[new]
    #[pyo3(signature = (dummy_count, seed=0))]
    fn new(dummy_count: usize, seed: u64) -> PyResult<Self> {
        if dummy_count == 0 {
            return Err(PyValueError::new_err("dummy_count must be positive"));
        }
        Ok(PyExtList {
            inner: ExtendedList::new(dummy_count),
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        })
    }

    #[getter]
    fn dummy_count(&self) -> usize {
        self.inner.dummy_count()
    }

    /// Insert behind a randomly chosen dummy anchor.
    fn insert_at_head(&self, py: Python<'_>, val: u64) {
        py.allow_threads(|| {
            let n = new_elem(val);
            let mut rng = self.rng.lock().unwrap();
            unsafe {
                self.inner.insert_at_head(n, |k| rng.gen_range(0..k));
                n.as_ref().unpin();
            }
        })
    }

    fn pop_back(&self, py: Python<'_>) -> Option<u64> {
        py.allow_threads(|| {
            self.inner.pop_back().map(|n| {
                let v = val_of(n);
                unsafe { reclaim(n) };
                v
            })
        })
    }

    fn rebalance(&self, py: Python<'_>) {
        py.allow_threads(|| self.inner.rebalance())
    }

    fn to_list(&self, py: Python<'_>) -> Vec<u64> {
        py.allow_threads(|| collect(self.inner.base(), Direction::Forward))
    }

    fn __len__(&self, py: Python<'_>) -> usize {
        self.to_list(py).len()
    }
}

impl Drop for PyExtList {
    fn drop(&mut self) {
        drain(self.inner.base());
    }
}

/// Reference list under one global mutex.
#[pyclass(name = "BaselineList")]
struct PyBaseline {
    inner: BaselineList<u64>,
}

#[pymethods]
impl PyBaseline {
    #[new]
    fn new() -> Self {
        PyBaseline {
            inner: BaselineList::new(),
        }
    }

    fn push_front(&self, val: u64) {
        self.inner.push_front(val)
    }

    fn push_back(&self, val: u64) {
        self.inner.push_back(val)
    }

    fn pop_front(&self) -> Option<u64> {
        self.inner.pop_front()
    }

    fn pop_back(&self) -> Option<u64> {
        self.inner.pop_back()
    }

    fn remove(&self, val: u64) -> bool {
        self.inner.remove(&val)
    }

    fn move_to_head(&self, val: u64) -> bool {
        self.inner.move_to_head(&val)
    }

    fn to_list(&self) -> Vec<u64> {
        self.inner.to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn parse_workload(s: &str) -> PyResult<Workload> {
    Ok(match s {
        "uniform" => Workload::Uniform,
        "lru-warmup" => Workload::LruWarmup,
        "lru-reclaim" => Workload::LruReclaim,
        "lru-reprioritize" => Workload::LruReprioritize,
        "dummy-sweep" => Workload::DummySweep,
        _ => return Err(PyValueError::new_err(format!("unknown workload {s:?}"))),
    })
}

fn parse_impl(s: &str) -> PyResult<ImplKind> {
    Ok(match s {
        "dlist" => ImplKind::Dlist,
        "adlist" => ImplKind::Adlist,
        "adlist-dummy" => ImplKind::AdlistDummy,
        _ => return Err(PyValueError::new_err(format!("unknown impl {s:?}"))),
    })
}

/// Runs a benchmark configuration and returns one dict per result group.
#[pyfunction]
#[pyo3(signature = (workload, impl_kind, threads, repeats, seed,
                    picks=None, inserts=None, available=None,
                    batch_size=128, batches=1000,
                    evict_k=100, evict_cost_us=50, dummy_nodes=64))]
#[allow(clippy::too_many_arguments)]
fn run_bench<'py>(
    py: Python<'py>,
    workload: &str,
    impl_kind: &str,
    threads: usize,
    repeats: usize,
    seed: u64,
    picks: Option<usize>,
    inserts: Option<usize>,
    available: Option<usize>,
    batch_size: usize,
    batches: usize,
    evict_k: usize,
    evict_cost_us: u64,
    dummy_nodes: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let workload = parse_workload(workload)?;
    let (dp, di, da) = match workload {
        Workload::LruWarmup => (100_000, 100_000, 100_000),
        Workload::LruReclaim => (200_000, 20_000, 10_000),
        Workload::LruReprioritize | Workload::DummySweep => (2_000_000, 20_000, 10_000),
        Workload::Uniform => (0, 0, 0),
    };
    let cfg = Config {
        workload,
        impl_kind: parse_impl(impl_kind)?,
        threads,
        repeats,
        seed,
        batch_size,
        batches,
        picks: picks.unwrap_or(dp),
        inserts: inserts.unwrap_or(di),
        available: available.unwrap_or(da),
        evict_k,
        evict_cost_us,
        dummy_nodes,
        out: std::path::PathBuf::new(),
    };
    cfg.validate().map_err(PyValueError::new_err)?;
    let groups = py.allow_threads(|| run_config(&cfg));
    groups
        .into_iter()
        .map(|g| {
            let s = g.summary();
            let d = PyDict::new_bound(py);
            d.set_item("workload", g.workload)?;
            d.set_item("impl", g.impl_name)?;
            d.set_item("threads", g.threads)?;
            d.set_item("dummy_count", g.dummy_count)?;
            d.set_item("seconds", g.seconds)?;
            d.set_item("mean", s.mean)?;
            d.set_item("ci99_halfwidth", s.ci99_halfwidth)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn adlist_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyList_>()?;
    m.add_class::<PyExtList>()?;
    m.add_class::<PyBaseline>()?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
