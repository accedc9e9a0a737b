//! LRU-cache workloads: a mix of re-prioritize picks and inserts over a
//! fixed element arena, with single-evictor tail reclaim.
//!
//! Every element lives in a preallocated arena for the whole run, so node
//! memory is always valid and a pin is the only arbiter needed between a
//! re-prioritize and a concurrent eviction: whoever masks the node first
//! wins, the loser gives up. Threads draw insertable elements from private
//! lock-free stacks; the evictor returns reclaimed elements round-robin.

use crate::config::{Config, ImplKind};
use crate::dlist::MutexDlist;
use adlist::lru::ExtendedList;
use adlist::{AdList, AdlNode};
use crossbeam::queue::SegQueue;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ptr::NonNull;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Barrier, Mutex};
use std::thread;
use std::time::{Duration, Instant};

#[repr(C)]
struct LruElem {
    node: AdlNode,
    idx: usize,
}

enum Backend {
    Dlist(MutexDlist),
    Adlist(AdList),
    Ext(ExtendedList),
}

struct Shared {
    arena: Box<[LruElem]>,
    /// Whether the element is currently in the cache (list). The baseline
    /// keeps this under its mutex instead and ignores these flags.
    present: Box<[AtomicBool]>,
    stacks: Box<[SegQueue<usize>]>,
    backend: Backend,
    evict_gate: Mutex<()>,
    evictors_inside: AtomicUsize,
    round_robin: AtomicUsize,
    threads: usize,
    evict_k: usize,
    evict_cost: Duration,
}

// The arena is only ever accessed through the synchronized list operations
// and atomic flags.
unsafe impl Send for Shared {}
unsafe impl Sync for Shared {}

impl Shared {
    fn node(&self, i: usize) -> NonNull<AdlNode> {
        NonNull::from(&self.arena[i].node)
    }

    fn idx_of(&self, n: NonNull<AdlNode>) -> usize {
        unsafe { (*n.as_ptr().cast::<LruElem>()).idx }
    }

    fn busy_wait(&self) {
        // calibrated spin, not sleep: reclaim cost is CPU-bound
        let end = Instant::now() + self.evict_cost;
        while Instant::now() < end {
            std::hint::spin_loop();
        }
    }

    fn pick(&self, i: usize, rng: &mut ChaCha8Rng) {
        match &self.backend {
            Backend::Dlist(l) => {
                // not found in the cache → no-op
                l.move_to_head(i);
            }
            Backend::Adlist(_) | Backend::Ext(_) => {
                if !self.present[i].load(Ordering::Acquire) {
                    return;
                }
                let n = self.node(i);
                unsafe {
                    // pin can fail when the element is being evicted or was
                    // already reclaimed: give up
                    if !n.as_ref().pin() {
                        return;
                    }
                    let (list, deleted) = match &self.backend {
                        Backend::Adlist(l) => (l, l.delete(n)),
                        Backend::Ext(e) => (e.base(), e.base().delete(n)),
                        Backend::Dlist(_) => unreachable!(),
                    };
                    if !deleted {
                        // an evictor masked it first
                        n.as_ref().unpin();
                        return;
                    }
                    match &self.backend {
                        Backend::Adlist(_) => list.push_front(n),
                        Backend::Ext(e) => e.insert_at_head(n, |k| rng.gen_range(0..k)),
                        Backend::Dlist(_) => unreachable!(),
                    }
                    n.as_ref().unpin();
                }
            }
        }
    }

    fn insert(&self, t: usize, rng: &mut ChaCha8Rng) {
        let i = loop {
            if let Some(i) = self.stacks[t].pop() {
                break i;
            }
            // out of elements: reclaim some, unless someone already is
            if let Ok(_gate) = self.evict_gate.try_lock() {
                self.evict();
            } else {
                thread::yield_now();
            }
        };
        match &self.backend {
            Backend::Dlist(l) => l.push_front(i),
            Backend::Adlist(l) => {
                let n = self.node(i);
                unsafe {
                    l.push_front(n);
                    n.as_ref().unpin();
                }
                self.present[i].store(true, Ordering::Release);
            }
            Backend::Ext(e) => {
                let n = self.node(i);
                unsafe {
                    e.insert_at_head(n, |k| rng.gen_range(0..k));
                    n.as_ref().unpin();
                }
                self.present[i].store(true, Ordering::Release);
            }
        }
    }

    /// Caller holds the evict gate.
    fn evict(&self) {
        let inside = self.evictors_inside.fetch_add(1, Ordering::SeqCst);
        assert_eq!(inside, 0, "two threads inside the evict critical region");
        for _ in 0..self.evict_k {
            let i = match &self.backend {
                Backend::Dlist(l) => l.pop_back(),
                Backend::Adlist(l) => l.pop_back().map(|n| self.idx_of(n)),
                Backend::Ext(e) => e.pop_back().map(|n| self.idx_of(n)),
            };
            let Some(i) = i else { break };
            self.busy_wait();
            if !matches!(self.backend, Backend::Dlist(_)) {
                self.present[i].store(false, Ordering::Release);
            }
            let slot = self.round_robin.fetch_add(1, Ordering::Relaxed) % self.threads;
            self.stacks[slot].push(i);
        }
        self.evictors_inside.fetch_sub(1, Ordering::SeqCst);
    }
}

fn make_shared(cfg: &Config) -> Shared {
    let n = cfg.arena_size();
    let arena: Box<[LruElem]> = (0..n)
        .map(|idx| LruElem {
            node: AdlNode::new(),
            idx,
        })
        .collect();
    let stacks: Box<[SegQueue<usize>]> = (0..cfg.threads).map(|_| SegQueue::new()).collect();
    for i in 0..n {
        stacks[i / cfg.available].push(i);
    }
    Shared {
        arena,
        present: (0..n).map(|_| AtomicBool::new(false)).collect(),
        stacks,
        backend: match cfg.impl_kind {
            ImplKind::Dlist => Backend::Dlist(MutexDlist::new(n)),
            ImplKind::Adlist => Backend::Adlist(AdList::new()),
            ImplKind::AdlistDummy => Backend::Ext(ExtendedList::new(cfg.dummy_nodes)),
        },
        evict_gate: Mutex::new(()),
        evictors_inside: AtomicUsize::new(0),
        round_robin: AtomicUsize::new(0),
        threads: cfg.threads,
        evict_k: cfg.evict_k,
        evict_cost: Duration::from_micros(cfg.evict_cost_us),
    }
}

/// One timed repeat of the configured LRU mix.
pub fn run_once(cfg: &Config, repeat: usize) -> f64 {
    let shared = Arc::new(make_shared(cfg));
    let barrier = Arc::new(Barrier::new(cfg.threads + 1));
    let mut hs = Vec::new();
    for t in 0..cfg.threads {
        let sh = Arc::clone(&shared);
        let b = Arc::clone(&barrier);
        let (mut picks, mut inserts) = (cfg.picks, cfg.inserts);
        let seed = cfg.seed ^ ((t as u64) << 24) ^ ((repeat as u64) << 48);
        let arena_len = cfg.arena_size();
        hs.push(thread::spawn(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            b.wait();
            while picks + inserts > 0 {
                if inserts > 0 && rng.gen_range(0..picks + inserts) < inserts {
                    sh.insert(t, &mut rng);
                    inserts -= 1;
                } else {
                    let i = rng.gen_range(0..arena_len);
                    sh.pick(i, &mut rng);
                    picks -= 1;
                }
            }
        }));
    }
    barrier.wait();
    let start = Instant::now();
    for h in hs {
        h.join().unwrap();
    }
    let secs = start.elapsed().as_secs_f64();
    check_conservation_and_drain(cfg, &shared);
    secs
}

/// Conservation at quiescence: cache size plus stack contents equals the
/// arena; every adlist element's presence flag matches list membership.
fn check_conservation_and_drain(cfg: &Config, shared: &Shared) {
    let stacked: usize = shared.stacks.iter().map(|s| s.len()).sum();
    match &shared.backend {
        Backend::Dlist(l) => {
            assert_eq!(l.len() + stacked, cfg.arena_size());
            while l.pop_front().is_some() {}
        }
        Backend::Adlist(_) | Backend::Ext(_) => {
            let list = match &shared.backend {
                Backend::Adlist(l) => l,
                Backend::Ext(e) => e.base(),
                Backend::Dlist(_) => unreachable!(),
            };
            let mut in_list = 0usize;
            while let Some(n) = list.pop_front() {
                let i = shared.idx_of(n);
                assert!(shared.present[i].load(Ordering::Acquire));
                in_list += 1;
            }
            assert_eq!(in_list + stacked, cfg.arena_size());
            let flagged = shared
                .present
                .iter()
                .filter(|p| p.load(Ordering::Acquire))
                .count();
            assert_eq!(flagged, in_list);
        }
    }
}
