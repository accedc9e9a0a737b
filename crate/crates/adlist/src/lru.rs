//! LRU-shaped helpers: the dummy-node extended list and the single-mutex
//! baseline list.
//!
//! An LRU list funnels every insert through the head, which serializes all
//! writers on the first node's lock. [`ExtendedList`] spreads that hot spot
//! over `n` permanently masked dummy nodes kept near the head: an insert
//! anchors on a uniformly random dummy, so head inserts contend on `n`
//! independent locks instead of one. Evictions slowly drag the dummies toward
//! the tail, so they are periodically moved back to the head region.
//!
//! [`BaselineList`] is a plain deque under one mutex. It doubles as the
//! sequential oracle in differential tests and as the baseline implementation
//! in benchmarks.

use crate::list::{AdList, AdlNode};
use std::collections::VecDeque;
use std::ptr::NonNull;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// Default eviction interval between dummy rebalances.
pub const DEFAULT_REBALANCE_EVERY: u64 = 1024;

/// An [`AdList`] with `n` permanently masked dummy anchor nodes in the head
/// region.
///
/// Dummies are invisible to iteration and are never handed out by any API;
/// they only serve as randomized insert anchors. Each one carries a permanent
/// floor pin that [`rebalance`](Self::rebalance) temporarily trades away to
/// relocate the dummy via the regular delete path.
pub struct ExtendedList {
    base: AdList,
    dummies: Box<[Box<AdlNode>]>,
    rebalance_every: u64,
    evictions: AtomicU64,
    rebalance_gate: Mutex<()>,
}

impl ExtendedList {
    pub fn new(dummy_count: usize) -> Self {
        Self::with_rebalance_every(dummy_count, DEFAULT_REBALANCE_EVERY)
    }

    pub fn with_rebalance_every(dummy_count: usize, rebalance_every: u64) -> Self {
        assert!(dummy_count >= 1, "dummy_count must be positive");
        assert!(rebalance_every >= 1);
        let base = AdList::new();
        let dummies: Box<[Box<AdlNode>]> =
            (0..dummy_count).map(|_| Box::new(AdlNode::new())).collect();
        // Chain them after the head sentinel; insert_after_masked leaves each
        // one masked with the floor pin held.
        let mut anchor = base.head_sentinel();
        for d in dummies.iter() {
            let dp = NonNull::from(&**d);
            unsafe { base.insert_after_masked(anchor, dp) };
            anchor = dp;
        }
        ExtendedList {
            base,
            dummies,
            rebalance_every,
            evictions: AtomicU64::new(0),
            rebalance_gate: Mutex::new(()),
        }
    }

    pub fn dummy_count(&self) -> usize {
        self.dummies.len()
    }

    /// The underlying list. All plain operations (neighbor walks, deletes,
    /// client-node pins) go straight through it; dummies are skipped like any
    /// other masked node.
    pub fn base(&self) -> &AdList {
        &self.base
    }

    /// Inserts `fresh` after a randomly picked dummy. `pick` is called with
    /// the dummy count and must return an index below it; it may be called
    /// more than once when the picked dummy is mid-rebalance.
    ///
    /// # Safety
    /// `fresh` must be a detached node not reachable by any other thread.
    pub unsafe fn insert_at_head(
        &self,
        fresh: NonNull<AdlNode>,
        mut pick: impl FnMut(usize) -> usize,
    ) {
        loop {
            let i = pick(self.dummies.len());
            let d = NonNull::from(&*self.dummies[i]);
            // The force-pin keeps the dummy linked across the insert; it only
            // fails while the rebalancer has the dummy off the list, in which
            // case we just pick again.
            if !crate::list::raw_force_pin(d.as_ref()) {
                std::thread::yield_now();
                continue;
            }
            self.base.insert_after(d, fresh);
            d.as_ref().unpin();
            return;
        }
    }

    /// Removes and returns the last client node, counting it as an eviction;
    /// every `rebalance_every`-th eviction triggers a dummy rebalance on this
    /// thread.
    pub fn pop_back(&self) -> Option<NonNull<AdlNode>> {
        let n = self.base.pop_back()?;
        self.note_eviction();
        Some(n)
    }

    /// Records `1` eviction done through [`base`](Self::base) directly.
    pub fn note_eviction(&self) {
        let c = self.evictions.fetch_add(1, Ordering::Relaxed) + 1;
        if c % self.rebalance_every == 0 {
            self.rebalance();
        }
    }

    /// Moves every dummy back to the head region. May run concurrently with
    /// any other operation; concurrent rebalance requests coalesce (the late
    /// caller returns immediately).
    pub fn rebalance(&self) {
        let Ok(_guard) = self.rebalance_gate.try_lock() else {
            return;
        };
        for d in self.dummies.iter() {
            let dp = NonNull::from(&**d);
            unsafe {
                // The dummy is permanently masked and the gate makes us its
                // unique deleter, so this is the tail of the regular delete
                // path: trade the floor pin for a wait on stray force-pins
                // (in-flight inserts and backward hops), splice out, then
                // relink at the head with mask and floor pin restored.
                self.base.remove_wait_on_pincount(dp);
                self.base.remove_do(dp);
                self.base.insert_after_masked(self.base.head_sentinel(), dp);
            }
        }
    }
}

impl Drop for ExtendedList {
    fn drop(&mut self) {
        // The base list asserts emptiness on drop; pull the dummies out first.
        // No other thread can hold &self here, so the waits are instant.
        for d in self.dummies.iter() {
            let dp = NonNull::from(&**d);
            unsafe {
                self.base.remove_wait_on_pincount(dp);
                self.base.remove_do(dp);
            }
        }
    }
}

/// Reference doubly-linked list under one global mutex: the "dlist" baseline
/// and the sequential oracle for differential tests.
pub struct BaselineList<T> {
    inner: Mutex<VecDeque<T>>,
}

impl<T> Default for BaselineList<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> BaselineList<T> {
    pub fn new() -> Self {
        BaselineList {
            inner: Mutex::new(VecDeque::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.lock().unwrap().is_empty()
    }

    pub fn push_front(&self, v: T) {
        self.inner.lock().unwrap().push_front(v);
    }

    pub fn push_back(&self, v: T) {
        self.inner.lock().unwrap().push_back(v);
    }

    pub fn pop_front(&self) -> Option<T> {
        self.inner.lock().unwrap().pop_front()
    }

    pub fn pop_back(&self) -> Option<T> {
        self.inner.lock().unwrap().pop_back()
    }

    /// Evicts up to `k` elements from the tail, oldest last.
    pub fn evict_tail(&self, k: usize) -> Vec<T> {
        let mut g = self.inner.lock().unwrap();
        let mut out = Vec::with_capacity(k.min(g.len()));
        for _ in 0..k {
            match g.pop_back() {
                Some(v) => out.push(v),
                None => break,
            }
        }
        out
    }

    /// Front-to-back snapshot.
    pub fn to_vec(&self) -> Vec<T>
    where
        T: Clone,
    {
        self.inner.lock().unwrap().iter().cloned().collect()
    }
}

impl<T: PartialEq> BaselineList<T> {
    /// Removes the first occurrence of `v`; `false` if absent.
    pub fn remove(&self, v: &T) -> bool {
        let mut g = self.inner.lock().unwrap();
        match g.iter().position(|x| x == v) {
            Some(i) => {
                g.remove(i);
                true
            }
            None => false,
        }
    }

    /// Moves the first occurrence of `v` to the front; `false` if absent.
    pub fn move_to_head(&self, v: &T) -> bool {
        let mut g = self.inner.lock().unwrap();
        match g.iter().position(|x| x == v) {
            Some(i) => {
                let x = g.remove(i).unwrap();
                g.push_front(x);
                true
            }
            None => false,
        }
    }

    pub fn contains(&self, v: &T) -> bool {
        self.inner.lock().unwrap().iter().any(|x| x == v)
    }
}
