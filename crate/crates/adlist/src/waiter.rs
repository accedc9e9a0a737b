//! Per-thread waiter cells and the event facility all blocking is built on.
//!
//! A thread can only ever block in one place at a time, so each thread owns a
//! single [`Waiter`] cell, fetched via [`current_waiter`]. Waiters live in a
//! fixed slot table and are named by 16-bit ids, which is what lets a queue of
//! blocked threads be stored in 16 bits of a packed lock word. Id
//! [`NULLID`] (`0xFFFF`) is reserved and never names a live waiter.
//!
//! The event half of a waiter guarantees that a `signal` issued before the
//! matching `wait` is latched and not lost; `wait` and `signal` are always
//! called in matched pairs over a waiter's lifetime.

use std::cell::Cell;
use std::sync::atomic::{AtomicBool, AtomicU16, AtomicU64, Ordering};
use std::sync::{Condvar, Mutex, OnceLock};

/// Reserved id meaning "no waiter".
pub const NULLID: u16 = u16::MAX;

/// Default capacity of the process-wide waiter domain.
pub const DEFAULT_DOMAIN_CAPACITY: usize = 4096;

/// A per-thread blocking cell.
///
/// `next`/`prev` are free for queue links; `app_data` is an opaque word for
/// whatever abstraction enqueued the waiter (the lwlock records the requested
/// lock mode there). The kernel itself never interprets `app_data`.
pub struct Waiter {
    id: u16,
    allocated: AtomicBool,
    next: AtomicU16,
    prev: AtomicU16,
    app_data: AtomicU64,
    // signal_pending lives under the mutex so a signal issued before the
    // matching wait is latched and spurious condvar wakeups are absorbed.
    gate: Mutex<bool>,
    cond: Condvar,
}

impl std::fmt::Debug for Waiter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Waiter")
            .field("id", &self.id)
            .field("next", &self.next_id())
            .field("pending", &self.poll())
            .finish()
    }
}

impl Waiter {
    fn new(id: u16) -> Self {
        Waiter {
            id,
            allocated: AtomicBool::new(false),
            next: AtomicU16::new(NULLID),
            prev: AtomicU16::new(NULLID),
            app_data: AtomicU64::new(0),
            gate: Mutex::new(false),
            cond: Condvar::new(),
        }
    }

    pub fn id(&self) -> u16 {
        self.id
    }

    pub fn next_id(&self) -> u16 {
        self.next.load(Ordering::Acquire)
    }

    pub fn set_next(&self, id: u16) {
        self.next.store(id, Ordering::Release);
    }

    pub fn prev_id(&self) -> u16 {
        self.prev.load(Ordering::Acquire)
    }

    pub fn set_prev(&self, id: u16) {
        self.prev.store(id, Ordering::Release);
    }

    pub fn app_data(&self) -> u64 {
        self.app_data.load(Ordering::Acquire)
    }

    pub fn set_app_data(&self, v: u64) {
        self.app_data.store(v, Ordering::Release);
    }

    /// Latches a signal; if the owning thread is blocked in [`wait`](Self::wait)
    /// it unblocks, otherwise the next `wait` returns immediately.
    pub fn signal(&self) {
        let mut pending = self.gate.lock().unwrap();
        debug_assert!(!*pending, "double signal on waiter {}", self.id);
        *pending = true;
        self.cond.notify_one();
    }

    /// Blocks until a signal is latched, then consumes it.
    pub fn wait(&self) {
        let mut pending = self.gate.lock().unwrap();
        while !*pending {
            pending = self.cond.wait(pending).unwrap();
        }
        *pending = false;
    }

    /// Returns whether a signal is pending without consuming it.
    pub fn poll(&self) -> bool {
        *self.gate.lock().unwrap()
    }
}

/// Allocation failure: every slot in the domain is owned by a live thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainExhausted {
    pub capacity: usize,
}

impl std::fmt::Display for DomainExhausted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "waiter domain exhausted ({} slots)", self.capacity)
    }
}

impl std::error::Error for DomainExhausted {}

/// Fixed-capacity table of waiter slots plus a free list.
///
/// Capacity must stay below 2^16 so every waiter fits a 16-bit id.
pub struct WaiterDomain {
    slots: Box<[Waiter]>,
    free: Mutex<Vec<u16>>,
}

impl WaiterDomain {
    pub fn new(capacity: usize) -> Self {
        assert!(
            capacity >= 1 && capacity < NULLID as usize + 1,
            "waiter domain capacity must be in 1..=65535"
        );
        let slots: Box<[Waiter]> = (0..capacity as u16).map(Waiter::new).collect();
        // Pop order hands out low ids first.
        let free = (0..capacity as u16).rev().collect();
        WaiterDomain {
            slots,
            free: Mutex::new(free),
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Takes a waiter from the free pool.
    pub fn alloc(&self) -> Result<&Waiter, DomainExhausted> {
        let id = self
            .free
            .lock()
            .unwrap()
            .pop()
            .ok_or(DomainExhausted {
                capacity: self.capacity(),
            })?;
        let w = &self.slots[id as usize];
        debug_assert!(!w.allocated.load(Ordering::Relaxed));
        w.allocated.store(true, Ordering::Relaxed);
        w.set_next(NULLID);
        w.set_prev(NULLID);
        Ok(w)
    }

    /// Returns a waiter to the free pool. The owning thread must be done with
    /// it: not enqueued anywhere, no pending signal.
    pub fn free(&self, id: u16) {
        let w = &self.slots[id as usize];
        debug_assert!(w.allocated.load(Ordering::Relaxed));
        debug_assert!(!w.poll(), "freeing waiter {} with pending signal", id);
        debug_assert_eq!(w.next_id(), NULLID);
        w.allocated.store(false, Ordering::Relaxed);
        self.free.lock().unwrap().push(id);
    }

    /// Wait-free id-to-waiter mapping. `id` must name an allocated waiter.
    pub fn id_lookup(&self, id: u16) -> &Waiter {
        assert_ne!(id, NULLID, "id_lookup on NULLID");
        let w = &self.slots[id as usize];
        debug_assert!(
            w.allocated.load(Ordering::Relaxed),
            "id_lookup on unallocated waiter {}",
            id
        );
        w
    }
}

static GLOBAL: OnceLock<WaiterDomain> = OnceLock::new();

/// Installs a process-wide waiter domain with the given capacity. Must run
/// before any thread touches a lock; returns `false` if the domain already
/// exists.
pub fn init_global_domain(capacity: usize) -> bool {
    let mut fresh = false;
    GLOBAL.get_or_init(|| {
        fresh = true;
        WaiterDomain::new(capacity)
    });
    fresh
}

#[doc(hidden)]
pub fn global_domain() -> &'static WaiterDomain {
    GLOBAL.get_or_init(|| WaiterDomain::new(DEFAULT_DOMAIN_CAPACITY))
}

struct TlsWaiter {
    id: Cell<u16>,
}

impl Drop for TlsWaiter {
    fn drop(&mut self) {
        let id = self.id.get();
        if id != NULLID {
            global_domain().free(id);
        }
    }
}

thread_local! {
    static TLS_WAITER: TlsWaiter = const { TlsWaiter { id: Cell::new(NULLID) } };
}

/// Returns this thread's waiter, allocating one from the global domain on
/// first use. The waiter goes back to the free pool when the thread exits.
///
/// Panics if the domain is exhausted; use [`try_current_waiter`] to observe
/// the failure instead.
pub fn current_waiter() -> &'static Waiter {
    try_current_waiter().expect("waiter domain exhausted")
}

/// Fallible form of [`current_waiter`].
pub fn try_current_waiter() -> Result<&'static Waiter, DomainExhausted> {
    TLS_WAITER.with(|tls| {
        let dom = global_domain();
        let id = tls.id.get();
        if id != NULLID {
            return Ok(dom.id_lookup(id));
        }
        let w = dom.alloc()?;
        tls.id.set(w.id());
        Ok(w)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use std::sync::Arc;
    use std::thread;

    #[test]
    fn fresh_waiter_state() {
        let w = current_waiter();
        assert_ne!(w.id(), NULLID);
        assert_eq!(w.next_id(), NULLID);
        assert_eq!(w.prev_id(), NULLID);
        assert!(!w.poll());
    }

    #[test]
    fn current_waiter_is_idempotent() {
        let a = current_waiter().id();
        let b = current_waiter().id();
        assert_eq!(a, b);
    }

    #[test]
    fn waiter_recycled_on_thread_exit() {
        // Far more short-lived threads than domain slots: exits must return
        // waiters to the pool or this exhausts the global domain.
        for _ in 0..2 * DEFAULT_DOMAIN_CAPACITY {
            let id = thread::spawn(|| current_waiter().id()).join().unwrap();
            assert_ne!(id, NULLID);
        }
    }

    #[test]
    fn exhaustive_allocation_covers_id_space() {
        // Full-capacity domain: allocation must hand out every id exactly
        // once and then report exhaustion.
        let dom = WaiterDomain::new(NULLID as usize);
        let mut seen = HashSet::new();
        for _ in 0..dom.capacity() {
            let w = dom.alloc().expect("capacity not reached yet");
            assert!(seen.insert(w.id()));
        }
        assert_eq!(seen.len(), 65535);
        assert!(seen.iter().all(|&id| id != NULLID));
        assert_eq!(
            dom.alloc().unwrap_err(),
            DomainExhausted { capacity: 65535 }
        );
    }

    #[test]
    fn id_lookup_is_inverse_of_alloc() {
        let dom = WaiterDomain::new(128);
        let ids: Vec<u16> = (0..100).map(|_| dom.alloc().unwrap().id()).collect();
        for id in ids {
            assert_eq!(dom.id_lookup(id).id(), id);
        }
    }

    #[test]
    #[should_panic(expected = "NULLID")]
    fn id_lookup_nullid_faults() {
        let dom = WaiterDomain::new(4);
        dom.id_lookup(NULLID);
    }

    #[test]
    fn signal_before_wait_is_latched() {
        let dom = WaiterDomain::new(4);
        let w = dom.alloc().unwrap();
        w.signal();
        assert!(w.poll());
        w.wait(); // must not block
        assert!(!w.poll());
    }

    #[test]
    fn poll_state_machine() {
        // Enumerate the {signal, wait, poll} sequences that the pairing
        // contract permits and check poll is non-consuming.
        let dom = WaiterDomain::new(4);
        let w = dom.alloc().unwrap();
        assert!(!w.poll());
        w.signal();
        assert!(w.poll());
        assert!(w.poll()); // non-consuming
        w.wait();
        assert!(!w.poll());
    }

    #[test]
    fn wait_blocks_until_signal() {
        let dom = Arc::new(WaiterDomain::new(4));
        let id = dom.alloc().unwrap().id();
        let d2 = Arc::clone(&dom);
        let h = thread::spawn(move || {
            d2.id_lookup(id).wait();
        });
        thread::sleep(std::time::Duration::from_millis(20));
        assert!(!h.is_finished());
        dom.id_lookup(id).signal();
        h.join().unwrap();
    }

    #[test]
    fn randomized_signal_wait_stress() {
        // 10,000 rounds of one signal / one wait in random relative order;
        // every wait must return and consume exactly one signal.
        let dom = Arc::new(WaiterDomain::new(4));
        let id = dom.alloc().unwrap().id();
        let rounds = 10_000u32;
        let d2 = Arc::clone(&dom);
        let signaler = thread::spawn(move || {
            let mut x: u64 = 0x9e3779b97f4a7c15;
            for _ in 0..rounds {
                // xorshift jitter to shuffle orderings
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                for _ in 0..(x % 64) {
                    std::hint::spin_loop();
                }
                d2.id_lookup(id).signal();
                // Pairing: do not signal again until consumed.
                while d2.id_lookup(id).poll() {
                    std::hint::spin_loop();
                }
            }
        });
        for _ in 0..rounds {
            dom.id_lookup(id).wait();
        }
        signaler.join().unwrap();
        assert!(!dom.id_lookup(id).poll());
    }
}
