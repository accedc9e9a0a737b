//! A 4-byte fair reader-writer lock manipulated purely by CAS.
//!
//! Word layout (high to low): 1 bit read-bias, 1 bit write-locked, 14-bit
//! reader count, 16-bit waitq head id. The waitq field is stored bit-inverted
//! so the all-zero word is the unlocked, empty-queue state.
//!
//! The waitq is a reversed singly-linked chain through `Waiter::next`: pushes
//! go at the head with a single CAS, and the oldest waiter's `next` is
//! `NULLID`. The lock is fair: ownership is transferred by the unlocking
//! thread to the oldest waiter (a single writer) or the oldest contiguous run
//! of readers, which are detached from the chain before being signaled. A
//! thread whose waiter was signaled holds the lock as soon as `wait` returns,
//! with no further CAS.
//!
//! `async_lock` is the deferred-blocking entry point: when it returns `false`
//! the caller's waiter is enqueued and the caller owns a future grant. It may
//! do other work first but must eventually call `wait` on its waiter, and must
//! not reuse the waiter in any way before that.

use crate::waiter::{current_waiter, global_domain, Waiter, WaiterDomain, NULLID};
use std::sync::atomic::{AtomicU32, Ordering};

const MAX_READERS: u16 = (1 << 14) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Word {
    rd_bias: bool,
    wlocked: bool,
    readers: u16,
    waitq: u16,
}

impl Word {
    fn unpack(bits: u32) -> Self {
        Word {
            rd_bias: bits & (1 << 31) != 0,
            wlocked: bits & (1 << 30) != 0,
            readers: ((bits >> 16) & 0x3FFF) as u16,
            waitq: !(bits as u16),
        }
    }

    fn pack(self) -> u32 {
        debug_assert!(self.readers <= MAX_READERS);
        ((self.rd_bias as u32) << 31)
            | ((self.wlocked as u32) << 30)
            | ((self.readers as u32) << 16)
            | (!self.waitq) as u32
    }

    fn held(self) -> bool {
        self.wlocked || self.readers > 0
    }
}

/// The oldest grantable set at the tail of a waitq chain.
struct OldestSet {
    /// Waiter just in front of (newer than) the granted run; `NULLID` when the
    /// whole chain is granted.
    pw: u16,
    /// Newest waiter of the granted run; following `next` reaches the oldest.
    wtw: u16,
    exclusive: bool,
    len: u16,
}

/// 4-byte fair reader-writer lock. The zeroed word is the unlocked state.
#[repr(transparent)]
pub struct LwLock(AtomicU32);

const _: () = assert!(std::mem::size_of::<LwLock>() == 4);

impl Default for LwLock {
    fn default() -> Self {
        Self::new()
    }
}

impl LwLock {
    pub const fn new() -> Self {
        LwLock(AtomicU32::new(0))
    }

    /// Resets a lock known to have no holders or waiters (detached nodes).
    pub fn reset(&self) {
        self.0.store(0, Ordering::Release);
    }

    fn load(&self) -> Word {
        Word::unpack(self.0.load(Ordering::Acquire))
    }

    fn cas(&self, old: Word, new: Word) -> bool {
        self.0
            .compare_exchange_weak(old.pack(), new.pack(), Ordering::AcqRel, Ordering::Acquire)
            .is_ok()
    }

    /// True while any thread holds the lock (racy observation, tests only).
    pub fn is_held(&self) -> bool {
        self.load().held()
    }

    /// Racy snapshot of `(rd_bias, wlocked, readers, waitq_head)`, tests only.
    #[doc(hidden)]
    pub fn debug_state(&self) -> (bool, bool, u16, u16) {
        let w = self.load();
        (w.rd_bias, w.wlocked, w.readers, w.waitq)
    }

    /// Tries to acquire immediately; on failure the calling thread's waiter is
    /// pushed onto the waitq and the caller owns a future grant: it must
    /// eventually `wait()` on its waiter, after which it holds the lock in the
    /// requested mode.
    pub fn async_lock(&self, exclusive: bool) -> bool {
        let w = current_waiter();
        debug_assert!(!w.poll(), "async_lock with unconsumed signal");
        debug_assert_eq!(w.next_id(), NULLID, "async_lock with enqueued waiter");
        loop {
            let o = self.load();
            let mut n = o;
            let mut enqueued = false;
            if !exclusive && !o.wlocked && (o.waitq == NULLID || o.rd_bias) {
                assert!(o.readers < MAX_READERS, "lwlock reader count overflow");
                n.readers += 1;
            } else if exclusive && !o.wlocked && o.readers == 0 {
                n.wlocked = true;
            } else {
                w.set_app_data(exclusive as u64);
                w.set_next(o.waitq);
                n.waitq = w.id();
                enqueued = true;
            }
            if self.cas(o, n) {
                return !enqueued;
            }
            if enqueued {
                // Push failed; the waiter is ours again.
                w.set_next(NULLID);
            }
        }
    }

    /// Blocking acquire.
    pub fn lock(&self, exclusive: bool) {
        if !self.async_lock(exclusive) {
            current_waiter().wait();
        }
    }

    /// Acquires only if that needs no queueing. Test plumbing, not used by the
    /// list itself.
    pub fn try_lock(&self, exclusive: bool) -> bool {
        loop {
            let o = self.load();
            let mut n = o;
            if !exclusive && !o.wlocked && (o.waitq == NULLID || o.rd_bias) {
                assert!(o.readers < MAX_READERS, "lwlock reader count overflow");
                n.readers += 1;
            } else if exclusive && !o.wlocked && o.readers == 0 {
                n.wlocked = true;
            } else {
                return false;
            }
            if self.cas(o, n) {
                return true;
            }
        }
    }

    /// Releases the caller's hold. If the lock becomes fully free and waiters
    /// are queued, ownership is transferred to the oldest waiter (writer) or
    /// the oldest contiguous run of readers before they are signaled.
    pub fn unlock_fair(&self) {
        let dom = global_domain();
        let grant = loop {
            let o = self.load();
            let mut n = o;
            if o.wlocked {
                n.wlocked = false;
            } else {
                assert!(o.readers > 0, "unlock of unheld lwlock");
                n.readers -= 1;
            }
            let mut set = None;
            if !n.held() && n.waitq != NULLID {
                let s = find_oldest_set(dom, n.waitq);
                if s.pw == NULLID {
                    n.waitq = NULLID;
                }
                if s.exclusive {
                    n.wlocked = true;
                } else {
                    n.readers = s.len;
                }
                set = Some(s);
            }
            if self.cas(o, n) {
                break set;
            }
        };
        if let Some(set) = grant {
            // Only the transferring thread mutates interior links, so the
            // detach is race-free; new arrivals push at the head via CAS.
            if set.pw != NULLID {
                dom.id_lookup(set.pw).set_next(NULLID);
            }
            let mut id = set.wtw;
            while id != NULLID {
                let w = dom.id_lookup(id);
                let next = w.next_id();
                // Detach before signaling: the granted thread may reuse its
                // waiter the moment it wakes.
                w.set_next(NULLID);
                w.signal();
                id = next;
            }
        }
    }
}

/// Number of waiters from `head` to the end of the chain.
pub fn waitq_size(dom: &WaiterDomain, head: u16) -> u16 {
    let mut count = 0u16;
    let mut id = head;
    while id != NULLID {
        id = dom.id_lookup(id).next_id();
        count += 1;
    }
    count
}

fn waiter_is_exclusive(w: &Waiter) -> bool {
    w.app_data() != 0
}

/// Walks the reversed chain (head = newest) and picks the oldest grantable
/// set: the single oldest waiter if it is a writer, else the maximal
/// contiguous run of readers at the oldest end.
fn find_oldest_set(dom: &WaiterDomain, head: u16) -> OldestSet {
    debug_assert_ne!(head, NULLID);
    // All-reader suffix at the oldest end of the chain, if any.
    let mut suffix_start = NULLID;
    let mut suffix_prev = NULLID;
    let mut suffix_len: u16 = 0;
    let mut prev = NULLID;
    let mut last = head;
    let mut id = head;
    while id != NULLID {
        let w = dom.id_lookup(id);
        if waiter_is_exclusive(w) {
            suffix_start = NULLID;
            suffix_len = 0;
        } else if suffix_len == 0 {
            suffix_start = id;
            suffix_prev = prev;
            suffix_len = 1;
        } else {
            suffix_len += 1;
        }
        last = id;
        prev = id;
        id = w.next_id();
    }
    if suffix_len == 0 {
        // Oldest waiter is a writer: grant it alone. Its predecessor in chain
        // order is the second-to-last waiter.
        let mut pw = NULLID;
        let mut cur = head;
        while cur != last {
            pw = cur;
            cur = dom.id_lookup(cur).next_id();
        }
        OldestSet {
            pw,
            wtw: last,
            exclusive: true,
            len: 1,
        }
    } else {
        OldestSet {
            pw: suffix_prev,
            wtw: suffix_start,
            exclusive: false,
            len: suffix_len,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::mpsc;
    use std::sync::Arc;
    use std::thread;
    use std::time::Duration;

    #[test]
    fn word_roundtrip() {
        for &(bias, wl, rd, wq) in &[
            (false, false, 0u16, NULLID),
            (true, false, 3, 17),
            (false, true, 0, 0),
            (false, false, MAX_READERS, NULLID),
            (true, true, 0x2AAA, 0x5555),
        ] {
            let w = Word {
                rd_bias: bias,
                wlocked: wl,
                readers: rd,
                waitq: wq,
            };
            assert_eq!(Word::unpack(w.pack()), w);
        }
        // Zero word is the free state with an empty queue.
        let free = Word::unpack(0);
        assert!(!free.rd_bias && !free.wlocked && free.readers == 0);
        assert_eq!(free.waitq, NULLID);
    }

    #[test]
    fn uncontended_exclusive() {
        let l = LwLock::new();
        assert!(l.async_lock(true));
        assert_eq!(l.debug_state(), (false, true, 0, NULLID));
        l.unlock_fair();
        assert_eq!(l.debug_state(), (false, false, 0, NULLID));
    }

    #[test]
    fn reader_fast_path_stacks() {
        let l = LwLock::new();
        assert!(l.async_lock(false));
        assert!(l.async_lock(false));
        assert_eq!(l.debug_state(), (false, false, 2, NULLID));
        l.unlock_fair();
        l.unlock_fair();
        assert_eq!(l.debug_state(), (false, false, 0, NULLID));
    }

    #[test]
    fn contended_request_enqueues() {
        let l = Arc::new(LwLock::new());
        l.lock(true);
        let (tx, rx) = mpsc::channel::<()>();
        let l2 = Arc::clone(&l);
        let h = thread::spawn(move || {
            let got = l2.async_lock(false);
            assert!(!got, "write-held lock must queue the request");
            let w = current_waiter();
            // Our id is at the waitq head with the mode recorded.
            assert_eq!(l2.debug_state().3, w.id());
            assert_eq!(w.app_data(), 0);
            tx.send(()).unwrap();
            w.wait();
            // Granted by transfer: we hold a read lock now.
            assert_eq!(l2.debug_state(), (false, false, 1, NULLID));
            l2.unlock_fair();
        });
        rx.recv().unwrap();
        l.unlock_fair();
        h.join().unwrap();
    }

    #[test]
    fn try_lock_never_queues() {
        let l = LwLock::new();
        l.lock(false);
        assert!(l.try_lock(false));
        assert!(!l.try_lock(true));
        assert_eq!(l.debug_state().3, NULLID);
        l.unlock_fair();
        l.unlock_fair();
        assert!(l.try_lock(true));
        l.unlock_fair();
    }

    #[test]
    fn waitq_size_counts_chain() {
        let dom = WaiterDomain::new(64);
        assert_eq!(waitq_size(&dom, NULLID), 0);
        let ids: Vec<u16> = (0..37).map(|_| dom.alloc().unwrap().id()).collect();
        assert_eq!(waitq_size(&dom, ids[0]), 1);
        // Link into a chain: ids[0] -> ids[1] -> ... -> NULLID.
        for pair in ids.windows(2) {
            dom.id_lookup(pair[0]).set_next(pair[1]);
        }
        assert_eq!(waitq_size(&dom, ids[0]), 37);
    }

    /// Spawns a thread that enqueues on `l` in the given mode, reports its
    /// enqueue via the returned receiver, appends `name` to `log` once
    /// granted, and unlocks after the release channel fires.
    fn queued_locker(
        l: &Arc<LwLock>,
        log: &Arc<std::sync::Mutex<Vec<&'static str>>>,
        name: &'static str,
        exclusive: bool,
    ) -> (thread::JoinHandle<()>, mpsc::Sender<()>) {
        let (release_tx, release_rx) = mpsc::channel::<()>();
        let (enq_tx, enq_rx) = mpsc::channel::<()>();
        let l = Arc::clone(l);
        let log = Arc::clone(log);
        let h = thread::spawn(move || {
            assert!(!l.async_lock(exclusive));
            enq_tx.send(()).unwrap();
            current_waiter().wait();
            log.lock().unwrap().push(name);
            release_rx.recv().unwrap();
            l.unlock_fair();
        });
        enq_rx.recv().unwrap();
        (h, release_tx)
    }

    #[test]
    fn writer_unlock_grants_oldest_reader_run() {
        // waitq built as [newest: W2, R3, R4 :oldest] while write-held; the
        // unlock must grant R4 and R3 together and leave W2 queued.
        let l = Arc::new(LwLock::new());
        let log = Arc::new(std::sync::Mutex::new(Vec::new()));
        l.lock(true);
        let (h4, rel4) = queued_locker(&l, &log, "R4", false);
        let (h3, rel3) = queued_locker(&l, &log, "R3", false);
        let (h2, rel2) = queued_locker(&l, &log, "W2", true);
        l.unlock_fair();
        while log.lock().unwrap().len() < 2 {
            thread::yield_now();
        }
        // Both readers hold; the writer is still queued.
        let (_, wlocked, readers, waitq) = l.debug_state();
        assert!(!wlocked);
        assert_eq!(readers, 2);
        assert_ne!(waitq, NULLID);
        {
            let got = log.lock().unwrap();
            assert_eq!(got.len(), 2);
            assert!(got.contains(&"R3") && got.contains(&"R4"));
        }
        rel4.send(()).unwrap();
        rel3.send(()).unwrap();
        while log.lock().unwrap().len() < 3 {
            thread::yield_now();
        }
        assert_eq!(log.lock().unwrap()[2], "W2");
        assert_eq!(l.debug_state(), (false, true, 0, NULLID));
        rel2.send(()).unwrap();
        for h in [h4, h3, h2] {
            h.join().unwrap();
        }
        assert_eq!(l.debug_state(), (false, false, 0, NULLID));
    }

    #[test]
    fn reader_unlock_with_writer_queued_keeps_queue() {
        let l = Arc::new(LwLock::new());
        let log = Arc::new(std::sync::Mutex::new(Vec::new()));
        l.lock(false);
        l.lock(false);
        l.lock(false);
        let (h, rel) = queued_locker(&l, &log, "W", true);
        l.unlock_fair();
        // Lock still read-held: no transfer happens.
        thread::sleep(Duration::from_millis(20));
        let (_, wlocked, readers, waitq) = l.debug_state();
        assert!(!wlocked);
        assert_eq!(readers, 2);
        assert_ne!(waitq, NULLID);
        assert!(log.lock().unwrap().is_empty());
        l.unlock_fair();
        l.unlock_fair();
        rel.send(()).unwrap();
        h.join().unwrap();
    }

    #[test]
    fn mutual_exclusion_counter() {
        use std::sync::atomic::{AtomicI64, Ordering};
        let l = Arc::new(LwLock::new());
        let state = Arc::new(AtomicI64::new(0));
        let mut handles = Vec::new();
        for t in 0..4 {
            let l = Arc::clone(&l);
            let state = Arc::clone(&state);
            handles.push(thread::spawn(move || {
                for i in 0..5_000 {
                    let exclusive = (i + t) % 3 == 0;
                    l.lock(exclusive);
                    if exclusive {
                        let prev = state.fetch_add(1000, Ordering::SeqCst);
                        assert_eq!(prev, 0, "writer overlapped another holder");
                        state.fetch_sub(1000, Ordering::SeqCst);
                    } else {
                        let seen = state.fetch_add(1, Ordering::SeqCst);
                        assert!(seen < 1000, "reader overlapped a writer");
                        state.fetch_sub(1, Ordering::SeqCst);
                    }
                    l.unlock_fair();
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(l.debug_state(), (false, false, 0, NULLID));
    }
}
