//! The adlist: a doubly-linked list whose operations on disjoint node
//! neighborhoods run in parallel.
//!
//! Every node carries a [`LwLock`] guarding its `next`/`prev` links (shared to
//! read, exclusive to write) and a [`RefCount`] word holding a visibility mask
//! bit, a 15-bit pin count and a 16-bit waitq head. The whole synchronization
//! state is 8 bytes; a node header is 24 bytes.
//!
//! Lock acquisition follows the canonical order along `next` links. Whenever a
//! lock must be taken against that order (the `prev` side of an insert-before
//! or a delete), [`LwLock::async_lock`] is used: on contention the thread is
//! queued for a guaranteed future grant, releases the lock it holds, waits for
//! the grant, reacquires in canonical order and revalidates the neighborhood.
//!
//! Setting a node's mask bit is the serialization point of its delete;
//! clearing the mask of a freshly linked node is the serialization point of
//! its insert. A masked node stays physically linked until its pin count
//! drains to zero, after which the deleter splices it out and runs the
//! clear-node handshake: it signals every waiter queued on the node's refcnt
//! word, then enqueues itself on the node's own lock and releases it, so the
//! lock cycles through every queued thread and comes back. When `remove_do`
//! returns, no other thread references the node and its memory may be
//! reclaimed immediately.

use crate::lwlock::LwLock;
use crate::waiter::{current_waiter, NULLID};
use std::ptr::NonNull;
use std::sync::atomic::{AtomicPtr, AtomicU32, Ordering};

const MAX_PINCOUNT: u16 = (1 << 15) - 1;

const SHARED: bool = false;
const EXCLUSIVE: bool = true;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RWord {
    mask: bool,
    pincount: u16,
    waitq: u16,
}

impl RWord {
    fn unpack(bits: u32) -> Self {
        RWord {
            mask: bits & (1 << 31) != 0,
            pincount: ((bits >> 16) & 0x7FFF) as u16,
            waitq: !(bits as u16),
        }
    }

    fn pack(self) -> u32 {
        debug_assert!(self.pincount <= MAX_PINCOUNT);
        ((self.mask as u32) << 31) | ((self.pincount as u32) << 16) | (!self.waitq) as u32
    }
}

/// 4-byte node state word: visibility mask, pin count, waitq head. The waitq
/// field is stored bit-inverted so the zero word is unmasked/unpinned/empty.
#[repr(transparent)]
pub struct RefCount(AtomicU32);

const _: () = assert!(std::mem::size_of::<RefCount>() == 4);

impl RefCount {
    /// Detached-node state: masked, no pins, empty waitq.
    const fn detached() -> Self {
        RefCount(AtomicU32::new(
            // RWord { mask: true, pincount: 0, waitq: NULLID }.pack(), spelled
            // out because pack() is not const.
            1 << 31,
        ))
    }

    fn load(&self) -> RWord {
        RWord::unpack(self.0.load(Ordering::Acquire))
    }

    fn cas(&self, old: RWord, new: RWord) -> bool {
        self.0
            .compare_exchange_weak(old.pack(), new.pack(), Ordering::AcqRel, Ordering::Acquire)
            .is_ok()
    }

    fn store(&self, w: RWord) {
        self.0.store(w.pack(), Ordering::Release);
    }
}

/// List node header. Embed it at a fixed offset inside a client record; the
/// library never allocates or frees payload memory.
#[repr(C)]
pub struct AdlNode {
    next: AtomicPtr<AdlNode>,
    prev: AtomicPtr<AdlNode>,
    lock: LwLock,
    refcnt: RefCount,
}

const _: () = assert!(std::mem::size_of::<AdlNode>() == 24);

impl Default for AdlNode {
    fn default() -> Self {
        Self::new()
    }
}

impl AdlNode {
    /// A detached node, ready to be inserted into a list.
    pub const fn new() -> Self {
        AdlNode {
            next: AtomicPtr::new(std::ptr::null_mut()),
            prev: AtomicPtr::new(std::ptr::null_mut()),
            lock: LwLock::new(),
            refcnt: RefCount::detached(),
        }
    }

    fn next_ptr(&self) -> *mut AdlNode {
        self.next.load(Ordering::Acquire)
    }

    fn prev_ptr(&self) -> *mut AdlNode {
        self.prev.load(Ordering::Acquire)
    }

    /// Takes a pin, preventing removal. Fails iff the node is masked; callers
    /// must be able to handle the failure.
    ///
    /// The caller must already know the node cannot go away: an existing pin,
    /// ownership of the mask, a held lock on the node or a neighbor, or (for
    /// pooled records) the guarantee that the memory stays valid.
    pub fn pin(&self) -> bool {
        loop {
            let o = self.refcnt.load();
            if o.mask {
                return false;
            }
            assert!(o.pincount < MAX_PINCOUNT, "node pincount overflow");
            let n = RWord {
                pincount: o.pincount + 1,
                ..o
            };
            if self.refcnt.cas(o, n) {
                return true;
            }
        }
    }

    /// Drops a pin. When the last pin leaves a masked node, the delete waiter
    /// queued on the node (if any) is signaled.
    pub fn unpin(&self) {
        let signal_id = loop {
            let o = self.refcnt.load();
            assert!(o.pincount > 0, "unpin with pincount already zero");
            let mut n = RWord {
                pincount: o.pincount - 1,
                ..o
            };
            let mut sig = NULLID;
            if n.pincount == 0 && o.mask && o.waitq != NULLID {
                sig = o.waitq;
                n.waitq = NULLID;
            }
            if self.refcnt.cas(o, n) {
                break sig;
            }
        };
        if signal_id != NULLID {
            // Only the delete waiter can be queued before the pincount first
            // reaches zero, so this chain has exactly one entry.
            let dom = crate::waiter::global_domain();
            let w = dom.id_lookup(signal_id);
            debug_assert_eq!(w.next_id(), NULLID);
            w.signal();
        }
    }

    /// Pin that succeeds even on a masked node, as long as someone else still
    /// holds a pin. Used to give backward iterators priority over a delete
    /// that has not yet been signaled to proceed.
    fn force_pin(&self) -> bool {
        loop {
            let o = self.refcnt.load();
            if o.pincount == 0 {
                return false;
            }
            assert!(o.pincount < MAX_PINCOUNT, "node pincount overflow");
            let n = RWord {
                pincount: o.pincount + 1,
                ..o
            };
            if self.refcnt.cas(o, n) {
                return true;
            }
        }
    }

    /// Queues the current thread's waiter on the node's refcnt waitq. Only
    /// valid once the node is masked with pincount zero (its delete is in
    /// flight) and while the caller holds a lock that keeps the node linked.
    fn refcnt_enqueue_waiter(&self) {
        let w = current_waiter();
        loop {
            let o = self.refcnt.load();
            debug_assert!(o.mask && o.pincount == 0);
            w.set_next(o.waitq);
            let n = RWord { waitq: w.id(), ..o };
            if self.refcnt.cas(o, n) {
                return;
            }
            w.set_next(NULLID);
        }
    }

    /// Detaches the whole refcnt waitq and returns its head id.
    fn refcnt_take_waitq(&self) -> u16 {
        loop {
            let o = self.refcnt.load();
            if o.waitq == NULLID {
                return NULLID;
            }
            let n = RWord {
                waitq: NULLID,
                ..o
            };
            if self.refcnt.cas(o, n) {
                return o.waitq;
            }
        }
    }

    /// Reinitializes a detached node for insertion: masked, pinned once by the
    /// inserter, links cleared.
    fn init_for_insert(&self) {
        self.lock.reset();
        self.refcnt.store(RWord {
            mask: true,
            pincount: 1,
            waitq: NULLID,
        });
        self.next.store(std::ptr::null_mut(), Ordering::Release);
        self.prev.store(std::ptr::null_mut(), Ordering::Release);
    }

    fn clear_mask(&self) {
        loop {
            let o = self.refcnt.load();
            debug_assert!(o.mask);
            let n = RWord { mask: false, ..o };
            if self.refcnt.cas(o, n) {
                return;
            }
        }
    }

    /// Raw link reads for quiescent-state checks, tests only.
    #[doc(hidden)]
    pub fn debug_next(&self) -> *mut AdlNode {
        self.next_ptr()
    }

    #[doc(hidden)]
    pub fn debug_prev(&self) -> *mut AdlNode {
        self.prev_ptr()
    }

    /// Racy snapshot of `(mask, pincount, waitq_head)`, tests only.
    #[doc(hidden)]
    pub fn debug_refcnt(&self) -> (bool, u16, u16) {
        let w = self.refcnt.load();
        (w.mask, w.pincount, w.waitq)
    }

    #[doc(hidden)]
    pub fn debug_lock(&self) -> &LwLock {
        &self.lock
    }
}

#[doc(hidden)]
pub fn raw_force_pin(node: &AdlNode) -> bool {
    node.force_pin()
}

#[doc(hidden)]
pub fn raw_refcnt_enqueue_waiter(node: &AdlNode) {
    node.refcnt_enqueue_waiter()
}

/// Outcome of the first delete phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemoveStart {
    /// The node was already masked by another delete; the caller's pin is
    /// still held.
    NotRemovable,
    /// Mask set and the caller's pin was the last one: go straight to
    /// [`AdList::remove_do`].
    Ready,
    /// Mask set but other pins remain; the caller's pin is still held and
    /// must be dropped via [`AdList::remove_wait_on_pincount`].
    MustWait,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Sentinel-bounded concurrent doubly-linked list.
///
/// All operations taking a `NonNull<AdlNode>` are `unsafe`: the caller must
/// guarantee the node is kept on this list for the duration of the call (by a
/// pin it holds, by owning the node's mask, or by a held neighbor lock) and
/// that the pointer stays valid.
pub struct AdList {
    head: Box<AdlNode>,
    tail: Box<AdlNode>,
}

impl Default for AdList {
    fn default() -> Self {
        Self::new()
    }
}

impl AdList {
    pub fn new() -> Self {
        let head = Box::new(AdlNode::new());
        let tail = Box::new(AdlNode::new());
        // Sentinels are permanently masked and carry a pincount floor so a
        // stray pin/force_pin could never select them for deletion.
        head.refcnt.store(RWord {
            mask: true,
            pincount: 1,
            waitq: NULLID,
        });
        tail.refcnt.store(RWord {
            mask: true,
            pincount: 1,
            waitq: NULLID,
        });
        let hp = &*head as *const AdlNode as *mut AdlNode;
        let tp = &*tail as *const AdlNode as *mut AdlNode;
        head.next.store(tp, Ordering::Release);
        tail.prev.store(hp, Ordering::Release);
        AdList { head, tail }
    }

    fn head_ptr(&self) -> *mut AdlNode {
        &*self.head as *const AdlNode as *mut AdlNode
    }

    fn tail_ptr(&self) -> *mut AdlNode {
        &*self.tail as *const AdlNode as *mut AdlNode
    }

    #[doc(hidden)]
    pub fn head_sentinel(&self) -> NonNull<AdlNode> {
        NonNull::new(self.head_ptr()).unwrap()
    }

    #[doc(hidden)]
    pub fn tail_sentinel(&self) -> NonNull<AdlNode> {
        NonNull::new(self.tail_ptr()).unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.head.next_ptr() == self.tail_ptr()
    }

    /// First unmasked node, pinned for the caller.
    pub fn first(&self) -> Option<NonNull<AdlNode>> {
        unsafe { self.neighbor(self.head_sentinel(), Direction::Forward) }
    }

    /// Last unmasked node, pinned for the caller.
    pub fn last(&self) -> Option<NonNull<AdlNode>> {
        unsafe { self.neighbor(self.tail_sentinel(), Direction::Backward) }
    }

    /// Nearest unmasked node after `n`, pinned for the caller.
    ///
    /// # Safety
    /// `n` must be pinned or masked by the caller (or be this list's head
    /// sentinel).
    pub unsafe fn next(&self, n: NonNull<AdlNode>) -> Option<NonNull<AdlNode>> {
        self.neighbor(n, Direction::Forward)
    }

    /// Nearest unmasked node before `n`, pinned for the caller.
    ///
    /// # Safety
    /// `n` must be pinned or masked by the caller (or be this list's tail
    /// sentinel).
    pub unsafe fn prev(&self, n: NonNull<AdlNode>) -> Option<NonNull<AdlNode>> {
        self.neighbor(n, Direction::Backward)
    }

    /// # Safety
    /// As [`next`](Self::next)/[`prev`](Self::prev).
    pub unsafe fn neighbor(
        &self,
        n: NonNull<AdlNode>,
        dir: Direction,
    ) -> Option<NonNull<AdlNode>> {
        match dir {
            Direction::Forward => self.neighbor_forward(n),
            Direction::Backward => self.neighbor_backward(n),
        }
    }

    /// Hand-over-hand walk along `next` links, all locks taken in canonical
    /// order. Masked nodes are stepped over while their lock pins them in
    /// place.
    unsafe fn neighbor_forward(&self, start: NonNull<AdlNode>) -> Option<NonNull<AdlNode>> {
        debug_assert!(start.as_ptr() != self.tail_ptr());
        let mut cur = start.as_ptr();
        (*cur).lock.lock(SHARED);
        loop {
            let m = (*cur).next_ptr();
            if m == self.tail_ptr() {
                (*cur).lock.unlock_fair();
                return None;
            }
            if (*m).pin() {
                (*cur).lock.unlock_fair();
                return Some(NonNull::new_unchecked(m));
            }
            // Masked: step onto it while holding its lock so it cannot be
            // unlinked from under us.
            (*m).lock.lock(SHARED);
            (*cur).lock.unlock_fair();
            cur = m;
        }
    }

    /// Walk along `prev` links. Skipping a masked node needs a force-pin (it
    /// keeps the node alive while we read its `prev`); if that fails the
    /// node's delete is already in flight, so we queue on its refcnt waitq,
    /// step out of the deleter's way and restart once the delete finished.
    unsafe fn neighbor_backward(&self, start: NonNull<AdlNode>) -> Option<NonNull<AdlNode>> {
        debug_assert!(start.as_ptr() != self.head_ptr());
        let mut cur = start.as_ptr();
        let mut cur_temp_pinned = false;
        let unpin_temp = |p: *mut AdlNode, temp: bool| {
            if temp {
                (*p).unpin();
            }
        };
        loop {
            (*cur).lock.lock(SHARED);
            let b = (*cur).prev_ptr();
            if b == self.head_ptr() {
                (*cur).lock.unlock_fair();
                unpin_temp(cur, cur_temp_pinned);
                return None;
            }
            if (*b).pin() {
                (*cur).lock.unlock_fair();
                unpin_temp(cur, cur_temp_pinned);
                return Some(NonNull::new_unchecked(b));
            }
            if (*b).force_pin() {
                // Priority over the delete: hop onto the masked node and
                // continue as if the walk had started there.
                (*cur).lock.unlock_fair();
                unpin_temp(cur, cur_temp_pinned);
                cur = b;
                cur_temp_pinned = true;
                continue;
            }
            // The delete of `b` was already signaled to proceed. Queue on its
            // refcnt waitq (safe: our lock on `cur` keeps `b` linked), get out
            // of the deleter's way, and restart from the still-pinned `cur`
            // once the delete finished.
            (*b).refcnt_enqueue_waiter();
            (*cur).lock.unlock_fair();
            current_waiter().wait();
        }
    }

    /// Inserts `fresh` right after `anchor`. Locks are taken in canonical
    /// order only.
    ///
    /// # Safety
    /// `anchor` must be pinned or masked by the caller (or be the head
    /// sentinel) and must not be the tail sentinel; `fresh` must be a
    /// detached node not reachable by any other thread.
    pub unsafe fn insert_after(&self, anchor: NonNull<AdlNode>, fresh: NonNull<AdlNode>) {
        self.insert_after_impl(anchor, fresh, true)
    }

    /// Like [`insert_after`](Self::insert_after) but leaves the node masked
    /// and pinned, i.e. permanently invisible. Used for dummy anchor nodes.
    #[doc(hidden)]
    pub unsafe fn insert_after_masked(&self, anchor: NonNull<AdlNode>, fresh: NonNull<AdlNode>) {
        self.insert_after_impl(anchor, fresh, false)
    }

    unsafe fn insert_after_impl(
        &self,
        anchor: NonNull<AdlNode>,
        fresh: NonNull<AdlNode>,
        unmask: bool,
    ) {
        let a = anchor.as_ptr();
        let n = fresh.as_ptr();
        debug_assert!(a != self.tail_ptr());
        (*n).init_for_insert();
        (*a).lock.lock(EXCLUSIVE);
        let c = (*a).next_ptr();
        (*c).lock.lock(EXCLUSIVE);
        (*n).prev.store(a, Ordering::Release);
        (*n).next.store(c, Ordering::Release);
        (*a).next.store(n, Ordering::Release);
        (*c).prev.store(n, Ordering::Release);
        if unmask {
            // Serialization point of the insert. The node stays pinned for
            // the caller.
            (*n).clear_mask();
        }
        (*c).lock.unlock_fair();
        (*a).lock.unlock_fair();
    }

    /// Inserts `fresh` right before `anchor`. The predecessor's lock is
    /// against canonical order, so it is taken with `async_lock`; on
    /// contention we release the anchor, wait for the guaranteed grant,
    /// reacquire in canonical order and revalidate the neighborhood.
    ///
    /// # Safety
    /// `anchor` must be pinned or masked by the caller (or be the tail
    /// sentinel) and must not be the head sentinel; `fresh` must be a
    /// detached node not reachable by any other thread.
    pub unsafe fn insert_before(&self, anchor: NonNull<AdlNode>, fresh: NonNull<AdlNode>) {
        let b = anchor.as_ptr();
        let n = fresh.as_ptr();
        debug_assert!(b != self.head_ptr());
        (*n).init_for_insert();
        (*b).lock.lock(EXCLUSIVE);
        loop {
            let a = (*b).prev_ptr();
            if !(*a).lock.async_lock(EXCLUSIVE) {
                (*b).lock.unlock_fair();
                current_waiter().wait();
                (*b).lock.lock(EXCLUSIVE);
                if (*b).prev_ptr() != a {
                    // The predecessor was deleted or nodes were spliced in
                    // between while we waited; hand its lock onward and
                    // resume from the still pinned/masked anchor.
                    (*a).lock.unlock_fair();
                    continue;
                }
            }
            (*n).prev.store(a, Ordering::Release);
            (*n).next.store(b, Ordering::Release);
            (*a).next.store(n, Ordering::Release);
            (*b).prev.store(n, Ordering::Release);
            (*n).clear_mask();
            (*a).lock.unlock_fair();
            (*b).lock.unlock_fair();
            return;
        }
    }

    /// Insert at the very front of the list.
    ///
    /// # Safety
    /// `fresh` must be a detached node not reachable by any other thread.
    pub unsafe fn push_front(&self, fresh: NonNull<AdlNode>) {
        self.insert_after(self.head_sentinel(), fresh)
    }

    /// Append at the end of the list.
    ///
    /// # Safety
    /// `fresh` must be a detached node not reachable by any other thread.
    pub unsafe fn push_back(&self, fresh: NonNull<AdlNode>) {
        self.insert_before(self.tail_sentinel(), fresh)
    }

    /// First delete phase: try to set the mask bit.
    ///
    /// # Safety
    /// The caller must hold a pin on `n`; `n` must not be a sentinel.
    pub unsafe fn remove_start(&self, n: NonNull<AdlNode>) -> RemoveStart {
        let node = n.as_ref();
        loop {
            let o = node.refcnt.load();
            if o.mask {
                return RemoveStart::NotRemovable;
            }
            debug_assert!(o.pincount >= 1, "remove_start requires a held pin");
            let ready = o.pincount == 1;
            let n2 = RWord {
                mask: true,
                // The caller's pin is consumed atomically when it is the last
                // one; otherwise it stays held for now.
                pincount: if ready { 0 } else { o.pincount },
                waitq: o.waitq,
            };
            if node.refcnt.cas(o, n2) {
                return if ready {
                    RemoveStart::Ready
                } else {
                    RemoveStart::MustWait
                };
            }
        }
    }

    /// Second delete phase: drops the caller's pin and, if other pins remain,
    /// queues the caller's waiter — both in a single CAS — then blocks until
    /// the last unpin signals. On return the pincount is zero.
    ///
    /// # Safety
    /// [`remove_start`](Self::remove_start) must have returned `MustWait` for
    /// `n` with the caller as the masking thread. The caller must not hold a
    /// pin on any other node while blocking here.
    pub unsafe fn remove_wait_on_pincount(&self, n: NonNull<AdlNode>) {
        let node = n.as_ref();
        let w = current_waiter();
        let enqueued = loop {
            let o = node.refcnt.load();
            debug_assert!(o.mask && o.pincount >= 1);
            let mut n2 = RWord {
                pincount: o.pincount - 1,
                ..o
            };
            let enq = n2.pincount > 0;
            if enq {
                debug_assert_eq!(o.waitq, NULLID, "second delete waiter on a node");
                w.set_next(NULLID);
                n2.waitq = w.id();
            }
            if node.refcnt.cas(o, n2) {
                break enq;
            }
        };
        if enqueued {
            w.wait();
        }
        debug_assert_eq!(node.refcnt.load().pincount, 0);
    }

    /// Final delete phase: splices the node out and runs the clear-node
    /// handshake. When this returns, no thread references `n` in any way and
    /// the caller may reclaim its memory immediately.
    ///
    /// # Safety
    /// `n` must be masked by the caller with pincount zero (the unique
    /// in-flight delete of this node).
    pub unsafe fn remove_do(&self, n: NonNull<AdlNode>) {
        let b = n.as_ptr();
        (*b).lock.lock(EXCLUSIVE);
        loop {
            let a = (*b).prev_ptr();
            if !(*a).lock.async_lock(EXCLUSIVE) {
                (*b).lock.unlock_fair();
                current_waiter().wait();
                (*b).lock.lock(EXCLUSIVE);
                if (*b).prev_ptr() != a {
                    // Predecessor deleted (it is off-list, in its own clear
                    // stage) or nodes were inserted in between: either way,
                    // pass its lock on and restart from our own node.
                    (*a).lock.unlock_fair();
                    continue;
                }
            }
            let c = (*b).next_ptr();
            (*c).lock.lock(EXCLUSIVE);
            (*a).next.store(c, Ordering::Release);
            (*c).prev.store(a, Ordering::Release);
            // Tombstone self-links: the node is now unreachable from the
            // list, and any thread that still gets its lock during the
            // handshake below can recognize the corpse.
            (*b).next.store(b, Ordering::Release);
            (*b).prev.store(b, Ordering::Release);
            (*c).lock.unlock_fair();
            (*a).lock.unlock_fair();
            break;
        }
        // Clear-node handshake. First wake the backward iterators parked on
        // the refcnt waitq; the node is off the list, so no new ones can
        // arrive.
        let mut id = (*b).refcnt_take_waitq();
        let dom = crate::waiter::global_domain();
        while id != NULLID {
            let w = dom.id_lookup(id);
            let next = w.next_id();
            w.set_next(NULLID);
            w.signal();
            id = next;
        }
        // Then cycle our own lock through every thread still queued on it
        // (async-lockers that saw this node as a neighbor before the splice).
        // Each of them revalidates, loses interest and passes the lock on;
        // once it comes back to us nobody else can be touching the node.
        let got = (*b).lock.async_lock(EXCLUSIVE);
        debug_assert!(!got, "own lock must already be held");
        (*b).lock.unlock_fair();
        current_waiter().wait();
        (*b).lock.unlock_fair();
    }

    /// Deletes `n` from the list: the three remove phases in sequence.
    /// Returns `false` iff another thread already masked the node (the
    /// caller's pin is still held in that case).
    ///
    /// # Safety
    /// The caller must hold a pin on `n` (not a mask) and, because this can
    /// block on the pincount, must not hold a pin on any other node.
    pub unsafe fn delete(&self, n: NonNull<AdlNode>) -> bool {
        match self.remove_start(n) {
            RemoveStart::NotRemovable => false,
            RemoveStart::Ready => {
                self.remove_do(n);
                true
            }
            RemoveStart::MustWait => {
                self.remove_wait_on_pincount(n);
                self.remove_do(n);
                true
            }
        }
    }

    /// Removes and returns the first node, or `None` when the list is empty.
    /// Retries from the sentinel if it loses the masking race.
    pub fn pop_front(&self) -> Option<NonNull<AdlNode>> {
        self.end_remove(Direction::Forward)
    }

    /// Removes and returns the last node, or `None` when the list is empty.
    pub fn pop_back(&self) -> Option<NonNull<AdlNode>> {
        self.end_remove(Direction::Backward)
    }

    fn end_remove(&self, dir: Direction) -> Option<NonNull<AdlNode>> {
        loop {
            let n = match dir {
                Direction::Forward => self.first(),
                Direction::Backward => self.last(),
            }?;
            unsafe {
                if self.delete(n) {
                    return Some(n);
                }
                n.as_ref().unpin();
            }
        }
    }

    /// Directional cursor; see [`Iter`].
    pub fn iter(&self, dir: Direction) -> Iter<'_> {
        Iter {
            list: self,
            dir,
            cur: None,
            started: false,
            replay: false,
        }
    }
}

// Sentinels are owned boxes; nodes are only reachable through synchronized
// operations.
unsafe impl Send for AdList {}
unsafe impl Sync for AdList {}

impl Drop for AdList {
    fn drop(&mut self) {
        debug_assert!(
            self.is_empty(),
            "AdList dropped while still holding client nodes"
        );
    }
}

/// Directional cursor over an [`AdList`]. It keeps exactly one pin: on the
/// node it last returned. Single-owner; it may move between threads but must
/// not be shared concurrently.
pub struct Iter<'a> {
    list: &'a AdList,
    dir: Direction,
    cur: Option<NonNull<AdlNode>>,
    started: bool,
    /// When set, `cur` was positioned by `pop_current` and has not been
    /// yielded yet; the next `next_node` returns it as-is.
    replay: bool,
}

unsafe impl Send for Iter<'_> {}

impl<'a> Iter<'a> {
    /// Advances and returns the next unmasked node in the iterator's
    /// direction, pinned; the pin on the previously returned node is dropped.
    /// Returns `None` at the end of the list (all pins dropped).
    pub fn next_node(&mut self) -> Option<NonNull<AdlNode>> {
        if self.replay {
            self.replay = false;
            return self.cur;
        }
        let next = if !self.started {
            self.started = true;
            match self.dir {
                Direction::Forward => self.list.first(),
                Direction::Backward => self.list.last(),
            }
        } else {
            match self.cur {
                None => return None,
                Some(c) => unsafe { self.list.neighbor(c, self.dir) },
            }
        };
        if let Some(old) = self.cur.take() {
            unsafe { old.as_ref().unpin() };
        }
        self.cur = next;
        next
    }

    /// Deletes the node the iterator is on and advances past it. Returns the
    /// removed node (the caller owns its memory), or `None` if a concurrent
    /// delete won the masking race.
    ///
    /// Panics if the iterator has no current node.
    pub fn pop_current(&mut self) -> Option<NonNull<AdlNode>> {
        let n = self
            .cur
            .take()
            .expect("pop_current with no current node");
        unsafe {
            match self.list.remove_start(n) {
                RemoveStart::NotRemovable => {
                    let m = self.list.neighbor(n, self.dir);
                    n.as_ref().unpin();
                    self.resume_at(m);
                    None
                }
                RemoveStart::Ready => {
                    // We own the mask, so the node is a valid anchor until
                    // remove_do unlinks it.
                    let m = self.list.neighbor(n, self.dir);
                    self.list.remove_do(n);
                    self.resume_at(m);
                    Some(n)
                }
                RemoveStart::MustWait => {
                    // Our pin is consumed here and we hold no other, so
                    // blocking on the pincount cannot deadlock.
                    self.list.remove_wait_on_pincount(n);
                    let m = self.list.neighbor(n, self.dir);
                    self.list.remove_do(n);
                    self.resume_at(m);
                    Some(n)
                }
            }
        }
    }

    fn resume_at(&mut self, m: Option<NonNull<AdlNode>>) {
        self.cur = m;
        self.replay = m.is_some();
    }

    /// Releases the held pin, if any. Dropping the iterator does the same.
    pub fn destroy(mut self) {
        self.release();
    }

    fn release(&mut self) {
        if let Some(c) = self.cur.take() {
            unsafe { c.as_ref().unpin() };
        }
        self.replay = false;
    }
}

impl Drop for Iter<'_> {
    fn drop(&mut self) {
        self.release();
    }
}
