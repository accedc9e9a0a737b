//! A concurrent doubly-linked list ("adlist") built on compact waiter-based
//! synchronization primitives.
//!
//! The list permits inserts, deletes and iteration (in either direction) over
//! non-overlapping neighborhoods to run fully in parallel. Each node carries
//! only 8 bytes of synchronization state: a 4-byte fair reader-writer lock
//! ([`LwLock`]) guarding its links and a 4-byte reference-count word
//! ([`RefCount`]) controlling visibility and removability.
//!
//! Blocking anywhere in the library goes through per-thread [`Waiter`] cells
//! with 16-bit ids, so a queue of blocked threads fits in 16 bits of a lock
//! word. See the individual modules for details:
//!
//! - [`waiter`]: per-thread waiter cells, id table and the no-lost-signal event.
//! - [`lwlock`]: the 4-byte fair reader-writer lock with asynchronous acquisition.
//! - [`list`]: the adlist itself.
//! - [`lru`]: the dummy-node extended list for LRU-shaped workloads plus the
//!   single-mutex baseline list.

pub mod list;
pub mod lru;
pub mod lwlock;
pub mod waiter;

pub use list::{AdList, AdlNode, Direction, Iter, RefCount, RemoveStart};
pub use lwlock::LwLock;
pub use waiter::{current_waiter, Waiter, WaiterDomain, NULLID};

/// Test-only access to internals that the public API deliberately hides
/// (forced pins, refcnt waitq manipulation). Not part of the supported API.
#[doc(hidden)]
pub mod raw {
    pub use crate::list::raw_force_pin;
    pub use crate::list::raw_refcnt_enqueue_waiter;
    pub use crate::waiter::global_domain;
}
