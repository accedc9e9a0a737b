//! The "dlist" baseline: an index-arena doubly-linked list under one global
//! mutex. Handles are arena indices, so insert/remove/move are O(1) just like
//! the adlist's; the only difference measured is the single-lock discipline.

use std::sync::Mutex;

const NONE: usize = usize::MAX;

struct Inner {
    next: Vec<usize>,
    prev: Vec<usize>,
    linked: Vec<bool>,
    head: usize, // sentinel index
    tail: usize,
    len: usize,
}

pub struct MutexDlist {
    inner: Mutex<Inner>,
}

impl MutexDlist {
    /// A list over `capacity` elements (handles `0..capacity`), all initially
    /// unlinked.
    pub fn new(capacity: usize) -> Self {
        let head = capacity;
        let tail = capacity + 1;
        let mut next = vec![NONE; capacity + 2];
        let mut prev = vec![NONE; capacity + 2];
        next[head] = tail;
        prev[tail] = head;
        MutexDlist {
            inner: Mutex::new(Inner {
                next,
                prev,
                linked: vec![false; capacity],
                head,
                tail,
                len: 0,
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push_front(&self, i: usize) {
        let mut g = self.inner.lock().unwrap();
        let h = g.head;
        g.link_after(h, i);
    }

    pub fn push_back(&self, i: usize) {
        let mut g = self.inner.lock().unwrap();
        let t = g.tail;
        let p = g.prev[t];
        g.link_after(p, i);
    }

    /// Inserts `i` right after linked element `a`.
    pub fn insert_after(&self, a: usize, i: usize) {
        let mut g = self.inner.lock().unwrap();
        debug_assert!(g.linked[a]);
        g.link_after(a, i);
    }

    /// Inserts `i` right before linked element `a`.
    pub fn insert_before(&self, a: usize, i: usize) {
        let mut g = self.inner.lock().unwrap();
        debug_assert!(g.linked[a]);
        let p = g.prev[a];
        g.link_after(p, i);
    }

    /// Unlinks `i`; `false` if it was not on the list.
    pub fn remove(&self, i: usize) -> bool {
        let mut g = self.inner.lock().unwrap();
        if !g.linked[i] {
            return false;
        }
        g.unlink(i);
        true
    }

    /// Moves `i` to the front; `false` if it was not on the list.
    pub fn move_to_head(&self, i: usize) -> bool {
        let mut g = self.inner.lock().unwrap();
        if !g.linked[i] {
            return false;
        }
        g.unlink(i);
        let h = g.head;
        g.link_after(h, i);
        true
    }

    pub fn pop_front(&self) -> Option<usize> {
        let mut g = self.inner.lock().unwrap();
        let i = g.next[g.head];
        if i == g.tail {
            return None;
        }
        g.unlink(i);
        Some(i)
    }

    pub fn pop_back(&self) -> Option<usize> {
        let mut g = self.inner.lock().unwrap();
        let i = g.prev[g.tail];
        if i == g.head {
            return None;
        }
        g.unlink(i);
        Some(i)
    }

    pub fn is_linked(&self, i: usize) -> bool {
        self.inner.lock().unwrap().linked[i]
    }

    /// Walks up to `k` elements from the given end under the lock.
    pub fn walk(&self, k: usize, forward: bool) -> Vec<usize> {
        let g = self.inner.lock().unwrap();
        let mut out = Vec::new();
        let mut c = if forward { g.next[g.head] } else { g.prev[g.tail] };
        while out.len() < k {
            if c == g.tail || c == g.head {
                break;
            }
            out.push(c);
            c = if forward { g.next[c] } else { g.prev[c] };
        }
        out
    }

    /// Full front-to-back snapshot.
    pub fn to_vec(&self) -> Vec<usize> {
        self.walk(usize::MAX, true)
    }
}

impl Inner {
    fn link_after(&mut self, a: usize, i: usize) {
        debug_assert!(i < self.linked.len() && !self.linked[i]);
        let c = self.next[a];
        self.next[i] = c;
        self.prev[i] = a;
        self.next[a] = i;
        self.prev[c] = i;
        self.linked[i] = true;
        self.len += 1;
    }

    fn unlink(&mut self, i: usize) {
        debug_assert!(self.linked[i]);
        let (p, n) = (self.prev[i], self.next[i]);
        self.next[p] = n;
        self.prev[n] = p;
        self.next[i] = NONE;
        self.prev[i] = NONE;
        self.linked[i] = false;
        self.len -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_order() {
        let l = MutexDlist::new(8);
        l.push_back(0);
        l.push_back(1);
        l.push_front(2);
        assert_eq!(l.to_vec(), vec![2, 0, 1]);
        l.insert_after(0, 3);
        l.insert_before(2, 4);
        assert_eq!(l.to_vec(), vec![4, 2, 0, 3, 1]);
        assert_eq!(l.len(), 5);
    }

    #[test]
    fn remove_and_move() {
        let l = MutexDlist::new(4);
        for i in 0..4 {
            l.push_back(i);
        }
        assert!(l.remove(2));
        assert!(!l.remove(2));
        assert!(l.move_to_head(3));
        assert_eq!(l.to_vec(), vec![3, 0, 1]);
        assert!(!l.move_to_head(2));
    }

    #[test]
    fn pops_both_ends() {
        let l = MutexDlist::new(3);
        assert_eq!(l.pop_front(), None);
        assert_eq!(l.pop_back(), None);
        for i in 0..3 {
            l.push_back(i);
        }
        assert_eq!(l.pop_front(), Some(0));
        assert_eq!(l.pop_back(), Some(2));
        assert_eq!(l.pop_back(), Some(1));
        assert!(l.is_empty());
    }

    #[test]
    fn walk_truncates() {
        let l = MutexDlist::new(10);
        for i in 0..10 {
            l.push_back(i);
        }
        assert_eq!(l.walk(3, true), vec![0, 1, 2]);
        assert_eq!(l.walk(3, false), vec![9, 8, 7]);
    }
}
