//! Randomized single-threaded differential testing: every operation sequence
//! must leave the adlist observably identical to a reference deque.

use adlist::lru::BaselineList;
use adlist::{AdList, AdlNode, Direction};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::HashMap;
use std::ptr::NonNull;

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

fn val(n: NonNull<AdlNode>) -> u64 {
    unsafe { (*n.as_ptr().cast::<Elem>()).val }
}

unsafe fn reclaim(n: NonNull<AdlNode>) {
    drop(Box::from_raw(n.as_ptr().cast::<Elem>()));
}

fn forward_vals(list: &AdList) -> Vec<u64> {
    let mut out = Vec::new();
    let mut it = list.iter(Direction::Forward);
    while let Some(n) = it.next_node() {
        out.push(val(n));
    }
    out
}

fn backward_vals(list: &AdList) -> Vec<u64> {
    let mut out = Vec::new();
    let mut it = list.iter(Direction::Backward);
    while let Some(n) = it.next_node() {
        out.push(val(n));
    }
    out
}

/// Runs one random op sequence against both implementations, comparing every
/// observable output and the final walks. Returns the op count executed.
pub fn run_sequence(seed: u64, ops: usize) -> usize {
    let mut rng = StdRng::seed_from_u64(seed);
    let oracle: BaselineList<u64> = BaselineList::new();
    let list = AdList::new();
    let mut handles: HashMap<u64, usize> = HashMap::new();
    let mut next_id = seed.wrapping_mul(1 << 20);
    let mut done = 0;
    for _ in 0..ops {
        match rng.gen_range(0..8) {
            0 => {
                let v = next_id;
                next_id += 1;
                oracle.push_front(v);
                let n = new_elem(v);
                unsafe {
                    list.push_front(n);
                    n.as_ref().unpin();
                }
                handles.insert(v, n.as_ptr() as usize);
            }
            1 => {
                let v = next_id;
                next_id += 1;
                oracle.push_back(v);
                let n = new_elem(v);
                unsafe {
                    list.push_back(n);
                    n.as_ref().unpin();
                }
                handles.insert(v, n.as_ptr() as usize);
            }
            2 => {
                let x = oracle.pop_front();
                let y = list.pop_front();
                assert_eq!(x, y.map(val));
                if let Some(n) = y {
                    handles.remove(&val(n));
                    unsafe { reclaim(n) };
                }
            }
            3 => {
                let x = oracle.pop_back();
                let y = list.pop_back();
                assert_eq!(x, y.map(val));
                if let Some(n) = y {
                    handles.remove(&val(n));
                    unsafe { reclaim(n) };
                }
            }
            4 => {
                // delete a random live element by handle
                if let Some((&v, &p)) = handles.iter().nth(rng.gen_range(0..handles.len().max(1)).min(handles.len().saturating_sub(1))) {
                    assert!(oracle.remove(&v));
                    let n = NonNull::new(p as *mut AdlNode).unwrap();
                    unsafe {
                        assert!(n.as_ref().pin());
                        assert!(list.delete(n));
                        reclaim(n);
                    }
                    handles.remove(&v);
                }
            }
            5 => {
                // insert before/after a random live anchor
                if let Some((&a, &p)) = handles.iter().nth(rng.gen_range(0..handles.len().max(1)).min(handles.len().saturating_sub(1))) {
                    let v = next_id;
                    next_id += 1;
                    let before = rng.gen_bool(0.5);
                    {
                        let snap = oracle.to_vec();
                        let i = snap.iter().position(|&x| x == a).unwrap();
                        // rebuild oracle with the insertion (oracle is cheap)
                        let mut rebuilt: Vec<u64> = snap;
                        rebuilt.insert(if before { i } else { i + 1 }, v);
                        while oracle.pop_front().is_some() {}
                        for x in rebuilt {
                            oracle.push_back(x);
                        }
                    }
                    let anchor = NonNull::new(p as *mut AdlNode).unwrap();
                    let n = new_elem(v);
                    unsafe {
                        assert!(anchor.as_ref().pin());
                        if before {
                            list.insert_before(anchor, n);
                        } else {
                            list.insert_after(anchor, n);
                        }
                        n.as_ref().unpin();
                        anchor.as_ref().unpin();
                    }
                    handles.insert(v, n.as_ptr() as usize);
                }
            }
            6 => {
                // partial forward iteration with occasional pop_current
                let take = rng.gen_range(0..6);
                let snap = oracle.to_vec();
                let mut it = list.iter(Direction::Forward);
                let mut idx = 0usize;
                for _ in 0..take {
                    match it.next_node() {
                        Some(n) => {
                            assert_eq!(val(n), snap[idx]);
                            if rng.gen_bool(0.2) {
                                let v = val(n);
                                let dead = it.pop_current().unwrap();
                                assert!(oracle.remove(&v));
                                handles.remove(&v);
                                unsafe { reclaim(dead) };
                            }
                            idx += 1;
                        }
                        None => {
                            assert_eq!(idx, snap.len());
                            break;
                        }
                    }
                }
            }
            _ => {
                assert_eq!(oracle.to_vec(), forward_vals(&list));
                let mut rev = backward_vals(&list);
                rev.reverse();
                assert_eq!(oracle.to_vec(), rev);
                assert_eq!(oracle.is_empty(), list.is_empty());
            }
        }
        done += 1;
    }
    assert_eq!(oracle.to_vec(), forward_vals(&list));
    while let Some(n) = list.pop_front() {
        unsafe { reclaim(n) };
    }
    done
}

#[test]
fn randomized_sequences_match_oracle() {
    for seed in 0..1500u64 {
        run_sequence(seed, 40);
    }
}

#[test]
fn long_sequences_match_oracle() {
    for seed in 10_000..10_020u64 {
        run_sequence(seed, 2000);
    }
}
