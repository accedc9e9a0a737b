//! Uniform-access workload: every thread inserts and removes only its own
//! elements, in batches, at random positions, with short iterations over the
//! interleaved foreign elements in between.
//!
//! All random decisions are precomputed per thread from the seed before the
//! clock starts, so a given seed produces identical operation sequences for
//! both implementations and across repeats.

use crate::config::{Config, ImplKind};
use crate::dlist::MutexDlist;
use adlist::{AdList, AdlNode, Direction};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::ptr::NonNull;
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::Instant;

#[derive(Clone, Copy)]
enum InsertChoice {
    Front,
    Back,
    AfterPrev,
    BeforePrev,
}

struct BatchPlan {
    choices: Vec<InsertChoice>,
    removal: Vec<u32>,
    iter_forward: bool,
    iter_steps: usize,
}

fn plan_thread(cfg: &Config, t: u64, repeat: u64) -> Vec<BatchPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (t << 24) ^ (repeat << 48));
    (0..cfg.batches)
        .map(|_| {
            let choices = (0..cfg.batch_size)
                .map(|i| {
                    if i == 0 {
                        // no previous element in this batch yet
                        if rng.gen_bool(0.5) {
                            InsertChoice::Front
                        } else {
                            InsertChoice::Back
                        }
                    } else {
                        match rng.gen_range(0..4) {
                            0 => InsertChoice::Front,
                            1 => InsertChoice::Back,
                            2 => InsertChoice::AfterPrev,
                            _ => InsertChoice::BeforePrev,
                        }
                    }
                })
                .collect();
            let mut removal: Vec<u32> = (0..cfg.batch_size as u32).collect();
            removal.shuffle(&mut rng);
            BatchPlan {
                choices,
                removal,
                iter_forward: rng.gen_bool(0.5),
                iter_steps: rng.gen_range(0..8),
            }
        })
        .collect()
}

/// One timed repeat; returns wall seconds from the start barrier to the last
/// worker finishing.
pub fn run_once(cfg: &Config, repeat: usize) -> f64 {
    match cfg.impl_kind {
        ImplKind::Dlist => run_once_dlist(cfg, repeat),
        ImplKind::Adlist => run_once_adlist(cfg, repeat),
        ImplKind::AdlistDummy => unreachable!("rejected by config validation"),
    }
}

fn run_once_adlist(cfg: &Config, repeat: usize) -> f64 {
    let list = Arc::new(AdList::new());
    let barrier = Arc::new(Barrier::new(cfg.threads + 1));
    let mut hs = Vec::new();
    for t in 0..cfg.threads {
        let plans = plan_thread(cfg, t as u64, repeat as u64);
        let l = Arc::clone(&list);
        let b = Arc::clone(&barrier);
        let batch = cfg.batch_size;
        hs.push(thread::spawn(move || {
            // thread-local nodes, reused every batch
            let mut nodes: Vec<AdlNode> = Vec::with_capacity(batch);
            nodes.resize_with(batch, AdlNode::new);
            let handles: Vec<NonNull<AdlNode>> =
                nodes.iter_mut().map(NonNull::from).collect();
            b.wait();
            for plan in &plans {
                for (i, c) in plan.choices.iter().enumerate() {
                    let n = handles[i];
                    unsafe {
                        match c {
                            InsertChoice::Front => l.push_front(n),
                            InsertChoice::Back => l.push_back(n),
                            InsertChoice::AfterPrev | InsertChoice::BeforePrev => {
                                let a = handles[i - 1];
                                let ok = a.as_ref().pin();
                                debug_assert!(ok, "own element cannot be masked");
                                if matches!(c, InsertChoice::AfterPrev) {
                                    l.insert_after(a, n);
                                } else {
                                    l.insert_before(a, n);
                                }
                                a.as_ref().unpin();
                            }
                        }
                        n.as_ref().unpin();
                    }
                }
                let mut it = l.iter(if plan.iter_forward {
                    Direction::Forward
                } else {
                    Direction::Backward
                });
                for _ in 0..plan.iter_steps {
                    if it.next_node().is_none() {
                        break;
                    }
                }
                drop(it);
                for &r in &plan.removal {
                    let n = handles[r as usize];
                    unsafe {
                        let ok = n.as_ref().pin();
                        debug_assert!(ok);
                        let deleted = l.delete(n);
                        debug_assert!(deleted, "nobody else deletes our elements");
                    }
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
    assert!(list.is_empty(), "uniform run must drain the list");
    secs
}

fn run_once_dlist(cfg: &Config, repeat: usize) -> f64 {
    let list = Arc::new(MutexDlist::new(cfg.threads * cfg.batch_size));
    let barrier = Arc::new(Barrier::new(cfg.threads + 1));
    let mut hs = Vec::new();
    for t in 0..cfg.threads {
        let plans = plan_thread(cfg, t as u64, repeat as u64);
        let l = Arc::clone(&list);
        let b = Arc::clone(&barrier);
        let batch = cfg.batch_size;
        hs.push(thread::spawn(move || {
            let base = t * batch;
            b.wait();
            for plan in &plans {
                for (i, c) in plan.choices.iter().enumerate() {
                    match c {
                        InsertChoice::Front => l.push_front(base + i),
                        InsertChoice::Back => l.push_back(base + i),
                        InsertChoice::AfterPrev => l.insert_after(base + i - 1, base + i),
                        InsertChoice::BeforePrev => l.insert_before(base + i - 1, base + i),
                    }
                }
                let _ = l.walk(plan.iter_steps, plan.iter_forward);
                for &r in &plan.removal {
                    let removed = l.remove(base + r as usize);
                    debug_assert!(removed);
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
    assert!(list.is_empty(), "uniform run must drain the list");
    secs
}
