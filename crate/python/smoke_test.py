#!/usr/bin/env python3
"""Smoke test for the adlist_py extension module.

Builds nothing itself: expects the cdylib at target/release (run
`cargo build -p adlist-py --release` first), copies it next to this script
under the importable name, then exercises every exposed type.
"""

import shutil
import sys
import threading
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def import_module():
    so = ROOT / "target" / "release" / "libadlist_py.so"
    if not so.exists():
        sys.exit(f"build the extension first: cargo build -p adlist-py --release "
                 f"(missing {so})")
    dest = Path(__file__).resolve().parent / "adlist_py.so"
    shutil.copyfile(so, dest)
    sys.path.insert(0, str(dest.parent))
    import adlist_py
    return adlist_py


def test_list(m):
    l = m.List()
    assert l.is_empty() and len(l) == 0
    for v in (1, 2, 3):
        l.push_back(v)
    l.push_front(0)
    assert l.to_list() == [0, 1, 2, 3]
    assert l.to_list_reversed() == [3, 2, 1, 0]
    assert l.remove(2)
    assert not l.remove(2)
    assert l.pop_front() == 0
    assert l.pop_back() == 3
    assert l.to_list() == [1]
    assert l.pop_front() == 1
    assert l.pop_front() is None


def test_list_threads(m):
    l = m.List()
    per = 2000

    def worker(t):
        for i in range(per):
            l.push_front(t * per + i)
        removed = 0
        while removed < per:
            # remove only our own values
            if l.remove(t * per + removed):
                removed += 1

    threads = [threading.Thread(target=worker, args=(t,)) for t in range(4)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert l.is_empty(), l.to_list()[:10]


def test_extended(m):
    e = m.ExtendedList(8, seed=42)
    assert e.dummy_count == 8
    for v in range(100):
        e.insert_at_head(v)
    assert sorted(e.to_list()) == list(range(100))
    assert len(e) == 100
    e.rebalance()
    assert sorted(e.to_list()) == list(range(100))
    got = [e.pop_back() for _ in range(100)]
    assert sorted(got) == list(range(100))
    assert e.pop_back() is None

    single = m.ExtendedList(1)
    for v in (1, 2, 3):
        single.insert_at_head(v)
    assert single.to_list() == [3, 2, 1]
    while single.pop_back() is not None:
        pass


def test_baseline(m):
    b = m.BaselineList()
    for v in (1, 2, 3):
        b.push_back(v)
    assert b.to_list() == [1, 2, 3]
    assert b.move_to_head(3)
    assert b.to_list() == [3, 1, 2]
    assert b.remove(1)
    assert b.pop_front() == 3
    assert b.pop_back() == 2
    assert b.pop_back() is None


def test_bench(m):
    out = m.run_bench("uniform", "adlist", threads=2, repeats=2, seed=7,
                      batch_size=16, batches=10)
    assert len(out) == 1
    g = out[0]
    assert g["workload"] == "uniform" and g["impl"] == "adlist"
    assert len(g["seconds"]) == 2 and g["mean"] >= 0.0

    out = m.run_bench("lru-warmup", "adlist-dummy", threads=2, repeats=1,
                      seed=3, picks=2000, inserts=2000, available=2000)
    assert out[0]["dummy_count"] == 64

    try:
        m.run_bench("dummy-sweep", "dlist", threads=1, repeats=1, seed=0)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid config must raise")


def main():
    m = import_module()
    for test in (test_list, test_list_threads, test_extended,
                 test_baseline, test_bench):
        test(m)
        print(f"{test.__name__}: ok")
    print("smoke test passed")


if __name__ == "__main__":
    main()
