import bisect
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partsort import _kernels

BACKENDS = _kernels.available_backends()
U64 = st.integers(0, (1 << 64) - 1)
SMALL = st.integers(0, 4)


def _sorted_pairs(pairs):
    pairs = sorted(pairs)
    keys = np.array([k for k, _ in pairs], dtype=np.uint64)
    tags = np.array([t for _, t in pairs], dtype=np.uint64)
    return pairs, keys, tags


def test_compiled_backend_is_built():
    assert "cython" in BACKENDS
    assert _kernels.BACKEND in BACKENDS


@pytest.mark.parametrize("backend", sorted(BACKENDS))
@settings(max_examples=150, deadline=None)
@given(data=st.lists(st.tuples(SMALL | U64, SMALL | U64), max_size=40),
       probes=st.lists(st.tuples(SMALL | U64, SMALL | U64), max_size=20))
def test_lex_searchsorted_matches_bisect(backend, data, probes):
    pairs, keys, tags = _sorted_pairs(data)
    pk = np.array([k for k, _ in probes], dtype=np.uint64)
    pt = np.array([t for _, t in probes], dtype=np.uint64)
    impl = BACKENDS[backend]
    right = _kernels.lex_searchsorted(keys, tags, pk, pt, True, impl=impl)
    left = _kernels.lex_searchsorted(keys, tags, pk, pt, False, impl=impl)
    assert right.tolist() == [bisect.bisect_right(pairs, p) for p in probes]
    assert left.tolist() == [bisect.bisect_left(pairs, p) for p in probes]


@pytest.mark.parametrize("backend", sorted(BACKENDS))
@settings(max_examples=100, deadline=None)
@given(segments=st.lists(st.lists(st.tuples(SMALL, SMALL), max_size=12), min_size=1, max_size=5),
       probes=st.lists(st.tuples(SMALL, SMALL), max_size=8))
def test_seg_searchsorted_per_segment(backend, segments, probes):
    segs = [sorted(s) for s in segments]
    flat = [x for s in segs for x in s]
    keys = np.array([k for k, _ in flat], dtype=np.uint64)
    tags = np.array([t for _, t in flat], dtype=np.uint64)
    offsets = np.concatenate([[0], np.cumsum([len(s) for s in segs])])
    pk = np.array([k for k, _ in probes], dtype=np.uint64)
    pt = np.array([t for _, t in probes], dtype=np.uint64)
    got = _kernels.seg_searchsorted(keys, tags, offsets, pk, pt, True, impl=BACKENDS[backend])
    assert got.shape == (len(segs), len(probes))
    want = [[bisect.bisect_right(s, p) for p in probes] for s in segs]
    assert got.tolist() == want


@pytest.mark.parametrize("backend", sorted(BACKENDS))
@settings(max_examples=100, deadline=None)
@given(runs=st.lists(st.lists(st.tuples(SMALL | U64, SMALL), max_size=10), max_size=6))
def test_merge_runs_is_stable_sorted_permutation(backend, runs):
    runs = [sorted(r) for r in runs]
    flat = [x for r in runs for x in r]
    keys = np.array([k for k, _ in flat], dtype=np.uint64)
    tags = np.array([t for _, t in flat], dtype=np.uint64)
    offsets = np.concatenate([[0], np.cumsum([len(r) for r in runs])]).astype(np.int64)
    order = _kernels.merge_runs(keys, tags, offsets, impl=BACKENDS[backend])
    assert sorted(order.tolist()) == list(range(len(flat)))
    assert [flat[i] for i in order] == sorted(flat)
    # equal pairs keep their run order
    assert order.tolist() == sorted(range(len(flat)), key=lambda i: flat[i])


def test_backends_agree_on_large_random_input():
    if len(BACKENDS) < 2:
        pytest.skip("only one backend")
    rng = np.random.default_rng(1)
    keys = np.sort(rng.integers(0, 1000, 5000, dtype=np.uint64))
    tags = rng.integers(0, 50, 5000, dtype=np.uint64)
    o = np.lexsort((tags, keys))
    keys, tags = keys[o], tags[o]
    pk = rng.integers(0, 1000, 300, dtype=np.uint64)
    pt = rng.integers(0, 50, 300, dtype=np.uint64)
    a = _kernels.lex_searchsorted(keys, tags, pk, pt, impl=BACKENDS["python"])
    b = _kernels.lex_searchsorted(keys, tags, pk, pt, impl=BACKENDS["cython"])
    assert np.array_equal(a, b)


def test_extreme_values_and_empty_inputs():
    top = (1 << 64) - 1
    keys = np.array([0, top, top], dtype=np.uint64)
    tags = np.array([top, 0, top], dtype=np.uint64)
    for impl in BACKENDS.values():
        got = _kernels.lex_searchsorted(keys, tags, np.array([top, 0], np.uint64),
                                        np.array([top, top], np.uint64), impl=impl)
        assert got.tolist() == [3, 1]
        empty = np.zeros(0, np.uint64)
        assert _kernels.lex_searchsorted(empty, empty, keys, tags, impl=impl).tolist() == [0, 0, 0]
        assert len(_kernels.merge_runs(empty, empty, np.array([0]), impl=impl)) == 0


def test_pure_python_switch():
    code = "import partsort._kernels as k; print(k.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"PARTSORT_PURE_PYTHON": "1", "PATH": ""},
                         capture_output=True, text=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("backend", sorted(BACKENDS))
@settings(max_examples=100, deadline=None)
@given(segments=st.lists(st.lists(st.tuples(SMALL, SMALL), max_size=30), min_size=1, max_size=4),
       probes=st.lists(st.tuples(SMALL, SMALL), min_size=1, max_size=40), right=st.booleans())
def test_seg_searchsorted_sorted_probes(backend, segments, probes, right):
    # sorted probes take the linear-walk path when it is cheaper
    segs = [sorted(s) for s in segments]
    probes = sorted(probes)
    flat = [x for s in segs for x in s]
    keys = np.array([k for k, _ in flat], dtype=np.uint64)
    tags = np.array([t for _, t in flat], dtype=np.uint64)
    offsets = np.concatenate([[0], np.cumsum([len(s) for s in segs])])
    pk = np.array([k for k, _ in probes], dtype=np.uint64)
    pt = np.array([t for _, t in probes], dtype=np.uint64)
    got = _kernels.seg_searchsorted(keys, tags, offsets, pk, pt, right, impl=BACKENDS[backend])
    find = bisect.bisect_right if right else bisect.bisect_left
    assert got.tolist() == [[find(s, p) for p in probes] for s in segs]
