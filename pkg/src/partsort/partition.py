"""Partition primitives shared by every partitioner.

Histograms use the cumulative convention: entry ``t`` is the number of keys
``<= probe[t]``. For a probe that is itself an input key, its global rank
(keys strictly smaller) is that count minus one.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .bsp import log2c, search_cost
from .keyspace import TaggedArray, TaggedKey


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(x).limit_denominator(10 ** 12)


@dataclass(frozen=True)
class TargetRange:
    i: int
    lo: int
    hi: int

    def __contains__(self, rank):
        return self.lo <= rank <= self.hi

    @property
    def width(self):
        return self.hi - self.lo


def target_range(i, n_total, p, eps):
    """Ranks within ``N*eps/(2p)`` of ``N*i/p``: ceil on the low end, floor on the high end."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    center = Fraction(n_total * i, p)
    half = Fraction(n_total) * _frac(eps) / (2 * p)
    lo = max(0, math.ceil(center - half))
    hi = min(n_total - 1, math.floor(center + half))
    return TargetRange(i, lo, hi)


def target_bounds(n_total, buckets, eps):
    """Vectors ``(lo, hi)`` of :func:`target_range` for splitters ``1 .. buckets-1``."""
    lo = np.empty(buckets - 1, dtype=np.int64)
    hi = np.empty(buckets - 1, dtype=np.int64)
    for i in range(1, buckets):
        t = target_range(i, n_total, buckets, eps)
        lo[i - 1], hi[i - 1] = t.lo, t.hi
    return lo, hi


@dataclass
class SplitterSet:
    """``p - 1`` splitter keys (sorted) and their global ranks.

    Bucket ``i`` receives keys ``>= keys[i-1]`` and ``< keys[i]``. A splitter
    may be the virtual ``+inf`` key (rank ``N``) when nothing better was seen.
    """

    keys: TaggedArray
    ranks: np.ndarray = None

    def __len__(self):
        return len(self.keys)

    def loads(self, n_total):
        r = np.concatenate([[0], np.asarray(self.ranks, dtype=np.int64), [n_total]])
        return np.diff(r)


@dataclass
class RepresentativeSample:
    """One random key per contiguous block of a processor's sorted data."""

    keys: object  # TaggedArray or uint64 array
    positions: np.ndarray
    local_size: int


def _is_tagged(x):
    return isinstance(x, TaggedArray)


def local_histogram(local_sorted, probes):
    """Count of local keys ``<= probe`` for every probe (probes must be sorted)."""
    if _is_tagged(probes):
        if not probes.is_sorted(strict=False):
            raise ValueError("probes must be sorted")
        return local_sorted.searchsorted(probes, side="right")
    probes = np.asarray(probes)
    if len(probes) > 1 and np.any(probes[1:] < probes[:-1]):
        raise ValueError("probes must be sorted")
    return np.searchsorted(np.asarray(local_sorted), probes, side="right").astype(np.int64)


def global_ranks(machine, local_hists):
    """Sum local histograms with a two-superstep reduction."""
    return machine.reduce_sum(local_hists)


def histogram_matrix(data, probes, right=True):
    """``(p, S)`` local counts of every processor's keys against ``probes``."""
    keys, tags, offsets = data.flat()
    return _kernels.seg_searchsorted(keys, tags, offsets, probes.keys, probes.tags, right=right)


def histogram_round(machine, data, local_samples, return_local=False):
    """Gather samples, broadcast them as probes and reduce their histogram.

    Returns ``(probes, counts)``: the sorted overall sample and, per probe,
    the global number of keys ``<= probe``. With ``return_local`` the
    ``(p, S)`` local count matrix is appended.
    """
    sizes = data.sizes()
    sample = machine.gather(local_samples)
    machine.compute(len(sample) * log2c(machine.p))
    probes = sample.sorted()
    machine.broadcast(probes)
    machine.compute([search_cost(len(probes), n) for n in sizes])
    local = histogram_matrix(data, probes)
    counts = machine.reduce_sum_matrix(local)
    if return_local:
        return probes, counts, local
    return probes, counts


def achieved_imbalance(loads, n_total, p):
    """``max(loads) * p / N - 1``, reported raw (no clamping at zero)."""
    return float(np.max(np.asarray(loads))) * p / n_total - 1.0


def is_globally_balanced(splitter_ranks, n_total, p, eps):
    ranks = list(splitter_ranks)
    if p <= 1:
        return True
    if len(ranks) != p - 1:
        raise ValueError("need p - 1 splitter ranks")
    return all(r in target_range(i, n_total, p, eps) for i, r in enumerate(ranks, start=1))


def bucket_bounds(local_sorted, splitters):
    """Local positions where each bucket starts: count of keys ``< splitter``."""
    return local_sorted.searchsorted(splitters.keys, side="left")


def route_messages(data, splitters, dest_of_bucket):
    """Per-source outboxes sending bucket ``b`` to ``dest_of_bucket(src, b)``."""
    outboxes = []
    for q, local in enumerate(data.per_proc):
        cuts = np.concatenate([[0], bucket_bounds(local, splitters), [len(local)]])
        box = {}
        for b in range(len(cuts) - 1):
            lo, hi = cuts[b], cuts[b + 1]
            if hi > lo:
                dst = dest_of_bucket(q, b)
                piece = local[lo:hi]
                box[dst] = piece if dst not in box else TaggedArray.concat([box[dst], piece])
        outboxes.append(box)
    return outboxes


def merge_inbox(inbox):
    """Merge the sorted runs received by one processor."""
    runs = [payload for _, payload in inbox]
    if not runs:
        return TaggedArray.empty()
    if len(runs) == 1:
        return runs[0]
    allk = TaggedArray.concat(runs)
    offsets = np.concatenate([[0], np.cumsum([len(r) for r in runs])])
    order = _kernels.merge_runs(allk.keys, allk.tags, offsets)
    return allk[order]


def exchange(machine, data, splitters, dest_of_bucket=None):
    """All-to-all by bucket followed by a local merge; returns the new distribution."""
    if dest_of_bucket is None:
        def dest_of_bucket(src, b):
            return b
    sizes = data.sizes()
    machine.compute([search_cost(len(splitters), n) for n in sizes])
    inboxes = machine.all_to_all(route_messages(data, splitters, dest_of_bucket))
    parts = [merge_inbox(box) for box in inboxes]
    machine.compute([len(x) * log2c(max(1, len(box))) for x, box in zip(parts, inboxes)])
    return data.with_parts(parts, locally_sorted=True)


def exact_split_adjust(machine, data, eps):
    """Shift keys between processors of a globally sorted distribution so that
    processor ``i`` holds exactly the ranks ``[floor(N i/p), floor(N (i+1)/p))``.

    ``data`` must be split within ``eps`` of the ideal boundaries (a global
    balance guarantee); a merely locally balanced split is rejected because
    the per-processor movement bound would not hold.
    """
    p, n = data.p, data.n_total
    have = data.offsets()
    want = np.array([(n * i) // p for i in range(p + 1)], dtype=np.int64)
    for i in range(1, p):
        if have[i] not in target_range(i, n, p, eps):
            raise ValueError(f"boundary {i} at rank {have[i]} is outside its target range; "
                             "input is not globally balanced")
    outboxes = []
    for q, local in enumerate(data.per_proc):
        box = {}
        lo_rank = have[q]
        for t in range(p):
            a = max(want[t], have[q]) - lo_rank
            b = min(want[t + 1], have[q + 1]) - lo_rank
            if b > a:
                box[t] = local[a:b]
        outboxes.append(box)
    inboxes = machine.all_to_all(outboxes)
    parts = [TaggedArray.concat([pl for _, pl in box]) for box in inboxes]
    moved = np.zeros(p, dtype=np.int64)
    for q, box in enumerate(outboxes):
        moved[q] = sum(len(v) for t, v in box.items() if t != q)
    out = data.with_parts(parts, locally_sorted=True)
    out.meta = dict(data.meta, moved=moved)
    return out


def build_representative_sample(local_sorted, s, rng):
    """One uniformly random key from each of ``s`` contiguous blocks.

    Block ``j`` covers positions ``[floor(j n/s), floor((j+1) n/s))``.
    """
    n = len(local_sorted)
    if not 1 <= s <= n:
        raise ValueError("need 1 <= s <= local size")
    edges = (np.arange(s + 1, dtype=np.int64) * n) // s
    widths = np.diff(edges)
    pos = edges[:-1] + np.floor(rng.random(s) * widths).astype(np.int64)
    pos = np.minimum(pos, edges[1:] - 1)
    return RepresentativeSample(local_sorted[pos], pos, n)


def approx_rank(key, samples, n_total, p, s):
    """``N r / (p s)`` where ``r`` counts representative keys ``<= key``."""
    if isinstance(key, TaggedKey):
        probe = TaggedArray.of([key])
        r = sum(int(smp.keys.searchsorted(probe, side="right")[0]) for smp in samples)
    else:
        r = sum(int(np.searchsorted(np.asarray(smp.keys), key, side="right")) for smp in samples)
    return n_total * r / (p * s)


def approx_ranks(keys, samples, n_total, p, s):
    """Vectorized :func:`approx_rank` over a sorted or unsorted TaggedArray of queries."""
    r = np.zeros(len(keys), dtype=np.int64)
    for smp in samples:
        r += smp.keys.searchsorted(keys, side="right")
    return n_total * r / (p * s)
