"""Histogram sort with sampling.

Each round samples keys that fall inside the current splitter intervals
(every key independently, with probability ``b * s_j / N``), histograms the
sample, and tightens the interval around every ideal splitter rank. Finished
splitters are the seen keys ranked closest to ``N i / b``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bsp import log2c, search_cost
from .keyspace import POS_INF, STREAM_PARTITION, TAG_SHIFT, TaggedArray, TaggedKey, rng_for
from .partition import (
    SplitterSet, achieved_imbalance, exchange, histogram_matrix, histogram_round,
    is_globally_balanced, target_bounds,
)


@dataclass(frozen=True)
class SplitterInterval:
    """Bracket of splitter ``i``: ranks ``L < N i/p <= U`` and the keys holding them.

    ``key_lo``/``key_hi`` are ``None`` for the -inf/+inf sentinels.
    """

    i: int
    L: int
    U: int
    key_lo: TaggedKey = None
    key_hi: TaggedKey = None


@dataclass(frozen=True)
class RoundSchedule:
    k: int
    ratios: tuple


@dataclass
class PartitionStats:
    algo: str = "hss"
    rounds_run: int = 0
    extra_rounds: int = 0
    ratios: list = field(default_factory=list)
    sample_sizes: list = field(default_factory=list)
    gamma_sizes: list = field(default_factory=list)
    achieved_eps: float = float("nan")
    globally_balanced: bool = False
    splitter_ranks: np.ndarray = None
    cost: object = None
    clamped: bool = False
    warnings: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def total_rounds(self):
        return self.rounds_run + self.extra_rounds

    @property
    def total_sample(self):
        return int(sum(self.sample_sizes))


def schedule_ratios(k, p, eps):
    """``s_j = (2 ln p / eps) ** (j / k)`` for ``j = 1 .. k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if p < 2:
        raise ValueError("p must be >= 2")
    if not eps > 0:
        raise ValueError("eps must be positive")
    base = 2.0 * math.log(p) / eps
    if base <= 1.0:
        raise ValueError("2 ln(p)/eps <= 1: no histogramming needed")
    return RoundSchedule(int(k), tuple(base ** (j / k) for j in range(1, k + 1)))


def optimal_round_count(p, eps):
    """``max(1, round(ln(ln p / eps)))``, the minimizer of total sample size."""
    x = math.log(p) / eps
    if x <= 1.0:
        return 1
    return max(1, int(math.floor(math.log(x) + 0.5)))


def large_p_condition(p, eps):
    """True when ``2 ln p / eps <= sqrt(2 p / ln p)``, the regime of the interval bound."""
    return 2.0 * math.log(p) / eps <= math.sqrt(2.0 * p / math.log(p))


class IntervalState:
    """Bracketing ranks and keys of every splitter, as parallel arrays.

    ``L`` starts at the 0 sentinel and ``U`` at the ``N`` sentinel; ``has_lo``
    and ``has_hi`` tell whether a real sample key backs the bound.
    """

    def __init__(self, n_total, buckets, eps, procs=None):
        m = buckets - 1
        self.n = int(n_total)
        self.b = int(buckets)
        self.eps = eps
        self.i = np.arange(1, buckets, dtype=np.int64)
        self.num = self.n * self.i  # ideal rank is num / b
        self.split = -((-self.num) // self.b)  # ceil(N i / b)
        self.L = np.zeros(m, dtype=np.int64)
        self.U = np.full(m, self.n, dtype=np.int64)
        self.has_lo = np.zeros(m, dtype=bool)
        self.has_hi = np.zeros(m, dtype=bool)
        self.lo_keys = np.zeros(m, dtype=np.uint64)
        self.lo_tags = np.zeros(m, dtype=np.uint64)
        self.hi_keys = np.zeros(m, dtype=np.uint64)
        self.hi_tags = np.zeros(m, dtype=np.uint64)
        self.t_lo, self.t_hi = target_bounds(self.n, self.b, eps) if m else (self.L.copy(), self.U.copy())
        self.finalized = np.zeros(m, dtype=bool)
        # per-processor local counts (keys <= bound); bounds are earlier probes,
        # so each processor learned these from its own histogram
        self.lo_pos = self.hi_pos = None
        if procs is not None:
            self.lo_pos = np.zeros((procs, m), dtype=np.int64)
            self.hi_pos = np.zeros((procs, m), dtype=np.int64)

    def __len__(self):
        return len(self.L)

    def intervals(self):
        out = []
        for j in range(len(self)):
            klo = TaggedKey.from_tag(self.lo_keys[j], self.lo_tags[j]) if self.has_lo[j] else None
            khi = TaggedKey.from_tag(self.hi_keys[j], self.hi_tags[j]) if self.has_hi[j] else None
            out.append(SplitterInterval(int(self.i[j]), int(self.L[j]), int(self.U[j]), klo, khi))
        return out

    def all_finalized(self):
        return bool(self.finalized.all())

    def update(self, probes, ranks, local=None):
        """Tighten brackets with sample keys of known global rank; returns newly finalized indices.

        ``local`` is the ``(p, S)`` matrix of local counts of the probes and
        keeps the cached bracket positions current.
        """
        ranks = np.asarray(ranks, dtype=np.int64)
        if len(ranks):
            pos = np.searchsorted(ranks, self.split, side="left")
            below = pos > 0
            idx = np.where(below, pos - 1, 0)
            cand = ranks[idx]
            better = below & (~self.has_lo | (cand > self.L))
            self.L[better] = cand[better]
            self.lo_keys[better] = probes.keys[idx[better]]
            self.lo_tags[better] = probes.tags[idx[better]]
            if self.lo_pos is not None:
                self.lo_pos[:, better] = local[:, idx[better]]
            self.has_lo |= better
            above = pos < len(ranks)
            idx = np.where(above, pos, 0)
            cand = ranks[idx]
            better = above & (~self.has_hi | (cand < self.U))
            self.U[better] = cand[better]
            self.hi_keys[better] = probes.keys[idx[better]]
            self.hi_tags[better] = probes.tags[idx[better]]
            if self.hi_pos is not None:
                self.hi_pos[:, better] = local[:, idx[better]]
            self.has_hi |= better
        assert np.all(self.L <= self.split) and np.all(self.split <= self.U)
        rank, _, _, _ = self.closest()
        found = (rank >= self.t_lo) & (rank <= self.t_hi) & (self.has_lo | self.has_hi)
        newly = np.flatnonzero(found & ~self.finalized)
        self.finalized |= found
        return newly

    def closest(self):
        """Per splitter the seen key ranked closest to ``N i / b`` (ties to the lower rank)."""
        d_lo = self.num - self.L * self.b
        d_hi = self.U * self.b - self.num
        take_lo = self.has_lo & (~self.has_hi | (d_lo <= d_hi))
        take_hi = ~take_lo & self.has_hi
        rank = np.where(take_lo, self.L, np.where(take_hi, self.U, self.n))
        keys = np.where(take_lo, self.lo_keys, np.where(take_hi, self.hi_keys, np.uint64(POS_INF.key)))
        tags = np.where(take_lo, self.lo_tags, np.where(take_hi, self.hi_tags, np.uint64(POS_INF.tag)))
        return rank.astype(np.int64), keys.astype(np.uint64), tags.astype(np.uint64), take_lo | take_hi

    def splitters(self):
        rank, keys, tags, _ = self.closest()
        return SplitterSet(TaggedArray(keys, tags), rank)

    def active(self):
        """Distinct unfinished intervals as index array into the splitter arrays."""
        act = np.flatnonzero(~self.finalized)
        if len(act) == 0:
            return act
        _, first = np.unique(np.stack([self.L[act], self.U[act]], axis=1), axis=0, return_index=True)
        reps = act[np.sort(first)]
        return reps[np.argsort(self.L[reps], kind="stable")]

    def gamma(self):
        """Size of the union of unfinished intervals, ``sum(U - L)`` over distinct ones."""
        reps = self.active()
        return int(np.sum(self.U[reps] - self.L[reps])) if len(reps) else 0


def update_intervals(state, probes, ranks):
    """Functional alias of :meth:`IntervalState.update`; returns ``(intervals, finalized)``."""
    newly = state.update(probes, ranks)
    return state.intervals(), [int(state.i[j]) for j in newly]


def union_size(pairs):
    """Number of integer ranks covered by the half-open ranges ``(L, U]``."""
    pairs = sorted((int(a), int(b)) for a, b in pairs if b > a)
    total, cur_lo, cur_hi = 0, None, None
    for a, b in pairs:
        if cur_hi is None or a > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = a, b
        else:
            cur_hi = max(cur_hi, b)
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def gamma_size(intervals, n_total=None, p=None):
    """Union size of splitter intervals (identical ones counted once)."""
    return union_size({(iv.L, iv.U) for iv in intervals})


def strip_intervals(intervals, n_total, p):
    """Clip interval ``i`` to ``[N(i-1)/p, N(i+1)/p]`` (boundaries rounded up).

    The clipped parts are always covered by a neighbouring identical interval,
    so the union is unchanged.
    """
    out = []
    for iv in intervals:
        lo_edge = -((-n_total * (iv.i - 1)) // p)
        hi_edge = -((-n_total * (iv.i + 1)) // p)
        out.append(SplitterInterval(iv.i, max(iv.L, lo_edge), min(iv.U, hi_edge),
                                    iv.key_lo, iv.key_hi))
    return out


def interval_positions(data, state, reps, upper_inclusive=True):
    """Local position ranges ``[A, B)`` of every processor inside each interval in ``reps``.

    Membership is ``key_lo < key <= key_hi`` (``< key_hi`` when not inclusive);
    sentinel bounds are unbounded.
    """
    sizes = data.sizes()
    if state.lo_pos is not None:
        A = state.lo_pos[:, reps].copy()
        B = state.hi_pos[:, reps].copy()
        if not upper_inclusive:
            owner = (state.hi_tags[reps] >> np.uint64(TAG_SHIFT)).astype(np.int64)
            cols = np.flatnonzero(state.has_hi[reps])
            B[owner[cols], cols] -= 1
    else:
        lo = TaggedArray(state.lo_keys[reps], state.lo_tags[reps])
        hi = TaggedArray(state.hi_keys[reps], state.hi_tags[reps])
        A = histogram_matrix(data, lo, right=True)
        B = histogram_matrix(data, hi, right=upper_inclusive)
    A[:, ~state.has_lo[reps]] = 0
    B[:, ~state.has_hi[reps]] = sizes[:, None]
    return A, np.maximum(A, B)


def sample_round(machine, data, state, prob, rngs, sampler="exact"):
    """Bernoulli(``prob``) sample of every key inside the unfinished intervals.

    Every processor already holds the interval state (histogram counts are
    all-gathered), so no bracket keys are sent. Returns ``(per-processor
    samples, clamped)``. The exact sampler draws a
    Binomial count over the interval keys, then a uniform subset; the
    ``discard`` sampler draws over the whole local input and drops keys
    outside the intervals. Both are distributionally identical.
    """
    clamped = prob > 1.0
    prob = min(1.0, max(0.0, float(prob)))
    reps = state.active()
    sizes = data.sizes()
    A, B = interval_positions(data, state, reps)
    widths = B - A
    samples, work = [], np.zeros(machine.p, dtype=np.int64)
    for q, local in enumerate(data.per_proc):
        rng = rngs[q]
        if sampler == "discard":
            n = len(local)
            cnt = rng.binomial(n, prob) if n else 0
            pos = np.sort(rng.choice(n, cnt, replace=False, shuffle=False)) if cnt else np.zeros(0, np.int64)
            inside = np.zeros(len(pos), dtype=bool)
            for a, b in zip(A[q], B[q]):
                inside |= (pos >= a) & (pos < b)
            work[q] = cnt + search_cost(2 * len(reps), n)
            pos = pos[inside]
        else:
            w = widths[q]
            g = int(w.sum())
            cnt = rng.binomial(g, prob) if g else 0
            if cnt:
                pick = np.sort(rng.choice(g, cnt, replace=False, shuffle=False))
                cum = np.cumsum(w)
                j = np.searchsorted(cum, pick, side="right")
                pos = A[q][j] + pick - (cum[j] - w[j])
                pos.sort()
            else:
                pos = np.zeros(0, dtype=np.int64)
            work[q] = cnt + search_cost(2 * len(reps), sizes[q])
        samples.append(local[pos])
    machine.compute(work)
    return samples, clamped


@dataclass
class _RoundLog:
    ratio: float
    sample: int
    gamma: int


def hss_partition(machine, data, eps, k="auto", mode="fixed", seed=0, samples_per_proc=None,
                  buckets=None, stream=(), sampler="exact", max_rounds=1000):
    """Determine ``buckets - 1`` splitters of a tagged, locally sorted input.

    ``k`` rounds follow :func:`schedule_ratios`; ``k="auto"`` uses
    :func:`optimal_round_count`. In ``guarantee`` mode, rounds at the final
    ratio repeat until every target range holds a seen key. With
    ``samples_per_proc=c`` the ratio adapts so that every round draws ``c``
    keys per bucket in expectation, running until all splitters are found.
    Returns ``(SplitterSet, PartitionStats)``.
    """
    if mode not in ("fixed", "guarantee"):
        raise ValueError(f"unknown mode {mode!r}")
    if not data.tagged:
        raise ValueError("hss_partition needs tagged input")
    b = machine.p if buckets is None else int(buckets)
    n = data.n_total
    stats = PartitionStats(algo="hss")
    start = machine.ledger_report()
    if b <= 1:
        stats.splitter_ranks = np.zeros(0, dtype=np.int64)
        stats.achieved_eps = achieved_imbalance([n], n, 1)
        stats.globally_balanced = True
        stats.cost = machine.ledger_report() - start
        return SplitterSet(TaggedArray.empty(), np.zeros(0, dtype=np.int64)), stats

    state = IntervalState(n, b, eps, procs=machine.p)
    rngs = [rng_for(data.seed, STREAM_PARTITION, *stream, q) for q in range(machine.p)]

    def run_round(prob, ratio):
        samples, clamped = sample_round(machine, data, state, prob, rngs, sampler)
        stats.clamped |= clamped
        probes, counts, local = histogram_round(machine, data, samples, return_local=True)
        machine.compute(len(probes) + (b - 1) * log2c(len(probes) + 1))
        state.update(probes, counts - 1, local)
        stats.ratios.append(float(ratio))
        stats.sample_sizes.append(len(probes))
        stats.gamma_sizes.append(state.gamma())

    if samples_per_proc is not None:
        c = float(samples_per_proc)
        while not state.all_finalized() and stats.rounds_run < max_rounds:
            g = state.gamma()
            run_round(c * b / g, c * n / g)
            stats.rounds_run += 1
        stats.extra["mode"] = "adaptive"
    else:
        if k == "auto" or k is None:
            k = optimal_round_count(b, eps)
        k = int(k)
        try:
            ratios = schedule_ratios(k, b, eps).ratios
        except ValueError:
            stats.warnings.append("trivial regime: 2 ln(p)/eps <= 1")
            ratios = (1.0,) * k
        if not large_p_condition(b, eps):
            stats.warnings.append("final ratio exceeds sqrt(2p/ln p); interval bound not guaranteed")
        for s in ratios:
            if state.all_finalized():
                break
            run_round(b * s / n, s)
            stats.rounds_run += 1
        if mode == "guarantee":
            if np.any(state.t_lo > state.t_hi):
                raise ValueError("eps too small: some target range holds no rank")
            while not state.all_finalized() and stats.total_rounds < max_rounds:
                run_round(b * ratios[-1] / n, ratios[-1])
                stats.extra_rounds += 1
        stats.extra["k"] = k

    # every processor holds the same interval state, so no splitter broadcast
    splitters = state.splitters()
    _finish_stats(stats, splitters, n, b, eps)
    stats.extra["finalized"] = int(state.finalized.sum())
    stats.cost = machine.ledger_report() - start
    return splitters, stats


def _finish_stats(stats, splitters, n, b, eps):
    stats.splitter_ranks = np.asarray(splitters.ranks, dtype=np.int64)
    stats.achieved_eps = achieved_imbalance(splitters.loads(n), n, b)
    stats.globally_balanced = is_globally_balanced(stats.splitter_ranks, n, b, eps)


def hss_sort(machine, data, eps, k="auto", seed=None, mode="fixed", samples_per_proc=None,
             sampler="exact"):
    """Partition with HSS, route every key to its bucket, merge locally.

    Returns ``(sorted DistributedInput, PartitionStats)``.
    """
    if seed is not None and seed != data.seed:
        data = data.with_parts(data.per_proc, seed=seed)
    with machine.phase("partition"):
        splitters, stats = hss_partition(machine, data, eps, k=k, mode=mode,
                                         samples_per_proc=samples_per_proc, sampler=sampler)
    with machine.phase("exchange"):
        out = exchange(machine, data, splitters)
    stats.extra["loads"] = out.sizes()
    return out, stats
