"""Single-stage AMS splitting: one sampled histogram, then a greedy scan."""

import math
from dataclasses import dataclass

import numpy as np

from ..hss import PartitionStats, _finish_stats
from ..keyspace import POS_INF, STREAM_PARTITION, TaggedArray, rng_for
from ..partition import SplitterSet, histogram_round


@dataclass
class ScanResult:
    splitter_ranks: np.ndarray
    loads: np.ndarray
    overflow: bool
    cap: int


def scan_cap(n_total, p, eps):
    return math.floor((1 + eps) * n_total / p)


def ams_scan(ranks, n_total, p, eps):
    """Assign maximal runs of consecutive sample buckets to each processor.

    Splitter ``i`` is the largest sample rank at most ``cap`` above splitter
    ``i-1`` (rank ``N`` acts as a final virtual candidate). When no sample
    rank fits, the previous splitter repeats and ``overflow`` is set; the
    last processor takes whatever remains.
    """
    ranks = np.asarray(ranks, dtype=np.int64)
    if len(ranks) > 1 and np.any(np.diff(ranks) <= 0):
        raise ValueError("ranks must be sorted and distinct")
    cap = scan_cap(n_total, p, eps)
    cand = np.concatenate([ranks[ranks < n_total], [n_total]])
    chi = np.zeros(max(p - 1, 0), dtype=np.int64)
    cur, overflow = 0, False
    for i in range(p - 1):
        if cur < n_total:
            j = np.searchsorted(cand, cur + cap, side="right") - 1
            if j < 0 or cand[j] <= cur:
                overflow = True
            else:
                cur = int(cand[j])
        chi[i] = cur
    loads = np.diff(np.concatenate([[0], chi, [n_total]]))
    if loads[-1] > cap:
        overflow = True
    assert np.all(loads[:-1] <= cap)
    return ScanResult(chi, loads, overflow, cap)


def ams_probability(n_total, p, eps, log2=False):
    """Per-key sampling probability ``p max(2/eps, 2 log N) / N``, natural log by default."""
    lg = math.log2(n_total) if log2 else math.log(n_total)
    return min(1.0, p * max(2.0 / eps, 2.0 * lg) / n_total)


def bernoulli_sample(local, prob, rng):
    n = len(local)
    cnt = rng.binomial(n, prob) if n else 0
    pos = np.sort(rng.choice(n, cnt, replace=False, shuffle=False)) if cnt else np.zeros(0, np.int64)
    return local[pos]


def ams_partition(machine, data, eps, log2=False, stream=(), buckets=None):
    """One Bernoulli sampling pass, one histogram round, then :func:`ams_scan`.

    The result is locally balanced (loads capped); global balance is reported
    but not targeted. ``stats.extra["overflow"]`` carries the scan flag.
    """
    p = machine.p if buckets is None else int(buckets)
    n = data.n_total
    stats = PartitionStats(algo="ams")
    start = machine.ledger_report()
    prob = ams_probability(n, p, eps, log2)
    samples = [bernoulli_sample(local, prob, rng_for(data.seed, STREAM_PARTITION, *stream, q))
               for q, local in enumerate(data.per_proc)]
    machine.compute([len(x) for x in samples])
    probes, counts = histogram_round(machine, data, samples)
    scan = ams_scan(counts - 1, n, p, eps)
    # every processor holds all sample ranks and runs the scan itself
    machine.compute(len(probes))
    ranks = counts - 1
    idx = np.searchsorted(ranks, scan.splitter_ranks)
    real = scan.splitter_ranks < n
    keys = np.full(len(idx), POS_INF.key, dtype=np.uint64)
    tags = np.full(len(idx), POS_INF.tag, dtype=np.uint64)
    keys[real] = probes.keys[idx[real]]
    tags[real] = probes.tags[idx[real]]
    splitters = SplitterSet(TaggedArray(keys, tags), scan.splitter_ranks)
    stats.rounds_run = 1
    stats.ratios.append(prob * n / p)
    stats.sample_sizes.append(len(probes))
    stats.gamma_sizes.append(n)
    _finish_stats(stats, splitters, n, p, eps)
    stats.extra["overflow"] = scan.overflow
    stats.extra["loads"] = scan.loads
    stats.cost = machine.ledger_report() - start
    return splitters, stats


__all__ = ["ScanResult", "ams_partition", "ams_probability", "ams_scan", "scan_cap"]
