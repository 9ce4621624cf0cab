"""Sample sort splitter selection by regular and by random sampling."""

import math

import numpy as np

from ..bsp import log2c
from ..hss import PartitionStats, _finish_stats
from ..keyspace import STREAM_PARTITION, TaggedArray, rng_for
from ..partition import SplitterSet, histogram_matrix


def regular_sample(local_sorted, s):
    """``s`` evenly spaced keys: local indices ``ceil(j n / s) - 1`` for ``j = 1 .. s``."""
    n = len(local_sorted)
    if not 1 <= s <= n:
        raise ValueError("need 1 <= s <= local size")
    j = np.arange(1, s + 1, dtype=np.int64)
    return local_sorted[(j * n + s - 1) // s - 1]


def random_sample(local_sorted, s, rng):
    """``s`` distinct uniformly random local keys, in sorted order."""
    n = len(local_sorted)
    s = min(s, n)
    pos = np.sort(rng.choice(n, s, replace=False, shuffle=False))
    return local_sorted[pos]


def splitter_positions(total, p):
    """0-based positions ``ceil(j T / p) - 1``; equals ``j s - 1`` when ``T = p s``."""
    j = np.arange(1, p, dtype=np.int64)
    return (j * total + p - 1) // p - 1


def measured_ranks(data, splitters):
    """Global ranks of splitter keys (measurement, not charged to the machine)."""
    if len(splitters) == 0:
        return np.zeros(0, dtype=np.int64)
    return histogram_matrix(data, splitters, right=False).sum(axis=0)


def default_oversampling(sampler, n_total, p, eps):
    if sampler == "regular":
        return math.ceil(p / eps)
    if sampler == "random":
        return math.ceil(math.log(n_total) / eps ** 2)
    raise ValueError(f"unknown sampler {sampler!r}")


def samplesort_splitters(machine, data, sampler="regular", s=None, eps=0.1, stream=()):
    """Gather ``s`` samples per processor, sort them at the root and pick
    every ``s``-th one as a splitter. Returns ``(SplitterSet, PartitionStats)``.
    """
    p, n = machine.p, data.n_total
    stats = PartitionStats(algo=f"samplesort-{sampler}")
    start = machine.ledger_report()
    if s is None:
        s = default_oversampling(sampler, n, p, eps)
    samples = []
    for q, local in enumerate(data.per_proc):
        sq = min(int(s), len(local))
        if sampler == "regular":
            samples.append(regular_sample(local, sq) if sq else local[:0])
        elif sampler == "random":
            samples.append(random_sample(local, sq, rng_for(data.seed, STREAM_PARTITION, *stream, q)))
        else:
            raise ValueError(f"unknown sampler {sampler!r}")
    machine.compute([len(x) for x in samples])
    gathered = machine.gather(samples)
    if len(gathered) < p - 1:
        raise ValueError("fewer than p - 1 samples")
    machine.compute(len(gathered) * log2c(max(2, p)))
    probes = gathered.sorted()
    keys = probes[splitter_positions(len(probes), p)] if p > 1 else TaggedArray.empty()
    machine.broadcast(keys)
    splitters = SplitterSet(keys, measured_ranks(data, keys))
    stats.rounds_run = 1
    stats.ratios.append(float(s))
    stats.sample_sizes.append(len(probes))
    stats.gamma_sizes.append(n)
    _finish_stats(stats, splitters, n, p, eps)
    stats.cost = machine.ledger_report() - start
    return splitters, stats


def samplesort_partition(machine, data, eps, sampler="regular", s=None, stream=()):
    return samplesort_splitters(machine, data, sampler=sampler, s=s, eps=eps, stream=stream)
