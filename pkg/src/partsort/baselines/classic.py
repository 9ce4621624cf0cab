"""Classical histogram sort: probes refined in key space, no sampling.

Tagged keys are treated as 128-bit integers ``key << 64 | tag``. Every
unfinished splitter keeps a bracket ``(a, b)`` of probe values with
``count(a) < target <= count(b)`` and proposes an interpolated probe plus a
bisection midpoint each round. A probe ``c`` whose count (keys ``<= c``)
lands in the target range yields the virtual splitter ``c + 1``.
"""

import numpy as np

from .. import _kernels
from ..bsp import log2c
from ..hss import PartitionStats, _finish_stats
from ..keyspace import POS_INF, TaggedArray
from ..partition import SplitterSet, target_bounds

_MASK = (1 << 64) - 1
_TOP = (1 << 128) - 1


def _split(values, tagged):
    if not tagged:
        # untagged probes live in key space and count every key equal to them
        keys = np.array(values, dtype=np.uint64)
        return keys, np.full(len(values), _MASK, dtype=np.uint64)
    keys = np.array([v >> 64 for v in values], dtype=np.uint64)
    tags = np.array([v & _MASK for v in values], dtype=np.uint64)
    return keys, tags


def _counts(data, values, tagged):
    keys, tags = _split(values, tagged)
    k, t, off = data.flat()
    return _kernels.seg_searchsorted(k, t, off, keys, tags, right=True)


def histogramsort_classic_partition(machine, data, eps, probes_per_round=2, tagged=True,
                                    max_rounds=200):
    """Returns ``(SplitterSet, PartitionStats)``; ``stats.rounds_run`` counts probe rounds.

    With ``tagged=False`` only key values are probed, so an input whose keys
    are all equal cannot be split and is rejected.
    """
    if probes_per_round not in (1, 2):
        raise ValueError("probes_per_round must be 1 or 2")
    p, n = machine.p, data.n_total
    if not tagged:
        allk = np.concatenate([x.keys for x in data.per_proc])
        if len(allk) and allk.min() == allk.max():
            raise ValueError("key range of size 1: classic histogram sort requires tagged mode")
    stats = PartitionStats(algo="histsort")
    start = machine.ledger_report()
    lo_t, hi_t = target_bounds(n, p, eps) if p > 1 else (np.zeros(0, np.int64),) * 2
    m = p - 1
    a = [-1] * m  # count(-1) = 0
    ca = [0] * m
    b = [_TOP] * m
    cb = [n] * m
    done = [None] * m  # (value, count) once found
    top = _TOP if tagged else _MASK
    if not tagged:
        b = [top] * m

    while any(d is None for d in done) and stats.rounds_run < max_rounds:
        proposals = set()
        for i in range(m):
            if done[i] is not None:
                continue
            target = (n * (i + 1)) / p
            span = b[i] - a[i]
            if span <= 1:
                continue
            frac = (target - ca[i]) / max(1, cb[i] - ca[i])
            interp = a[i] + max(1, min(span - 1, int(span * frac)))
            proposals.add(interp)
            if probes_per_round == 2:
                proposals.add(a[i] + span // 2)
        if not proposals:
            break
        values = sorted(proposals)
        machine.broadcast(np.zeros(len(values)))
        machine.compute([len(values) * log2c(len(x) + 1) for x in data.per_proc])
        counts = machine.reduce_sum_matrix(_counts(data, values, tagged))
        for i in range(m):
            if done[i] is not None:
                continue
            for v, c in zip(values, counts.tolist()):
                if lo_t[i] <= c <= hi_t[i]:
                    if done[i] is None or abs(c * p - n * (i + 1)) < abs(done[i][1] * p - n * (i + 1)):
                        done[i] = (v, c)
                elif c < lo_t[i] and v > a[i]:
                    a[i], ca[i] = v, c
                elif c > hi_t[i] and v < b[i]:
                    b[i], cb[i] = v, c
        stats.rounds_run += 1
        stats.sample_sizes.append(len(values))
        stats.ratios.append(float(probes_per_round))
        stats.gamma_sizes.append(sum(cb[i] - ca[i] for i in range(m) if done[i] is None))

    keys = np.empty(m, dtype=np.uint64)
    tags = np.empty(m, dtype=np.uint64)
    ranks = np.empty(m, dtype=np.int64)
    for i in range(m):
        v, c = done[i] if done[i] is not None else (b[i], cb[i])
        if v + 1 > top:
            keys[i], tags[i] = POS_INF.key, POS_INF.tag
        elif tagged:
            keys[i], tags[i] = (v + 1) >> 64, (v + 1) & _MASK
        else:
            keys[i], tags[i] = v + 1, 0
        ranks[i] = c
    splitters = SplitterSet(TaggedArray(keys, tags), ranks)
    machine.broadcast(splitters.keys)
    _finish_stats(stats, splitters, n, p, eps)
    stats.extra["found"] = sum(d is not None for d in done)
    stats.cost = machine.ledger_report() - start
    return splitters, stats
