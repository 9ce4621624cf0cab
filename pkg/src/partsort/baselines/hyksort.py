"""HykSort-style splitter search: a fixed number of samples per splitter interval."""

import numpy as np

from ..bsp import log2c
from ..hss import IntervalState, PartitionStats, _finish_stats, interval_positions
from ..keyspace import STREAM_ROOT, rng_for
from ..partition import histogram_round


def interval_sample(data, state, beta, rng):
    """Per-processor sorted sample positions: ``beta`` keys drawn uniformly
    without replacement from every unfinished splitter's interval.

    Bracket keys themselves are excluded (they are already seen). Splitters
    that share an interval draw independently; duplicates are merged.
    """
    reps = state.active()
    picks = [[] for _ in range(data.p)]
    if len(reps) == 0:
        return [np.zeros(0, dtype=np.int64) for _ in range(data.p)], reps
    A, B = interval_positions(data, state, reps, upper_inclusive=False)
    widths = B - A  # (p, m)
    # unfinished splitters per distinct interval
    act = np.flatnonzero(~state.finalized)
    key_of = {(int(state.L[j]), int(state.U[j])): c for c, j in enumerate(reps)}
    for j in act:
        c = key_of[(int(state.L[j]), int(state.U[j]))]
        w = widths[:, c]
        g = int(w.sum())
        if g == 0:
            continue
        idx = rng.choice(g, min(int(beta), g), replace=False, shuffle=False)
        cum = np.cumsum(w)
        q = np.searchsorted(cum, idx, side="right")
        pos = A[q, c] + idx - (cum[q] - w[q])
        for qq, pp in zip(q.tolist(), pos.tolist()):
            picks[qq].append(pp)
    return [np.unique(np.asarray(x, dtype=np.int64)) for x in picks], reps


def hyksort_partition(machine, data, eps, beta=1, max_rounds=10_000, stream=(), trace=False):
    """Repeat per-interval sampling and histogramming until every splitter
    has a seen key inside its target range. Returns ``(SplitterSet, PartitionStats)``.

    With ``trace`` the bracket ranks ``(L, U)`` after every round are kept in
    ``stats.extra["brackets"]``.
    """
    p, n = machine.p, data.n_total
    stats = PartitionStats(algo="hyksort")
    start = machine.ledger_report()
    state = IntervalState(n, p, eps, procs=p)
    if np.any(state.t_lo > state.t_hi):
        raise ValueError("eps too small: some target range holds no rank")
    rng = rng_for(data.seed, STREAM_ROOT, *stream)
    brackets = []
    while p > 1 and not state.all_finalized() and stats.rounds_run < max_rounds:
        positions, reps = interval_sample(data, state, beta, rng)
        # interval totals let every processor draw its share of the samples
        machine.compute([search_cost_pair(len(reps), len(x)) for x in data.per_proc])
        machine.reduce_sum([np.zeros(len(reps), dtype=np.int64)] * p)
        if not any(len(x) for x in positions):
            break
        samples = [local[pos] for local, pos in zip(data.per_proc, positions)]
        machine.compute([len(x) for x in positions])
        probes, counts, local = histogram_round(machine, data, samples, return_local=True)
        state.update(probes, counts - 1, local)
        stats.rounds_run += 1
        stats.ratios.append(float(beta))
        stats.sample_sizes.append(len(probes))
        stats.gamma_sizes.append(state.gamma())
        if trace:
            brackets.append((state.L.copy(), state.U.copy()))
    splitters = state.splitters()
    _finish_stats(stats, splitters, n, p, eps)
    stats.extra["beta"] = beta
    if trace:
        stats.extra["brackets"] = brackets
    stats.cost = machine.ledger_report() - start
    return splitters, stats


def search_cost_pair(m, n_local):
    return 2 * m * log2c(n_local + 1)
