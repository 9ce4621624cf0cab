"""Deterministic simulated BSP machine with a cost ledger.

Processors execute in index order inside each superstep. Every superstep
charges the maximum computation and the maximum communication over
processors; collectives charge exactly their payload size ``S``.
"""

import contextlib
from dataclasses import dataclass

import numpy as np


class BSPFault(RuntimeError):
    """Invalid machine operation (bad address, mismatched reduction)."""


@dataclass(frozen=True)
class CostReport:
    supersteps: int = 0
    comp: int = 0
    comm: int = 0

    def __add__(self, other):
        return CostReport(self.supersteps + other.supersteps, self.comp + other.comp,
                          self.comm + other.comm)

    def __sub__(self, other):
        return CostReport(self.supersteps - other.supersteps, self.comp - other.comp,
                          self.comm - other.comm)


class CostLedger:
    """Supersteps plus accumulated max-per-superstep computation and communication."""

    def __init__(self):
        self.supersteps = 0
        self.comp_total = 0
        self.comm_total = 0
        self.phases = {}
        self.events = []  # (kind, phase, comp, comm)

    def charge(self, kind, phase, comp, comm, supersteps=1):
        comp, comm = int(comp), int(comm)
        if comp < 0 or comm < 0 or supersteps < 0:
            raise BSPFault("negative charge")
        self.supersteps += supersteps
        self.comp_total += comp
        self.comm_total += comm
        s, c, m = self.phases.get(phase, (0, 0, 0))
        self.phases[phase] = (s + supersteps, c + comp, m + comm)
        self.events.append((kind, phase, comp, comm, supersteps))

    def report(self, phase=None):
        if phase is None:
            return CostReport(self.supersteps, self.comp_total, self.comm_total)
        return CostReport(*self.phases.get(phase, (0, 0, 0)))

    def count(self, kind, phase=None):
        """Number of supersteps charged by collectives of ``kind`` (optionally in ``phase``)."""
        return sum(e[4] for e in self.events if e[0] == kind and (phase is None or e[1] == phase))

    def absorb_parallel(self, ledgers):
        """Charge ledgers of processor groups that ran side by side.

        Groups occupy the same supersteps, so each counter adds the maximum
        over groups rather than the sum.
        """
        ledgers = list(ledgers)
        if not ledgers:
            return
        phases = set()
        for led in ledgers:
            phases.update(led.phases)
        for ph in sorted(phases, key=str):
            reps = [led.report(ph) for led in ledgers]
            self.supersteps += max(r.supersteps for r in reps)
            self.comp_total += max(r.comp for r in reps)
            self.comm_total += max(r.comm for r in reps)
            s, c, m = self.phases.get(ph, (0, 0, 0))
            self.phases[ph] = (s + max(r.supersteps for r in reps), c + max(r.comp for r in reps),
                               m + max(r.comm for r in reps))
        kinds = {(e[0], e[1]) for led in ledgers for e in led.events}
        for kind, ph in sorted(kinds, key=str):
            steps = max(led.count(kind, ph) for led in ledgers)
            if steps:
                self.events.append((kind, ph, 0, 0, steps))


def words(payload):
    """Word count of a message: one word per element, one for a scalar."""
    if payload is None:
        return 0
    try:
        return len(payload)
    except TypeError:
        return 1


def log2c(n):
    """ceil(log2(n)), with log2c(0) = log2c(1) = 0."""
    n = int(n)
    return 0 if n <= 1 else (n - 1).bit_length()


def sort_cost(n):
    return int(n) * log2c(n)


def search_cost(probes, n_local):
    return int(probes) * log2c(int(n_local) + 1)


class Machine:
    """``p`` virtual processors sharing one :class:`CostLedger`."""

    def __init__(self, p, ledger=None):
        if p < 1:
            raise BSPFault("machine needs at least one processor")
        self.p = int(p)
        self.ledger = ledger if ledger is not None else CostLedger()
        self.state = [dict() for _ in range(self.p)]
        self._pending = np.zeros(self.p, dtype=np.int64)
        self._phase = "default"

    @contextlib.contextmanager
    def phase(self, name):
        prev, self._phase = self._phase, name
        try:
            yield self
        finally:
            self.flush()
            self._phase = prev

    def compute(self, costs):
        """Declare local work; it is charged with the next superstep."""
        if np.isscalar(costs):
            self._pending += int(costs)
        else:
            costs = np.asarray(costs, dtype=np.int64)
            if costs.shape != (self.p,):
                raise BSPFault("per-processor cost vector has wrong length")
            self._pending += costs

    def flush(self):
        """Charge pending local work that no superstep has absorbed yet."""
        if self._pending.any():
            self.ledger.charge("compute", self._phase, int(self._pending.max()), 0, supersteps=0)
            self._pending[:] = 0

    def _take_pending(self, extra=0):
        comp = int(self._pending.max()) + int(extra)
        self._pending[:] = 0
        return comp

    def superstep(self, work=None, outboxes=None, kind="superstep"):
        """One superstep: local work, then delivery of ``outboxes``.

        ``work`` is a declared cost (scalar or per-processor), or a callable
        ``proc -> cost`` run in processor order. ``outboxes[src]`` maps a
        destination processor to its payload. Returns ``inboxes[dst]`` as a
        list of ``(src, payload)`` in source order. Self-addressed payloads
        are delivered but not charged.
        """
        if callable(work):
            self.compute([int(work(q) or 0) for q in range(self.p)])
        elif work is not None:
            self.compute(work)
        sent = np.zeros(self.p, dtype=np.int64)
        recv = np.zeros(self.p, dtype=np.int64)
        inboxes = [[] for _ in range(self.p)]
        if outboxes is not None:
            if len(outboxes) != self.p:
                raise BSPFault("need one outbox per processor")
            for src, box in enumerate(outboxes):
                if not box:
                    continue
                items = box.items() if isinstance(box, dict) else enumerate(box)
                for dst, payload in items:
                    if payload is None:
                        continue
                    if not (0 <= dst < self.p):
                        raise BSPFault(f"processor {src} addressed out-of-range processor {dst}")
                    inboxes[dst].append((src, payload))
                    if dst != src:
                        w = words(payload)
                        sent[src] += w
                        recv[dst] += w
        comm = int(np.maximum(sent, recv).max()) if self.p else 0
        self.ledger.charge(kind, self._phase, self._take_pending(), comm)
        for box in inboxes:
            box.sort(key=lambda x: x[0])
        return inboxes

    def all_to_all(self, messages):
        """Personalized exchange; ``messages[src][dst]`` (list or dict rows)."""
        return self.superstep(outboxes=messages, kind="all_to_all")

    def gather(self, contributions, root=0):
        """Concatenate per-processor contributions at ``root`` in processor order."""
        self._check_root(root)
        if len(contributions) != self.p:
            raise BSPFault("need one contribution per processor")
        total = sum(words(c) for c in contributions)
        self.ledger.charge("gather", self._phase, self._take_pending(),
                           total if self.p > 1 else 0)
        return _concat(contributions)

    def broadcast(self, message, root=0):
        self._check_root(root)
        self.ledger.charge("broadcast", self._phase, self._take_pending(),
                           words(message) if self.p > 1 else 0)
        return message

    def reduce_sum(self, vectors, root=0):
        """Elementwise integer sum; reduce-scatter plus all-gather, two supersteps."""
        self._check_root(root)
        if len(vectors) != self.p:
            raise BSPFault("need one vector per processor")
        vecs = [np.asarray(v, dtype=np.int64) for v in vectors]
        size = vecs[0].shape
        if any(v.shape != size for v in vecs):
            raise BSPFault("reduce_sum vectors differ in length")
        acc = np.zeros(size, dtype=np.int64)
        for v in vecs:  # fixed processor order
            acc += v
        s = int(np.prod(size)) if len(size) else 1
        self.ledger.charge("reduce_scatter", self._phase, self._take_pending(s), s)
        self.ledger.charge("all_gather", self._phase, 0, 0)
        return acc

    def reduce_sum_matrix(self, rows):
        """``reduce_sum`` over the rows of a ``(p, S)`` matrix."""
        rows = np.asarray(rows, dtype=np.int64)
        if rows.shape[0] != self.p:
            raise BSPFault("need one row per processor")
        return self.reduce_sum(list(rows))

    def ledger_report(self):
        """Snapshot of the ledger including undelivered local work."""
        rep = self.ledger.report()
        return CostReport(rep.supersteps, rep.comp + int(self._pending.max()), rep.comm)

    def _check_root(self, root):
        if not (0 <= root < self.p):
            raise BSPFault(f"root {root} out of range")


def _concat(parts):
    from .keyspace import TaggedArray

    parts = list(parts)
    if any(isinstance(x, TaggedArray) for x in parts):
        return TaggedArray.concat(parts)
    if any(isinstance(x, np.ndarray) for x in parts):
        return np.concatenate([np.asarray(x) for x in parts if x is not None])
    out = []
    for x in parts:
        if x is not None:
            out.extend(x)
    return out


def superstep(machine, work=None, outboxes=None):
    return machine.superstep(work, outboxes)


def gather(machine, contributions, root=0):
    return machine.gather(contributions, root)


def broadcast(machine, message, root=0):
    return machine.broadcast(message, root)


def reduce_sum(machine, vectors, root=0):
    return machine.reduce_sum(vectors, root)


def all_to_all(machine, messages):
    return machine.all_to_all(messages)


def ledger_report(machine):
    return machine.ledger_report()


__all__ = [
    "BSPFault", "CostLedger", "CostReport", "Machine", "all_to_all", "broadcast", "gather",
    "ledger_report", "log2c", "reduce_sum", "search_cost", "sort_cost", "superstep", "words",
]
