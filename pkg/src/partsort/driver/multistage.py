"""Multi-stage sorting: split each processor group into ``r = p ** (1/l)`` subgroups per stage."""

from dataclasses import dataclass, field

from ..baselines.ams import ams_partition
from ..bsp import CostLedger, Machine
from ..hss import hss_partition, hss_sort
from ..partition import achieved_imbalance, exchange
from .costs import group_count


@dataclass
class StageStats:
    stage: int
    groups: int
    rounds_run: int  # max over groups
    sample_size: int  # max over groups
    partition_comm: int
    group_stats: list = field(default_factory=list)


@dataclass
class MultistageResult:
    output: object
    stages: list
    achieved_eps: float


def stage_epsilon(eps_total, stages):
    """Per-stage tolerance whose compounded imbalance equals ``eps_total``."""
    return (1.0 + eps_total) ** (1.0 / stages) - 1.0


def _partition(algo, machine, data, eps, r, stream, k, mode, samples_per_proc):
    if algo == "hss":
        return hss_partition(machine, data, eps, k=k, mode=mode, buckets=r, stream=stream,
                             samples_per_proc=samples_per_proc)
    if algo == "ams":
        return ams_partition(machine, data, eps, buckets=r, stream=stream)
    raise ValueError(f"multistage supports hss and ams, not {algo!r}")


def multistage_sort(machine, data, stages, eps_stage, algo="hss", k="auto", mode="fixed",
                    samples_per_proc=None):
    """Sort with ``stages`` partition and exchange rounds over shrinking processor groups.

    Groups are contiguous processor ranges. In each stage every group of
    ``g`` processors picks ``r - 1`` splitters; bucket ``b`` goes to the
    ``b``-th subgroup of ``g / r`` processors, source ``q`` sending to
    subgroup member ``q mod (g / r)``. Groups of a stage run side by side,
    so their ledgers are merged by maximum. With one stage this is exactly
    the single-stage pipeline.
    """
    p = machine.p
    r = group_count(p, stages)
    if stages == 1 and algo == "hss":
        out, st = hss_sort(machine, data, eps_stage, k=k, mode=mode, samples_per_proc=samples_per_proc)
        rep = st.cost
        info = StageStats(0, 1, st.rounds_run, st.total_sample, rep.comm, [st])
        return MultistageResult(out, [info], achieved_imbalance(out.sizes(), data.n_total, p))

    parts = list(data.per_proc)
    infos = []
    gsize = p
    for stage in range(stages):
        sub = gsize // r
        ledgers, stats_list, new_parts = [], [], [None] * p
        for g0 in range(0, p, gsize):
            gdata = data.with_parts(parts[g0:g0 + gsize])
            gm = Machine(gsize, CostLedger())
            with gm.phase("partition"):
                splitters, st = _partition(algo, gm, gdata, eps_stage, r, (stage, g0 // gsize),
                                           k, mode, samples_per_proc)
            with gm.phase("exchange"):
                out = exchange(gm, gdata, splitters,
                               dest_of_bucket=lambda q, b, sub=sub: b * sub + (q % sub))
            new_parts[g0:g0 + gsize] = out.per_proc
            ledgers.append(gm.ledger)
            stats_list.append(st)
        machine.flush()
        machine.ledger.absorb_parallel(ledgers)
        infos.append(StageStats(
            stage, p // gsize, max(s.total_rounds for s in stats_list),
            max(s.total_sample for s in stats_list),
            max(led.report("partition").comm for led in ledgers), stats_list))
        parts = new_parts
        gsize = sub
    out = data.with_parts(parts, locally_sorted=True)
    return MultistageResult(out, infos, achieved_imbalance(out.sizes(), data.n_total, p))


__all__ = ["MultistageResult", "StageStats", "multistage_sort", "stage_epsilon"]
