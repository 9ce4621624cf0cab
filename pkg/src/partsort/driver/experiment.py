"""Experiment runner: seeds x algorithms -> CSV rows."""

import csv
import itertools
import sys
import time
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ..baselines import (
    ams_partition, histogramsort_classic_partition, hyksort_partition, samplesort_partition,
)
from ..bsp import Machine, sort_cost
from ..hss import hss_partition
from ..keyspace import DistributionKind, global_order, prepare_input
from ..partition import achieved_imbalance, exchange, is_globally_balanced
from .costs import group_count
from .multistage import multistage_sort, stage_epsilon

ALGOS = ("hss", "hss1", "samplesort-regular", "samplesort-random", "ams", "hyksort", "histsort")

CSV_HEADER = ("algo", "p", "n_total", "dist", "seed", "stage", "round", "ratio", "sample_size",
              "gamma_size", "rounds_run", "extra_rounds", "eps_target", "eps_achieved",
              "globally_balanced", "supersteps", "comp", "comm", "wall_ms")


class OracleViolation(RuntimeError):
    """Sorted output failed the permutation or ordering check."""


@dataclass
class ExperimentConfig:
    algo: str = "hss"
    p: int = 16
    n_per_proc: int = 1024
    eps: float = 0.05
    rounds: object = "auto"  # int, "auto" or "adaptive"
    beta: int = None
    stages: int = 1
    dist: str = "unif"
    seed: int = 0
    trials: int = 1
    samples_per_proc: float = 1.0
    mode: str = "fixed"
    check_oracle: bool = False
    eps_per_stage: float = None

    def validate(self):
        if self.algo not in ALGOS + ("all",):
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.n_per_proc < 1:
            raise ValueError("n_per_proc must be >= 1")
        if not self.eps > 0:
            raise ValueError("epsilon must be positive")
        if self.stages < 1:
            raise ValueError("stages must be >= 1")
        if self.stages > 1:
            group_count(self.p, self.stages)
            if self.algo not in ("hss", "ams"):
                raise ValueError("multi-stage runs support hss and ams only")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.mode not in ("fixed", "guarantee"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (self.rounds in ("auto", "adaptive") or (isinstance(self.rounds, int) and self.rounds >= 1)):
            raise ValueError("rounds must be a positive integer, 'auto' or 'adaptive'")
        DistributionKind.parse(self.dist)
        return self

    @property
    def algos(self):
        return ALGOS if self.algo == "all" else (self.algo,)


@dataclass
class ResultRow:
    algo: str
    p: int
    n_total: int
    dist: str
    seed: int
    stage: object
    round: object
    ratio: float = ""
    sample_size: int = ""
    gamma_size: int = ""
    rounds_run: int = ""
    extra_rounds: int = ""
    eps_target: float = ""
    eps_achieved: float = ""
    globally_balanced: object = ""
    supersteps: int = ""
    comp: int = ""
    comm: int = ""
    wall_ms: float = ""

    def as_dict(self):
        return asdict(self)


assert tuple(f.name for f in fields(ResultRow)) == CSV_HEADER


def checksum(data):
    """Order-independent fingerprint of a tagged distribution."""
    allk = data.all_keys()
    with np.errstate(over="ignore"):
        return (len(allk), int(np.sum(allk.keys, dtype=np.uint64)),
                int(np.bitwise_xor.reduce(allk.tags)) if len(allk) else 0)


def verify_output(inp, out, oracle=False):
    """Raise :class:`OracleViolation` unless ``out`` is a sorted permutation of ``inp``."""
    allk = out.all_keys()
    if not allk.is_sorted(strict=True):
        raise OracleViolation("output is not globally sorted")
    if checksum(inp) != checksum(out):
        raise OracleViolation("output is not a permutation of the input (checksum)")
    if oracle and not global_order(inp).equals(allk):
        raise OracleViolation("output differs from the full-sort oracle")


def _partition(algo, machine, data, cfg):
    if algo == "hss":
        if cfg.rounds == "adaptive":
            return hss_partition(machine, data, cfg.eps, mode=cfg.mode,
                                 samples_per_proc=cfg.samples_per_proc)
        return hss_partition(machine, data, cfg.eps, k=cfg.rounds, mode=cfg.mode)
    if algo == "hss1":
        return hss_partition(machine, data, cfg.eps, k=1, mode=cfg.mode)
    if algo == "samplesort-regular":
        return samplesort_partition(machine, data, cfg.eps, "regular")
    if algo == "samplesort-random":
        return samplesort_partition(machine, data, cfg.eps, "random")
    if algo == "ams":
        return ams_partition(machine, data, cfg.eps)
    if algo == "hyksort":
        beta = cfg.beta if cfg.beta is not None else max(1, int(round(cfg.samples_per_proc)))
        return hyksort_partition(machine, data, cfg.eps, beta=beta)
    if algo == "histsort":
        return histogramsort_classic_partition(machine, data, cfg.eps)
    raise ValueError(f"unknown algorithm {algo!r}")


def run_single(algo, inp, cfg):
    """Sort one input with one algorithm; returns ``(rows, output)``."""
    p, n = inp.p, inp.n_total
    machine = Machine(p)
    base = dict(algo=algo, p=p, n_total=n, dist=inp.dist.value, seed=inp.seed)
    t0 = time.perf_counter()
    with machine.phase("local_sort"):
        machine.compute([sort_cost(len(x)) for x in inp.per_proc])
    rows = []
    if cfg.stages > 1:
        eps_stage = cfg.eps_per_stage if cfg.eps_per_stage is not None else stage_epsilon(cfg.eps, cfg.stages)
        sp = cfg.samples_per_proc if cfg.rounds == "adaptive" else None
        k = "auto" if cfg.rounds == "adaptive" else cfg.rounds
        res = multistage_sort(machine, inp, cfg.stages, eps_stage, algo=algo, k=k, mode=cfg.mode,
                              samples_per_proc=sp)
        out = res.output
        per_stage = [(info.stage, st) for info in res.stages for st in info.group_stats[:1]]
        rounds_run = sum(info.rounds_run for info in res.stages)
        extra = 0
        eps_target = (1 + eps_stage) ** cfg.stages - 1
    else:
        with machine.phase("partition"):
            splitters, st = _partition(algo, machine, inp, cfg)
        with machine.phase("exchange"):
            out = exchange(machine, inp, splitters)
        per_stage = [(0, st)]
        rounds_run, extra, eps_target = st.rounds_run, st.extra_rounds, cfg.eps
    wall = (time.perf_counter() - t0) * 1000.0
    for stage, st in per_stage:
        for j, (ratio, z, g) in enumerate(zip(st.ratios, st.sample_sizes, st.gamma_sizes), start=1):
            rows.append(ResultRow(**base, stage=stage, round=j, ratio=round(float(ratio), 6),
                                  sample_size=int(z), gamma_size=int(g)))
    rep = machine.ledger_report()
    loads = out.sizes()
    bounds = out.offsets()[1:-1]
    rows.append(ResultRow(
        **base, stage="all" if cfg.stages > 1 else 0, round="summary", ratio="",
        sample_size=sum(st.total_sample for _, st in per_stage) if cfg.stages == 1 else
        sum(info.sample_size for info in res.stages),
        gamma_size="", rounds_run=rounds_run, extra_rounds=extra, eps_target=round(eps_target, 9),
        eps_achieved=round(achieved_imbalance(loads, n, p), 9),
        globally_balanced=bool(is_globally_balanced(bounds, n, p, eps_target)) if p > 1 else True,
        supersteps=rep.supersteps, comp=rep.comp, comm=rep.comm, wall_ms=round(wall, 3)))
    return rows, out


def run_experiment(cfg, writer=None):
    """Run every seed (and every algorithm for ``algo="all"``) on shared inputs.

    Rows are streamed to ``writer`` (a :class:`csv.DictWriter`) when given and
    returned. Balance misses are data; only a failed output check raises.
    """
    cfg.validate()
    rows = []
    for t in range(cfg.trials):
        inp = prepare_input(cfg.dist, cfg.p * cfg.n_per_proc, cfg.p, cfg.seed + t)
        for algo in cfg.algos:
            got, out = run_single(algo, inp, cfg)
            verify_output(inp, out, oracle=cfg.check_oracle)
            if writer is not None:
                for r in got:
                    writer.writerow(r.as_dict())
            rows.extend(got)
    return rows


_SWEEP_KEYS = {
    "p": ("p", int), "n": ("n_per_proc", int), "n_per_proc": ("n_per_proc", int),
    "eps": ("eps", float), "epsilon": ("eps", float), "algo": ("algo", str),
    "dist": ("dist", str), "rounds": ("rounds", None), "stages": ("stages", int),
    "beta": ("beta", int), "samples_per_proc": ("samples_per_proc", float), "mode": ("mode", str),
}


def parse_rounds(text):
    text = str(text).strip().lower()
    if text in ("auto", "adaptive"):
        return text
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"rounds must be an integer, 'auto' or 'adaptive', got {text!r}") from None


def parse_sweep(spec):
    """``"p=16,64;eps=0.02;algo=hss,hyksort"`` -> ``{field: [values]}``."""
    out = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad sweep item {part!r}")
        name, vals = (x.strip() for x in part.split("=", 1))
        if name not in _SWEEP_KEYS:
            raise ValueError(f"unknown sweep key {name!r}")
        field_name, conv = _SWEEP_KEYS[name]
        items = [v.strip() for v in vals.split(",") if v.strip()]
        if not items:
            raise ValueError(f"empty sweep range for {name!r}")
        out[field_name] = [parse_rounds(v) if conv is None else conv(v) for v in items]
    if not out:
        raise ValueError("empty sweep")
    return out


def sweep(base, spec, writer=None):
    """Cartesian product of ``spec`` ranges applied on top of ``base``."""
    grid = parse_sweep(spec) if isinstance(spec, str) else dict(spec)
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("empty sweep range")
    names = list(grid)
    configs = [replace(base, **dict(zip(names, combo))).validate()
               for combo in itertools.product(*(grid[k] for k in names))]
    rows = []
    for cfg in configs:
        rows.extend(run_experiment(cfg, writer))
    return rows


def open_writer(stream):
    w = csv.DictWriter(stream, fieldnames=CSV_HEADER, lineterminator="\n")
    w.writeheader()
    return w


def summarize(rows, stream=None):
    """One line per algorithm: mean rounds, mean imbalance, balanced fraction (to stderr)."""
    stream = sys.stderr if stream is None else stream
    by = {}
    for r in rows:
        if r.round == "summary":
            by.setdefault((r.algo, r.p, r.dist), []).append(r)
    for (algo, p, dist), rs in sorted(by.items(), key=str):
        rounds = np.mean([r.rounds_run + r.extra_rounds for r in rs])
        eps = np.mean([r.eps_achieved for r in rs])
        bal = np.mean([bool(r.globally_balanced) for r in rs])
        print(f"{algo:>18} p={p:<5} {dist:<6} runs={len(rs):<4} rounds={rounds:6.2f} "
              f"eps={eps:.4f} balanced={bal:.2f}", file=stream)
