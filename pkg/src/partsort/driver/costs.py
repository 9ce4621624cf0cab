"""Closed-form partitioning costs with all constants set to 1 (natural log).

Values are for the data-partitioning step only; data exchange is excluded.
For ``stages > 1`` every per-stage quantity uses ``r = p ** (1 / stages)``
and the totals are multiplied by the stage count.
"""

import math
from dataclasses import dataclass

from ..hss import optimal_round_count


@dataclass(frozen=True)
class PredictedCost:
    sample_size: float
    comp: float
    comm: float
    supersteps: float
    stages: int = 1

    @property
    def per_stage_comm(self):
        return self.comm / self.stages

    @property
    def per_stage_sample(self):
        return self.sample_size / self.stages


def group_count(p, stages):
    """``r = p ** (1/stages)``; raises unless it is an integer."""
    if stages < 1:
        raise ValueError("stages must be >= 1")
    r = round(p ** (1.0 / stages))
    if r ** stages != p:
        raise ValueError(f"p={p} is not a perfect {stages}-th power")
    return r


def _single(algo, p, eps, k, n_total):
    lp = math.log(p)
    ln_n = math.log(n_total) if n_total else lp
    if algo == "samplesort-regular":
        s = p * p / eps
        return s, s * lp * lp, s, 1
    if algo == "samplesort-random":
        s = p * ln_n / eps ** 2
        return s, s * lp, s, 1
    if algo == "ams":
        s = p * (lp + 1.0 / eps)
        return s, s * ln_n, s, 1
    if algo == "hss-const" or (algo == "hss" and k == "adaptive"):
        s = p * math.log(lp / eps)
        return s, s * ln_n, s, math.log(lp / eps)
    if algo in ("hss", "hss1"):
        if algo == "hss1":
            k = 1
        k = optimal_round_count(p, eps) if k in (None, "auto") else int(k)
        s = k * p * (lp / eps) ** (1.0 / k)
        return s, s * ln_n, s, k
    raise ValueError(f"no cost formula for {algo!r}")


def predicted_costs(algo, p, eps, k=None, stages=1, n_total=None):
    """Sample size, computation, communication and supersteps of the partition step.

    ``algo`` is one of ``samplesort-regular``, ``samplesort-random``, ``ams``,
    ``hss`` (``k`` rounds, ``None``/``"auto"`` for the optimal count,
    ``"adaptive"`` for a constant sample per processor per round), ``hss1``
    (one round) or ``hss-const``.
    """
    if p < 2:
        return PredictedCost(0.0, 0.0, 0.0, 0, stages)
    r = group_count(p, stages)
    s, comp, comm, steps = _single(algo, r, eps, k, n_total)
    return PredictedCost(stages * s, stages * comp, stages * comm, stages * steps, stages)


def ams_practical_sample(p, eps):
    """Rule-of-thumb AMS sample size ``2 p max(1/eps, ln p)``."""
    return 2.0 * p * max(1.0 / eps, math.log(p))
