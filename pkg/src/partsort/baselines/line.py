"""The line algorithm: repeated uniform draws on a shrinking unit interval.

``w_0`` is uniform on ``[0, 1)`` and ``w_i`` uniform on ``[0, w_{i-1})``, so
``w_r`` is a product of ``r + 1`` independent uniforms. It models how a
single HykSort sample per round shrinks one side of a splitter interval.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class LineState:
    w: float = 1.0
    round: int = -1

    def step(self, rng):
        self.w = float(rng.uniform(0.0, self.w))
        self.round += 1
        return self.w


def line_cdf(x, i):
    """``P[w_i <= x] = x * sum_{k=0..i} ln(1/x)^k / k!``."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    t = math.log(1.0 / x)
    term, total = 1.0, 1.0
    for k in range(1, i + 1):
        term *= t / k
        total += term
    return min(1.0, x * total)


def line_tail(w_star, r, trials, rng):
    """Monte Carlo estimate of ``P[w_r > w_star]``."""
    w = rng.random((trials, r + 1)).prod(axis=1)
    return float(np.mean(w > w_star))


@dataclass
class LineResult:
    rounds: int
    tails: list


def line_simulate(w_star, p_star, rng, trials=100_000, max_rounds=200):
    """Smallest ``r`` whose estimated ``P[w_r > w_star]`` is below ``p_star``.

    ``w_star >= 1`` needs no rounds. Returns the per-round tail estimates too.
    """
    if w_star >= 1.0:
        return LineResult(0, [])
    w = rng.random(trials)
    tails = []
    for r in range(max_rounds + 1):
        if r:
            w *= rng.random(trials)
        tails.append(float(np.mean(w > w_star)))
        if tails[-1] < p_star:
            return LineResult(r, tails)
    return LineResult(max_rounds, tails)


def line_rounds_needed(w_star, p_star, max_rounds=10_000):
    """Exact smallest ``r`` with ``1 - F^r(w_star) < p_star``."""
    if w_star >= 1.0:
        return 0
    for r in range(max_rounds + 1):
        if 1.0 - line_cdf(w_star, r) < p_star:
            return r
    return max_rounds


def shrink_one_sided(n_keys, target, rng, max_rounds=10_000):
    """One-sided interval shrinkage on ``n_keys`` keys with one uniform sample per round.

    The upper bound starts at ``n_keys`` and moves to each sampled rank
    below it; returns the rounds until it is at most ``target``.
    """
    u, r = n_keys, 0
    while u > target and r < max_rounds:
        u = int(rng.integers(0, u))
        r += 1
    return r
