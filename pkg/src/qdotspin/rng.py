"""Counter-based random numbers for reproducible, schedule-independent shots.

Every uniform variate is a pure function of the tuple
``(master_seed, shot, step, slot)``: nothing is stateful, so shots can be
computed in any order, in any chunking and on any number of workers and
still give identical draws.  The mixing function is the SplitMix64
finaliser applied once per key component.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

__all__ = ["counter_uniform", "ShotStream", "derive_seed"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(x):
    if np.ndim(x) == 0:
        return np.uint64(int(x) & _MASK)
    return np.asarray(x).astype(np.uint64)


def _hash(seed, *components):
    with np.errstate(over="ignore"):
        h = _mix(np.atleast_1d(_u64(seed)) + _GOLDEN)
        for c in components:
            h = _mix((h ^ np.atleast_1d(_u64(c))) + _GOLDEN)
    return h


def counter_uniform(seed, shot, step, slot) -> np.ndarray:
    """Uniform variates in [0, 1) keyed by (seed, shot, step, slot).

    Arguments broadcast against each other, so ``shot`` can be an array of
    shot indices and ``slot`` a column vector of draw slots.
    """
    h = _hash(seed, shot, step, slot)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def derive_seed(seed: int, *components: int) -> int:
    """Child seed for a sub-run (e.g. one point of a sweep)."""
    return int(_hash(seed, *components)[0])


class ShotStream:
    """Sequential view of the counter-based draws of one (seed, shot, step).

    ``next_uniform`` hands out slot 0, 1, 2, ... in order; ``uniforms(k)``
    returns the first ``k`` slots without advancing.
    """

    def __init__(self, seed: int, shot: int = 0, step: int = 0):
        self.seed = int(seed)
        self.shot = int(shot)
        self.step = int(step)
        self._slot = 0

    def uniforms(self, k: int) -> np.ndarray:
        return counter_uniform(self.seed, self.shot, self.step, np.arange(k, dtype=np.uint64))

    def next_uniform(self) -> float:
        u = float(counter_uniform(self.seed, self.shot, self.step, self._slot)[0])
        self._slot += 1
        return u

    def exponential(self, rate: float) -> float:
        if rate <= 0:
            return float("inf")
        return float(-np.log1p(-self.next_uniform()) / rate)

    def normal(self) -> float:
        # inverse CDF; u = 0 would map to -inf, nudge into the open interval
        u = self.next_uniform()
        return float(ndtri(u if u > 0 else 2.0**-54))
