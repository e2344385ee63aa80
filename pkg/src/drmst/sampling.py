"""Two-piece uniform edge-weight sampler used for Monte-Carlo evaluation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import UncertainGraph


@dataclass(frozen=True)
class PiecewiseUniformSampler:
    """Per edge: Uniform[lo, mean] with probability p_left, else Uniform[mean, hi].

    ``p_left = (hi - mean) / (hi - lo)`` makes the expectation exactly ``mean``.
    """

    lo: np.ndarray
    hi: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        lo, hi, mean = (np.asarray(a, dtype=float) for a in (self.lo, self.hi, self.mean))
        if not (lo.shape == hi.shape == mean.shape and lo.ndim == 1):
            raise ValueError("lo, hi, mean must be equal-length vectors")
        if np.any(lo > mean) or np.any(mean > hi):
            raise ValueError("need lo <= mean <= hi on every edge")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "mean", mean)

    @classmethod
    def from_instance(cls, inst: UncertainGraph) -> "PiecewiseUniformSampler":
        """Support bounds and point means of the instance's edges."""
        return cls(inst.lowers, inst.uppers, inst.means)

    @property
    def p_left(self) -> np.ndarray:
        width = self.hi - self.lo
        safe = np.where(width > 0, width, 1.0)
        return np.where(width > 0, (self.hi - self.mean) / safe, 1.0)


def sample_weights(sampler: PiecewiseUniformSampler, count: int, seed) -> np.ndarray:
    """(count, m) matrix of i.i.d. weight vectors, reproducible from ``seed``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    m = len(sampler.lo)
    left = rng.random((count, m)) < sampler.p_left
    u = rng.random((count, m))
    low_piece = sampler.lo + u * (sampler.mean - sampler.lo)
    high_piece = sampler.mean + u * (sampler.hi - sampler.mean)
    return np.where(left, low_piece, high_piece)
