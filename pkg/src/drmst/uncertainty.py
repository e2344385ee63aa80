"""Ambiguity sets for edge weights and the worst-case certainty equivalent.

For every supported ambiguity set the supremum of ``alpha * ln E[exp(lam * z / alpha)]``
(``lam >= 0``) is attained by one of at most two small discrete distributions.
Each descriptor exposes those extremal distributions as ``candidates()`` and the
kernel evaluates the certainty equivalent on them with a shifted log-sum-exp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

# alpha below this fraction of the support width is the alpha = 0 branch
ALPHA_ZERO_REL = 1e-12


def _check_finite(**vals):
    for k, v in vals.items():
        if not math.isfinite(v):
            raise ValueError(f"{k} must be finite, got {v}")


@dataclass(frozen=True)
class Deterministic:
    """Edge with a known, constant weight."""

    value: float

    def __post_init__(self):
        _check_finite(value=self.value)

    @property
    def lo(self):
        return self.value

    @property
    def hi(self):
        return self.value

    @property
    def mean(self):
        return self.value

    @property
    def worst_mean(self):
        return self.value

    def candidates(self):
        return ((np.array([self.value]), np.array([1.0])),)


@dataclass(frozen=True)
class MeanSupport:
    """Known mean on a bounded support [lo, hi]."""

    lo: float
    hi: float
    mean: float

    def __post_init__(self):
        _check_finite(lo=self.lo, hi=self.hi, mean=self.mean)
        if not self.lo < self.hi:
            raise ValueError(f"support needs lo < hi, got [{self.lo}, {self.hi}]")
        if not self.lo <= self.mean <= self.hi:
            raise ValueError(f"mean {self.mean} outside support [{self.lo}, {self.hi}]")

    @property
    def worst_mean(self):
        return self.mean

    def candidates(self):
        return (_two_point(self.lo, self.hi, self.mean),)


@dataclass(frozen=True)
class MeanIntervalSupport:
    """Mean known only to lie in [mean_lo, mean_hi], support [lo, hi]."""

    lo: float
    hi: float
    mean_lo: float
    mean_hi: float

    def __post_init__(self):
        _check_finite(lo=self.lo, hi=self.hi, mean_lo=self.mean_lo, mean_hi=self.mean_hi)
        if not self.lo < self.hi:
            raise ValueError(f"support needs lo < hi, got [{self.lo}, {self.hi}]")
        if not self.lo <= self.mean_lo <= self.mean_hi <= self.hi:
            raise ValueError("need lo <= mean_lo <= mean_hi <= hi")

    @property
    def mean(self):
        return 0.5 * (self.mean_lo + self.mean_hi)

    @property
    def worst_mean(self):
        return self.mean_hi

    def candidates(self):
        # the certainty equivalent is increasing in the mean for lam >= 0
        return (_two_point(self.lo, self.hi, self.mean_hi),)


@dataclass(frozen=True)
class MeanMad:
    """Mean and mean-absolute-deviation bound on the normalized support [-1, 1].

    ``mad`` may exceed the largest deviation any distribution with this mean
    can reach (``1 - mean**2``); the bound is then slack and clipped.
    """

    mean: float
    mad: float

    def __post_init__(self):
        _check_finite(mean=self.mean, mad=self.mad)
        if not -1.0 <= self.mean <= 1.0:
            raise ValueError(f"normalized mean must be in [-1, 1], got {self.mean}")
        limit = min(2 * (1 - self.mean), 2 * (1 + self.mean))
        if not 0.0 <= self.mad <= limit + 1e-12:
            raise ValueError(f"mad must be in [0, {limit}], got {self.mad}")

    lo = -1.0
    hi = 1.0

    @property
    def worst_mean(self):
        return self.mean

    def candidates(self):
        mu = self.mean
        delta = min(self.mad, 1.0 - mu * mu)
        if delta <= 0.0:
            return ((np.array([mu]), np.array([1.0])),)
        p_lo = delta / (2 * (1 + mu))
        p_hi = delta / (2 * (1 - mu))
        p_mid = max(0.0, 1.0 - p_lo - p_hi)
        return (_atoms([-1.0, mu, 1.0], [p_lo, p_mid, p_hi]),)


@dataclass(frozen=True)
class MeanVariance:
    """Mean and second-moment bound E[z^2] <= second_moment on [-1, 1]."""

    mean: float
    second_moment: float

    def __post_init__(self):
        _check_finite(mean=self.mean, second_moment=self.second_moment)
        if not -1.0 <= self.mean <= 1.0:
            raise ValueError(f"normalized mean must be in [-1, 1], got {self.mean}")
        if not self.mean**2 - 1e-12 <= self.second_moment <= 1.0 + 1e-12:
            raise ValueError("need mean**2 <= second_moment <= 1")

    lo = -1.0
    hi = 1.0

    @property
    def worst_mean(self):
        return self.mean

    def candidates(self):
        mu, s2 = self.mean, min(self.second_moment, 1.0)
        spread = s2 - mu * mu
        if spread <= 1e-15 or abs(mu) >= 1.0:
            return ((np.array([mu]), np.array([1.0])),)
        # upper branch: mass on {(mu - s2) / (1 - mu), 1}
        d1 = 1 - 2 * mu + s2
        up = _atoms([(mu - s2) / (1 - mu), 1.0], [(1 - mu) ** 2 / d1, spread / d1])
        # lower branch: mass on {-1, (mu + s2) / (1 + mu)}
        d2 = 1 + 2 * mu + s2
        down = _atoms([-1.0, (mu + s2) / (1 + mu)], [spread / d2, (1 + mu) ** 2 / d2])
        return (up, down)


@dataclass(frozen=True)
class Normalized:
    """A MeanMad / MeanVariance set stated on [-1, 1], placed on raw support [lo, hi]."""

    lo: float
    hi: float
    inner: Union[MeanMad, MeanVariance]

    def __post_init__(self):
        _check_finite(lo=self.lo, hi=self.hi)
        if not self.lo < self.hi:
            raise ValueError("normalized support needs lo < hi; use Deterministic for a constant edge")

    @property
    def scale(self):
        return 0.5 * (self.hi - self.lo)

    @property
    def offset(self):
        return 0.5 * (self.hi + self.lo)

    @property
    def mean(self):
        return float(denormalize_point(self.inner.mean, self.lo, self.hi))

    @property
    def worst_mean(self):
        return self.mean

    def candidates(self):
        return tuple(
            (self.offset + self.scale * z, p) for z, p in self.inner.candidates()
        )


EdgeUncertainty = Union[
    Deterministic, MeanSupport, MeanIntervalSupport, MeanMad, MeanVariance, Normalized
]


def _atoms(points, probs):
    z = np.asarray(points, dtype=float)
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    return z, p / p.sum()


def _two_point(lo, hi, mean):
    mass_hi = (mean - lo) / (hi - lo)
    return _atoms([lo, hi], [1.0 - mass_hi, mass_hi])


def normalize_point(z, lo, hi):
    if not lo < hi:
        raise ValueError("normalization needs lo < hi")
    return (2 * np.asarray(z, dtype=float) - (lo + hi)) / (hi - lo)


def denormalize_point(z, lo, hi):
    if not lo < hi:
        raise ValueError("normalization needs lo < hi")
    return 0.5 * ((hi - lo) * np.asarray(z, dtype=float) + (lo + hi))


def normalize_support(lo: float, hi: float, mean: float, *, mad=None, var=None) -> Normalized:
    """Build a [-1, 1] MeanMad or MeanVariance set from raw-scale statistics.

    ``mad`` is E|z - mean| <= mad and ``var`` is Var(z) <= var, both on the raw
    scale. Bounds beyond what the support allows are clipped (they are slack).
    """
    if not lo < hi:
        raise ValueError(f"cannot normalize degenerate support [{lo}, {hi}]")
    if (mad is None) == (var is None):
        raise ValueError("give exactly one of mad or var")
    mu = float(normalize_point(mean, lo, hi))
    if not -1.0 - 1e-12 <= mu <= 1.0 + 1e-12:
        raise ValueError(f"mean {mean} outside support [{lo}, {hi}]")
    mu = min(1.0, max(-1.0, mu))
    half = 0.5 * (hi - lo)
    if mad is not None:
        if mad < 0:
            raise ValueError("mad must be nonnegative")
        delta = min(mad / half, min(2 * (1 - mu), 2 * (1 + mu)))
        return Normalized(lo, hi, MeanMad(mu, delta))
    if var < 0:
        raise ValueError("var must be nonnegative")
    return Normalized(lo, hi, MeanVariance(mu, min(1.0, mu * mu + var / half**2)))


# ---------------------------------------------------------------------------
# kernel


def _ce_atoms(z, p, alpha, lam):
    t = lam * z
    live = p > 0
    top = t[live].max()
    if alpha == 0.0:
        return top
    if math.isinf(alpha):
        return float(np.dot(p, t))
    u = (t - top) / alpha
    return top + alpha * math.log1p(float(np.dot(p, np.expm1(u))))


def _support_width(u) -> float:
    return float(u.hi - u.lo)


def worst_case_ce(u: EdgeUncertainty, alpha: float, lam: float = 1.0) -> float:
    """sup over the ambiguity set of ``alpha * ln E[exp(lam * z / alpha)]``.

    ``alpha = 0`` gives the worst support point, ``alpha = inf`` the worst mean.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha < ALPHA_ZERO_REL * _support_width(u) * lam:
        alpha = 0.0
    return max(_ce_atoms(z, p, alpha, lam) for z, p in u.candidates())


def _active(u, alpha, lam):
    best = None
    for z, p in u.candidates():
        val = _ce_atoms(z, p, alpha, lam)
        if best is None or val > best[0]:
            best = (val, z, p)
    return best


def _tilted(z, p, alpha, lam):
    t = lam * z
    live = p > 0
    w = np.where(live, p * np.exp((t - t[live].max()) / alpha), 0.0)
    return w / w.sum()


def ce_gradient_edge(u: EdgeUncertainty, alpha: float, p_a: float) -> float:
    """d/dp of C_alpha(z * p) at ``p = p_a``: the exponentially tilted mean of the worst case."""
    if not alpha > 0 or math.isinf(alpha):
        raise ValueError("gradient needs a finite alpha > 0 (alpha = 0 has zero subgradient)")
    _, z, p = _active(u, alpha, p_a)
    return float(np.dot(_tilted(z, p, alpha, p_a), z))


def ce_alpha_derivative(u: EdgeUncertainty, alpha: float, p_a: float = 1.0) -> float:
    """d/dalpha of C_alpha(z * p_a) for one edge."""
    if not alpha > 0 or math.isinf(alpha):
        raise ValueError("gradient needs a finite alpha > 0")
    val, z, p = _active(u, alpha, p_a)
    q = _tilted(z, p, alpha, p_a)
    return (val - p_a * float(np.dot(q, z))) / alpha


def ce_gradient_alpha(unc: Sequence[EdgeUncertainty], p, alpha: float) -> float:
    """d/dalpha of sum_e C_alpha(w_e * p_e); never positive."""
    p = np.asarray(p, dtype=float)
    return float(sum(ce_alpha_derivative(u, alpha, pa) for u, pa in zip(unc, p) if pa != 0.0))


def tree_ce(unc: Sequence[EdgeUncertainty], edge_ids, alpha: float) -> float:
    """Worst-case certainty equivalent of a tree's cost (sum over its edges)."""
    return float(sum(worst_case_ce(unc[e], alpha, 1.0) for e in sorted(edge_ids)))


# ---------------------------------------------------------------------------
# vectorized form over all edges of an instance


class EdgeTable:
    """Extremal distributions of every edge packed into (m, K, J) arrays."""

    def __init__(self, unc: Sequence[EdgeUncertainty]):
        cands = [u.candidates() for u in unc]
        m = len(cands)
        k = max((len(c) for c in cands), default=1)
        j = max((len(z) for c in cands for z, _ in c), default=1)
        z = np.zeros((m, k, j))
        p = np.zeros((m, k, j))
        for e, cs in enumerate(cands):
            for a in range(k):
                cz, cp = cs[min(a, len(cs) - 1)]
                z[e, a, : len(cz)] = cz
                z[e, a, len(cz):] = cz[0]
                p[e, a, : len(cp)] = cp
        self.z = z
        self.p = p
        self.live = p > 0
        self.m = m
        self.upper = np.where(self.live, z, -np.inf).max(axis=(1, 2))
        self.worst_mean = (p * z).sum(axis=2).max(axis=1)
        self.width = np.array([_support_width(u) for u in unc]) if m else np.zeros(0)
        spread = self.width[self.width > 0]
        self.scale = float(spread.mean()) if spread.size else 1.0

    def ce(self, alpha: float, edges=None) -> np.ndarray:
        """Per-edge C_alpha (lam = 1), optionally restricted to ``edges``."""
        if edges is None:
            z, p, live, upper, mean = self.z, self.p, self.live, self.upper, self.worst_mean
        else:
            z, p, live = self.z[edges], self.p[edges], self.live[edges]
            upper, mean = self.upper[edges], self.worst_mean[edges]
        if alpha < ALPHA_ZERO_REL * self.scale:
            return upper.copy()
        if math.isinf(alpha):
            return mean.copy()
        return _ce_block(z, p, live, np.asarray(alpha, dtype=float))

    def ce_rows(self, trees: np.ndarray, alphas: np.ndarray) -> np.ndarray:
        """Tree certainty equivalents with a separate alpha per tree row."""
        z = self.z[trees]
        vals = _ce_block(z, self.p[trees], self.live[trees], alphas[:, None, None, None])
        small = alphas < ALPHA_ZERO_REL * self.scale
        if small.any():
            vals[small] = self.upper[trees[small]]
        return vals.sum(axis=1)


def _ce_block(z, p, live, alpha):
    top = np.where(live, z, -np.inf).max(axis=-1, keepdims=True)
    u = (z - top) / alpha
    s = np.where(live, p * np.expm1(u), 0.0).sum(axis=-1, keepdims=True)
    return (top + alpha * np.log1p(s))[..., 0].max(axis=-1)


def exponential_ce(values, probs, alpha: float) -> float:
    """Plain (non-worst-case) certainty equivalent of a known discrete distribution."""
    z = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    return _ce_atoms(z, p / p.sum(), alpha, 1.0)
