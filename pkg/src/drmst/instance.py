"""Uncertain graph instances: container, random generation and the JSON file format."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import Graph
from .uncertainty import (
    Deterministic,
    EdgeTable,
    EdgeUncertainty,
    MeanIntervalSupport,
    MeanMad,
    MeanSupport,
    Normalized,
    normalize_support,
)

MAX_GEN_ATTEMPTS = 200
STAT_GEN_POLICIES = ("uniform-bounds", "mean-centered")


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class UncertainGraph:
    graph: Graph
    unc: tuple[EdgeUncertainty, ...]

    def __post_init__(self):
        object.__setattr__(self, "unc", tuple(self.unc))
        if len(self.unc) != self.graph.edge_count:
            raise ValueError(
                f"{len(self.unc)} edge descriptors for {self.graph.edge_count} edges"
            )

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    @property
    def edge_count(self) -> int:
        return self.graph.edge_count

    @cached_property
    def table(self) -> EdgeTable:
        return EdgeTable(self.unc)

    @property
    def weight_scale(self) -> float:
        """Mean support width over non-constant edges (1.0 if all are constant)."""
        return self.table.scale

    @property
    def means(self) -> np.ndarray:
        return np.array([u.mean for u in self.unc], dtype=float)

    @property
    def worst_means(self) -> np.ndarray:
        return self.table.worst_mean.copy()

    @property
    def uppers(self) -> np.ndarray:
        return self.table.upper.copy()

    @property
    def lowers(self) -> np.ndarray:
        return np.array([u.lo for u in self.unc], dtype=float)


@dataclass(frozen=True)
class StatGen:
    """Edge statistics policy.

    'uniform-bounds': lo ~ U(lo_range), width ~ U(width_range), mean = lo + U(mean_frac) * width.
    'mean-centered': mean ~ U(mean_range), width ~ U(width_range), lo = mean - U(mean_frac) * width,
    so the mean and the spread of an edge are drawn independently.
    """

    name: str = "uniform-bounds"
    lo_range: tuple[float, float] = (1.0, 10.0)
    width_range: tuple[float, float] = (1.0, 10.0)
    mean_frac: tuple[float, float] = (0.1, 0.9)
    mean_range: tuple[float, float] = (10.0, 20.0)

    def __post_init__(self):
        if self.name not in STAT_GEN_POLICIES:
            raise ValueError(f"unknown stat_gen policy {self.name!r}")
        if not (self.width_range[0] > 0 and self.width_range[1] >= self.width_range[0]):
            raise ValueError("width_range must be positive and ordered")
        if not 0 < self.mean_frac[0] <= self.mean_frac[1] < 1:
            raise ValueError("mean_frac must lie strictly inside (0, 1)")

    def draw(self, rng: np.random.Generator, m: int):
        if self.name == "mean-centered":
            mean = rng.uniform(*self.mean_range, size=m)
            width = rng.uniform(*self.width_range, size=m)
            frac = rng.uniform(*self.mean_frac, size=m)
            lo = mean - frac * width
            return lo, lo + width, mean
        lo = rng.uniform(*self.lo_range, size=m)
        width = rng.uniform(*self.width_range, size=m)
        frac = rng.uniform(*self.mean_frac, size=m)
        return lo, lo + width, lo + frac * width


def gen_erdos_renyi(n: int, p: float, seed: int, stat_gen: StatGen | None = None,
                    max_attempts: int = MAX_GEN_ATTEMPTS) -> UncertainGraph:
    """Seeded G(n, p) instance with MeanSupport edges, redrawn until connected."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0 < p <= 1:
        raise ValueError("need 0 < p <= 1")
    stat_gen = stat_gen or StatGen()
    iu, iv = np.triu_indices(n, k=1)
    for attempt in range(max_attempts):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), attempt]))
        keep = rng.random(len(iu)) < p
        edges = list(zip(iu[keep].tolist(), iv[keep].tolist()))
        try:
            graph = Graph(n, edges)
        except ValueError:
            continue
        lo, hi, mean = stat_gen.draw(rng, len(edges))
        unc = tuple(MeanSupport(float(a), float(b), float(c)) for a, b, c in zip(lo, hi, mean))
        return UncertainGraph(graph, unc)
    raise GenerationError(
        f"no connected G(n={n}, p={p}) draw in {max_attempts} attempts for seed {seed}"
    )


# ---------------------------------------------------------------------------
# JSON


def _edge_json(j: int, uv, u: EdgeUncertainty) -> dict:
    rec = {"id": j, "u": uv[0], "v": uv[1]}
    if isinstance(u, Deterministic):
        rec.update(lo=u.value, hi=u.value, mean=u.value)
    elif isinstance(u, MeanSupport):
        rec.update(lo=u.lo, hi=u.hi, mean=u.mean)
    elif isinstance(u, MeanIntervalSupport):
        rec.update(lo=u.lo, hi=u.hi, mean=u.mean, mean_lo=u.mean_lo, mean_hi=u.mean_hi)
    elif isinstance(u, Normalized):
        half = u.scale
        rec.update(lo=u.lo, hi=u.hi, mean=u.mean)
        if isinstance(u.inner, MeanMad):
            rec["mad"] = u.inner.mad * half
        else:
            rec["var"] = (u.inner.second_moment - u.inner.mean**2) * half**2
    else:
        raise ValueError(f"{type(u).__name__} has no raw-scale JSON form; wrap it with normalize_support")
    return rec


def _edge_from_json(rec: dict) -> EdgeUncertainty:
    lo, hi = float(rec["lo"]), float(rec["hi"])
    if "mean_lo" in rec or "mean_hi" in rec:
        return MeanIntervalSupport(lo, hi, float(rec["mean_lo"]), float(rec["mean_hi"]))
    mean = float(rec["mean"])
    if lo == hi:
        if mean != lo:
            raise ValueError(f"edge {rec.get('id')}: constant edge needs mean == lo == hi")
        return Deterministic(lo)
    if rec.get("mad") is not None:
        return normalize_support(lo, hi, mean, mad=float(rec["mad"]))
    if rec.get("var") is not None:
        return normalize_support(lo, hi, mean, var=float(rec["var"]))
    return MeanSupport(lo, hi, mean)


def to_json_dict(inst: UncertainGraph) -> dict:
    return {
        "nodes": inst.node_count,
        "edges": [_edge_json(j, uv, u) for j, (uv, u) in enumerate(zip(inst.graph.edges, inst.unc))],
    }


def from_json_dict(data: dict) -> UncertainGraph:
    try:
        n = int(data["nodes"])
        recs = sorted(data["edges"], key=lambda r: int(r["id"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed graph document: {exc}") from exc
    ids = [int(r["id"]) for r in recs]
    if ids != list(range(len(recs))):
        raise ValueError("edge ids must be 0..m-1 without gaps")
    graph = Graph(n, [(int(r["u"]), int(r["v"])) for r in recs])
    return UncertainGraph(graph, [_edge_from_json(r) for r in recs])


def dumps(inst: UncertainGraph) -> str:
    return json.dumps(to_json_dict(inst), indent=1) + "\n"


def save(inst: UncertainGraph, path) -> None:
    Path(path).write_text(dumps(inst))


def load(path) -> UncertainGraph:
    return from_json_dict(json.loads(Path(path).read_text()))


def from_arrays(edges: Sequence[tuple[int, int]], lo, hi, mean, n: int | None = None) -> UncertainGraph:
    """Convenience builder; edges with lo == hi become Deterministic."""
    if n is None:
        n = 1 + max(max(e) for e in edges)
    unc = []
    for a, b, c in zip(lo, hi, mean):
        unc.append(Deterministic(float(a)) if a == b else MeanSupport(float(a), float(b), float(c)))
    return UncertainGraph(Graph(n, edges), unc)
