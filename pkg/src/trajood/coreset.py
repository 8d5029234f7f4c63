"""Reference-set selection over a pool of feature points.

Facility location is solved greedily in its maximization form

    G(S) = sum_j (D - min_{i in S} d(j, i)),   D = max pairwise distance,

which has the same argmax at every step as minimizing the mean distance to
the nearest selected point, but is monotone submodular with G(empty) = 0.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

METHODS = ("facility_location", "random", "k_center")
DEFAULT_BUDGET = 100


@dataclass(frozen=True)
class ReferenceSet:
    indices: tuple
    features: np.ndarray
    method: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        feats = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        if len(idx) < 1:
            raise ValueError("reference set must be nonempty")
        if len(set(idx)) != len(idx):
            raise ValueError("reference indices must be distinct")
        if feats.shape[0] != len(idx):
            raise ValueError(f"{len(idx)} indices but {feats.shape[0]} feature rows")
        if self.method not in METHODS:
            raise ValueError(f"unknown selection method {self.method!r}")
        feats.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "features", feats)

    @property
    def size(self) -> int:
        return len(self.indices)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "indices": list(self.indices),
            "features": self.features.tolist(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReferenceSet":
        return cls(data["indices"], data["features"], data["method"], dict(data.get("metadata", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ReferenceSet":
        return cls.from_dict(json.loads(text))


def _as_pool(pool) -> np.ndarray:
    arr = np.asarray(pool, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"pool must have shape (n>=1, p), got {arr.shape}")
    return arr


def _check_budget(m: int, n: int) -> int:
    if isinstance(m, bool) or int(m) != m or not 1 <= m <= n:
        raise ValueError(f"budget {m!r} outside 1..{n}")
    return int(m)


def _make_refs(pool: np.ndarray, indices, method: str, **meta) -> ReferenceSet:
    idx = [int(i) for i in indices]
    return ReferenceSet(tuple(idx), pool[idx], method, {"feature_space": "raw", **meta})


def fl_objective(pool, subset) -> float:
    """Mean distance from every pool point to its nearest member of ``subset``."""
    pool = _as_pool(pool)
    subset = list(subset)
    if not subset:
        raise ValueError("subset must be nonempty")
    dist = cdist(pool, pool[subset])
    return float(np.mean(dist.min(axis=1)))


def fl_gain_objective(pool, subset, offset: float | None = None) -> float:
    """Maximization-form objective ``sum_j (D - min_{i in S} d(j, i))``; 0 for the empty set."""
    pool = _as_pool(pool)
    dist = cdist(pool, pool)
    D = float(dist.max()) if offset is None else offset
    subset = list(subset)
    if not subset:
        return 0.0
    return float(np.sum(D - dist[:, subset].min(axis=1)))


def _gains(cover: np.ndarray, dist_rows: np.ndarray) -> np.ndarray:
    # rows are candidates; the same kernel serves naive and lazy greedy so
    # both see bit-identical gains
    return np.sum(np.maximum(cover[None, :] - dist_rows, 0.0), axis=1)


def _greedy_naive(dist: np.ndarray, m: int, cover: np.ndarray):
    n = dist.shape[0]
    chosen, gains = [], []
    available = np.ones(n, dtype=bool)
    for _ in range(m):
        g = _gains(cover, dist)
        g[~available] = -np.inf
        best = int(np.argmax(g))  # first maximum, so lowest index on ties
        chosen.append(best)
        gains.append(float(g[best]))
        available[best] = False
        cover = np.minimum(cover, dist[best])
    return chosen, gains


def _greedy_lazy(dist: np.ndarray, m: int, cover: np.ndarray):
    # Stale gains are upper bounds by submodularity; a refreshed candidate is
    # accepted only if its (-gain, index) key beats every remaining stale key,
    # which reproduces naive greedy's lowest-index tie-break exactly.
    initial = _gains(cover, dist)
    heap = [(-float(g), i) for i, g in enumerate(initial)]
    heapq.heapify(heap)
    fresh = {i: 0 for i in range(dist.shape[0])}
    chosen, gains = [], []
    step = 0
    while len(chosen) < m:
        neg_gain, i = heapq.heappop(heap)
        if fresh[i] == step:
            chosen.append(i)
            gains.append(-neg_gain)
            cover = np.minimum(cover, dist[i])
            step += 1
            continue
        g = float(_gains(cover, dist[i:i + 1])[0])
        fresh[i] = step
        heapq.heappush(heap, (-g, i))
    return chosen, gains


def facility_location_greedy(pool, m: int, lazy: bool = True) -> ReferenceSet:
    """Greedy facility-location selection of ``m`` points from ``pool``.

    Each step adds the point with the largest marginal coverage gain; ties go
    to the lowest index. ``lazy=True`` uses a priority queue of stale gains
    and returns exactly what the naive loop returns.
    """
    pool = _as_pool(pool)
    m = _check_budget(m, pool.shape[0])
    dist = cdist(pool, pool)
    offset = float(dist.max())
    cover = np.full(pool.shape[0], offset)
    chosen, gains = (_greedy_lazy if lazy else _greedy_naive)(dist, m, cover)
    return _make_refs(pool, chosen, "facility_location", marginal_gains=gains, offset=offset)


def random_select(pool, m: int, seed: int) -> ReferenceSet:
    pool = _as_pool(pool)
    m = _check_budget(m, pool.shape[0])
    rng = np.random.default_rng(seed)
    idx = rng.choice(pool.shape[0], size=m, replace=False)
    return _make_refs(pool, idx, "random", seed=int(seed))


def k_center_greedy(pool, m: int, seed: int) -> ReferenceSet:
    """Farthest-point selection from a seeded random first center."""
    pool = _as_pool(pool)
    n = pool.shape[0]
    m = _check_budget(m, n)
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    nearest = cdist(pool, pool[chosen[0]][None, :])[:, 0]
    while len(chosen) < m:
        nearest[chosen] = -np.inf
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, cdist(pool, pool[nxt][None, :])[:, 0])
    return _make_refs(pool, chosen, "k_center", seed=int(seed))


def covering_radius(pool, subset) -> float:
    """Largest distance from a pool point to its nearest member of ``subset``."""
    pool = _as_pool(pool)
    return float(cdist(pool, pool[list(subset)]).min(axis=1).max())


def select(pool, method: str, m: int, seed: int = 0) -> ReferenceSet:
    if method == "facility_location":
        return facility_location_greedy(pool, m)
    if method == "random":
        return random_select(pool, m, seed)
    if method == "k_center":
        return k_center_greedy(pool, m, seed)
    raise ValueError(f"unknown selection method {method!r}; expected one of {METHODS}")
