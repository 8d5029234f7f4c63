"""Distance-to-reference OOD scores and Z-score calibration.

The default score is the entropy-regularized transport cost from a point
mass at the test feature to the uniform measure on the reference set,

    s_T(f) = min_{gamma in simplex} <gamma, d> - T * H(gamma)
           = -T * log sum_i exp(-d_i / T),

restricted to the ``k`` nearest references (``k >= m`` recovers the full sum).
Higher scores mean more anomalous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp, softmax

from .coreset import ReferenceSet

SCORING_METHODS = ("soft_weighted", "unweighted", "inverse_distance")
INVERSE_DISTANCE_EPS = 1e-8


class DegenerateCalibrationError(ValueError):
    """Reference scores have (numerically) zero spread."""


@dataclass(frozen=True)
class ScoreConfig:
    temperature: float = 0.5
    k: int = 10
    method: str = "soft_weighted"
    leave_one_out: bool = False

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature!r}")
        if isinstance(self.k, bool) or int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if self.method not in SCORING_METHODS:
            raise ValueError(f"unknown scoring method {self.method!r}; expected one of {SCORING_METHODS}")

    def to_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "k": int(self.k),
            "method": self.method,
            "leave_one_out": self.leave_one_out,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScoreConfig":
        known = {"temperature", "k", "method", "leave_one_out"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown score config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class CalibrationStats:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma}


def _ref_features(refs) -> np.ndarray:
    feats = refs.features if isinstance(refs, ReferenceSet) else refs
    feats = np.atleast_2d(np.asarray(feats, dtype=np.float64))
    if feats.shape[0] == 0:
        raise ValueError("reference set is empty")
    return feats


def reference_distances(f, refs) -> np.ndarray:
    """Euclidean distances from each query (shape (p,) or (q, p)) to each reference."""
    feats = _ref_features(refs)
    q = np.asarray(f, dtype=np.float64)
    single = q.ndim == 1
    d = cdist(np.atleast_2d(q), feats)
    return d[0] if single else d


def _nearest(d: np.ndarray, k: int) -> np.ndarray:
    k = min(int(k), d.shape[-1])
    if k == d.shape[-1]:
        return np.sort(d, axis=-1)
    return np.sort(np.partition(d, k - 1, axis=-1)[..., :k], axis=-1)


def soft_min(d, temperature: float):
    """``-T log sum exp(-d / T)`` along the last axis."""
    d = np.asarray(d, dtype=np.float64)
    return -temperature * logsumexp(-d / temperature, axis=-1)


def _unpack(x):
    return float(x) if np.ndim(x) == 0 else x


def soft_min_score(f, refs, cfg: ScoreConfig = ScoreConfig()):
    """Soft-minimum distance over the ``cfg.k`` nearest references."""
    d = _nearest(reference_distances(f, refs), cfg.k)
    return _unpack(soft_min(d, cfg.temperature))


def boltzmann_coupling(f, refs, temperature: float) -> np.ndarray:
    """Optimal transport plan ``softmax(-d / T)`` over all references."""
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    d = reference_distances(f, refs)
    return softmax(-d / temperature, axis=-1)


def entropic_objective(gamma, d, temperature: float) -> float:
    """``<gamma, d> - T * H(gamma)`` with ``0 log 0 = 0``."""
    gamma = np.asarray(gamma, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    pos = gamma > 0
    neg_entropy = np.sum(gamma[pos] * np.log(gamma[pos]))
    return float(gamma @ d + temperature * neg_entropy)


def unweighted_knn_score(f, refs, k: int):
    """Mean distance to the ``k`` nearest references."""
    d = _nearest(reference_distances(f, refs), k)
    return _unpack(np.mean(d, axis=-1))


def inverse_distance_score(f, refs, k: int):
    """Inverse-distance weighted mean of the ``k`` nearest distances."""
    d = _nearest(reference_distances(f, refs), k)
    w = 1.0 / (d + INVERSE_DISTANCE_EPS)
    return _unpack(np.sum(w * d, axis=-1) / np.sum(w, axis=-1))


def score_points(f, refs, cfg: ScoreConfig = ScoreConfig()):
    """Dispatch on ``cfg.method``."""
    if cfg.method == "soft_weighted":
        return soft_min_score(f, refs, cfg)
    if cfg.method == "unweighted":
        return unweighted_knn_score(f, refs, cfg.k)
    return inverse_distance_score(f, refs, cfg.k)


def reference_self_scores(refs, cfg: ScoreConfig = ScoreConfig()) -> np.ndarray:
    """Score every reference against the set.

    By default each reference sees itself at distance zero. With
    ``cfg.leave_one_out`` the self term is dropped, which needs at least two
    references.
    """
    feats = _ref_features(refs)
    if not cfg.leave_one_out:
        return np.asarray(score_points(feats, feats, cfg), dtype=np.float64).reshape(-1)
    m = feats.shape[0]
    if m < 2:
        raise ValueError("leave-one-out calibration needs at least two references")
    out = np.empty(m)
    for i in range(m):
        others = np.delete(feats, i, axis=0)
        out[i] = score_points(feats[i], others, cfg)
    return out


def fit_calibration(ref_scores) -> CalibrationStats:
    """Mean and population standard deviation of the reference scores."""
    s = np.asarray(ref_scores, dtype=np.float64).reshape(-1)
    if s.size < 2:
        raise ValueError("calibration needs at least two scores")
    mu = float(np.mean(s))
    sigma = float(np.sqrt(np.mean((s - mu) ** 2)))
    if sigma < 1e-12:
        raise DegenerateCalibrationError(f"reference scores have spread {sigma:.3g}")
    return CalibrationStats(mu, sigma)


def calibrate(score, stats: CalibrationStats):
    """Z-score ``(score - mu) / sigma``."""
    out = (np.asarray(score, dtype=np.float64) - stats.mu) / stats.sigma
    return _unpack(out)
