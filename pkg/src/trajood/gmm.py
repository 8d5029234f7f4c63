"""Diagonal Gaussian mixtures with exact scores at every diffusion noise level.

For mixture data the forward-noised marginal is again a mixture, so the
ideal denoiser (noise prediction) can be written down in closed form. This
module is the stand-in for a pretrained diffusion network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .schedule import NoiseSchedule, forward_noise

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GaussianMixture:
    """Mixture of ``K`` axis-aligned Gaussians in ``d`` dimensions.

    Attributes:
        weights: shape (K,), positive, summing to one.
        means: shape (K, d).
        variances: shape (K, d), strictly positive diagonal covariances.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        var = np.atleast_2d(np.asarray(self.variances, dtype=np.float64))
        if mu.ndim != 2 or mu.shape[0] != w.size or var.shape != mu.shape:
            raise ValueError(
                f"inconsistent shapes: weights {w.shape}, means {mu.shape}, variances {var.shape}"
            )
        if w.size == 0 or mu.shape[1] == 0:
            raise ValueError("mixture needs at least one component and one dimension")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        if np.any(var <= 0) or not np.all(np.isfinite(var)) or not np.all(np.isfinite(mu)):
            raise ValueError("variances must be finite and strictly positive")
        for arr in (w, mu, var):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)

    @property
    def n_components(self) -> int:
        return int(self.weights.size)

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])

    @classmethod
    def isotropic(cls, means, variance: float = 1.0, weights=None) -> "GaussianMixture":
        means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        k = means.shape[0]
        if weights is None:
            weights = np.full(k, 1.0 / k)
        return cls(weights, means, np.full_like(means, float(variance)))

    def shifted(self, delta: float, direction=None) -> "GaussianMixture":
        """Copy with every mean moved by ``delta`` along a unit ``direction``.

        The default direction is the first coordinate axis.
        """
        if direction is None:
            direction = np.zeros(self.dim)
            direction[0] = 1.0
        direction = np.asarray(direction, dtype=np.float64)
        if direction.shape != (self.dim,):
            raise ValueError(f"direction must have shape ({self.dim},)")
        direction = direction / np.linalg.norm(direction)
        return GaussianMixture(self.weights, self.means + delta * direction, self.variances)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` points, shape (n, d)."""
        comp = rng.choice(self.n_components, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        return self.means[comp] + np.sqrt(self.variances[comp]) * z

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianMixture":
        missing = {"weights", "means", "variances"} - set(data)
        if missing:
            raise ValueError(f"mixture spec missing fields: {sorted(missing)}")
        return cls(data["weights"], data["means"], data["variances"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GaussianMixture":
        return cls.from_dict(json.loads(text))


def _check_points(gmm: GaussianMixture, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != gmm.dim:
        raise ValueError(f"points must have trailing dimension {gmm.dim}, got shape {x.shape}")
    return x


def _component_log_joint(gmm: GaussianMixture, x: np.ndarray) -> np.ndarray:
    # log w_k + log N(x; mu_k, diag var_k), shape (..., K)
    diff = x[..., None, :] - gmm.means
    quad = np.sum(diff * diff / gmm.variances, axis=-1)
    log_norm = np.sum(np.log(gmm.variances), axis=-1) + gmm.dim * _LOG_2PI
    return np.log(gmm.weights) - 0.5 * (quad + log_norm)


def log_density(gmm: GaussianMixture, x) -> np.ndarray | float:
    """Mixture log-density at ``x`` (shape (..., d)), log-sum-exp stabilized."""
    x = _check_points(gmm, x)
    out = logsumexp(_component_log_joint(gmm, x), axis=-1)
    return float(out) if out.ndim == 0 else out


def responsibilities(gmm: GaussianMixture, x) -> np.ndarray:
    """Posterior component probabilities, shape (..., K)."""
    x = _check_points(gmm, x)
    return softmax(_component_log_joint(gmm, x), axis=-1)


def score(gmm: GaussianMixture, x) -> np.ndarray:
    """Gradient of the log-density, ``sum_k r_k(x) (mu_k - x) / var_k``."""
    x = _check_points(gmm, x)
    r = responsibilities(gmm, x)
    pull = (gmm.means - x[..., None, :]) / gmm.variances
    return np.sum(r[..., None] * pull, axis=-2)


def noised_marginal(gmm: GaussianMixture, schedule: NoiseSchedule, t: int) -> GaussianMixture:
    """Marginal of ``x_t`` when ``x_0 ~ gmm``: means scale by ``sqrt(ab_t)``,
    variances become ``ab_t * var + (1 - ab_t)``."""
    ab = schedule.alpha_bar_at(t)
    return GaussianMixture(
        gmm.weights,
        np.sqrt(ab) * gmm.means,
        ab * gmm.variances + (1.0 - ab),
    )


def oracle_noise_prediction(gmm: GaussianMixture, schedule: NoiseSchedule, x_t, t: int) -> np.ndarray:
    """Exact noise prediction ``-sqrt(1 - ab_t) * score_t(x_t)``."""
    ab = schedule.alpha_bar_at(t)
    return -np.sqrt(1.0 - ab) * score(noised_marginal(gmm, schedule, t), x_t)


def sample_trajectory(gmm: GaussianMixture, schedule: NoiseSchedule, x0, eps) -> np.ndarray:
    """Noise predictions at every level for one fixed noise draw.

    The same ``eps`` is reused at all ``T`` levels. Accepts a single vector
    (returns shape (T, d)) or a batch of shape (n, d) (returns (n, T, d)).
    """
    x0 = _check_points(gmm, x0)
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != x0.shape:
        raise ValueError(f"eps shape {eps.shape} does not match x0 shape {x0.shape}")
    rows = [
        oracle_noise_prediction(gmm, schedule, forward_noise(x0, t, eps, schedule), t)
        for t in range(1, schedule.steps + 1)
    ]
    return np.stack(rows, axis=-2)


def draw_oracle_trajectories(
    model: GaussianMixture,
    data: GaussianMixture,
    schedule: NoiseSchedule,
    n: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample ``n`` inputs from ``data`` and run them through the ``model`` oracle.

    Returns ``(x0, eps, trajectories)`` with shapes (n, d), (n, d), (n, T, d).
    """
    if model.dim != data.dim:
        raise ValueError("model and data mixtures must share a dimension")
    x0 = data.sample(n, rng)
    eps = rng.standard_normal(x0.shape)
    return x0, eps, sample_trajectory(model, schedule, x0, eps)
