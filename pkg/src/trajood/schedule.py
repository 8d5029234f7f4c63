"""Discrete forward-diffusion noise schedule.

Timesteps are 1-indexed: ``t`` runs over ``1..steps`` and ``alpha_bar(0) = 1``
is implied, never stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_STEPS = 10
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step noise variances ``beta`` and their cumulative products ``alpha_bar``.

    Use :func:`make_linear_schedule` rather than constructing directly; the
    constructor only checks the invariants.
    """

    beta: np.ndarray
    alpha_bar: np.ndarray
    beta_start: float
    beta_end: float

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        alpha_bar = np.asarray(self.alpha_bar, dtype=np.float64)
        if beta.ndim != 1 or beta.shape != alpha_bar.shape or beta.size < 1:
            raise ValueError("beta and alpha_bar must be 1-D arrays of equal nonzero length")
        if np.any(beta <= 0) or np.any(beta >= 1):
            raise ValueError("beta entries must lie in (0, 1)")
        if np.any(alpha_bar <= 0) or np.any(alpha_bar >= 1):
            raise ValueError("alpha_bar entries must lie in (0, 1)")
        if np.any(np.diff(alpha_bar) >= 0):
            raise ValueError("alpha_bar must be strictly decreasing")
        beta.setflags(write=False)
        alpha_bar.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha_bar", alpha_bar)

    @property
    def steps(self) -> int:
        return int(self.beta.size)

    def check_timestep(self, t: int) -> int:
        if isinstance(t, bool) or int(t) != t or not 1 <= t <= self.steps:
            raise ValueError(f"timestep {t!r} outside 1..{self.steps}")
        return int(t)

    def alpha_bar_at(self, t: int) -> float:
        """``alpha_bar`` at 1-indexed timestep ``t``."""
        return float(self.alpha_bar[self.check_timestep(t) - 1])

    def to_dict(self) -> dict:
        return {"steps": self.steps, "beta_start": self.beta_start, "beta_end": self.beta_end}

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseSchedule":
        return make_linear_schedule(
            int(data.get("steps", DEFAULT_STEPS)),
            float(data.get("beta_start", DEFAULT_BETA_START)),
            float(data.get("beta_end", DEFAULT_BETA_END)),
        )

    def __eq__(self, other):
        if not isinstance(other, NoiseSchedule):
            return NotImplemented
        return np.array_equal(self.beta, other.beta) and np.array_equal(self.alpha_bar, other.alpha_bar)

    def __hash__(self):
        return hash((self.beta.tobytes(), self.alpha_bar.tobytes()))


def make_linear_schedule(
    steps: int = DEFAULT_STEPS,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """Linearly spaced betas from ``beta_start`` to ``beta_end`` inclusive.

    ``steps=1`` is accepted as long as ``beta_start == beta_end``; this keeps
    single-level trajectories constructible for tests.
    """
    if isinstance(steps, bool) or int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    if not (0 < beta_start < 1 and 0 < beta_end < 1):
        raise ValueError("betas must lie in (0, 1)")
    if beta_start > beta_end:
        raise ValueError("beta_start must not exceed beta_end")
    if steps == 1 and beta_start != beta_end:
        raise ValueError("a single-step schedule needs beta_start == beta_end")
    beta = np.linspace(beta_start, beta_end, int(steps), dtype=np.float64)
    alpha_bar = np.cumprod(1.0 - beta)
    return NoiseSchedule(beta=beta, alpha_bar=alpha_bar, beta_start=float(beta_start), beta_end=float(beta_end))


def forward_noise(x0, t: int, eps, schedule: NoiseSchedule) -> np.ndarray:
    """Noised sample ``sqrt(ab_t) * x0 + sqrt(1 - ab_t) * eps``.

    Works on single vectors or batches; ``x0`` and ``eps`` must have the
    same shape.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError(f"x0 shape {x0.shape} does not match eps shape {eps.shape}")
    ab = schedule.alpha_bar_at(t)
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
