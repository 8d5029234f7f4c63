"""Trajectory energy features.

A trajectory is an array of noise predictions with shape (T, d); batches
carry a leading sample axis, (n, T, d). All reductions accumulate in
float64 with numpy's pairwise summation over the flattened (T*d) entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gmm import GaussianMixture, noised_marginal, score
from .schedule import NoiseSchedule, forward_noise


@dataclass(frozen=True)
class EnergyFeature:
    path_energy: float
    dynamics_energy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.path_energy, self.dynamics_energy])


def _as_trajectories(traj) -> np.ndarray:
    arr = np.asarray(traj, dtype=np.float64)
    if arr.ndim < 2 or arr.shape[-2] < 1 or arr.shape[-1] < 1:
        raise ValueError(f"trajectory must have shape (..., T>=1, d>=1), got {arr.shape}")
    return arr


def _flat_sum(values: np.ndarray) -> np.ndarray:
    # contiguous last axis so np.sum takes the pairwise path
    flat = np.ascontiguousarray(values).reshape(values.shape[:-2] + (-1,))
    return np.sum(flat, axis=-1)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def path_energy(traj):
    """Sum of squared noise predictions over all timesteps and coordinates."""
    eps = _as_trajectories(traj)
    return _scalar(_flat_sum(eps * eps))


def dynamics_energy(traj):
    """Sum of squared differences between consecutive timesteps.

    A single-step trajectory has no differences and gets 0.
    """
    eps = _as_trajectories(traj)
    if eps.shape[-2] < 2:
        return _scalar(np.zeros(eps.shape[:-2]))
    delta = np.diff(eps, axis=-2)
    return _scalar(_flat_sum(delta * delta))


def energy_feature(traj) -> EnergyFeature:
    eps = _as_trajectories(traj)
    if eps.ndim != 2:
        raise ValueError("energy_feature takes one trajectory; use extract_features for batches")
    return EnergyFeature(path_energy(eps), dynamics_energy(eps))


def extract_features(trajectories) -> np.ndarray:
    """(n, T, d) trajectories to an (n, 2) array of (path, dynamics) energies."""
    eps = _as_trajectories(trajectories)
    if eps.ndim != 3:
        raise ValueError(f"expected a (n, T, d) batch, got shape {eps.shape}")
    return np.stack([path_energy(eps), dynamics_energy(eps)], axis=-1).reshape(-1, 2)


def sobolev_score(f: EnergyFeature, lam: float = 1.0) -> float:
    """Combined magnitude-plus-smoothness energy ``f1 + lam * f2``."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    return f.path_energy + lam * f.dynamics_energy


def weighted_path_energy(
    traj,
    gmm: GaussianMixture,
    schedule: NoiseSchedule,
    x0,
    eps,
) -> float:
    """``sum_t (1 - ab_t) * ||grad log p_t(x_t)||^2`` from the analytic score.

    ``traj`` is only used to check that it matches the inputs' shape; the
    value is recomputed independently of the stored noise predictions.
    """
    traj = _as_trajectories(traj)
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape or x0.shape[-1] != gmm.dim:
        raise ValueError("x0 and eps must both have trailing dimension equal to the mixture's")
    if traj.shape != x0.shape[:-1] + (schedule.steps, gmm.dim):
        raise ValueError(f"trajectory shape {traj.shape} does not match the inputs")
    total = np.zeros(x0.shape[:-1])
    for t in range(1, schedule.steps + 1):
        x_t = forward_noise(x0, t, eps, schedule)
        s = score(noised_marginal(gmm, schedule, t), x_t)
        total = total + (1.0 - schedule.alpha_bar_at(t)) * np.sum(s * s, axis=-1)
    return _scalar(total)


def _moment_sum(values: np.ndarray, order: int) -> np.ndarray:
    return _flat_sum(values**order)


def moment_features(traj, order: int) -> np.ndarray:
    """Raw (uncentered) k-th moment sums of the entries and of their time differences.

    Returns ``(sum e^k, sum (delta e)^k)``; order 2 coincides with
    ``(path_energy, dynamics_energy)``.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order!r}")
    eps = _as_trajectories(traj)
    path = _moment_sum(eps, order)
    if eps.shape[-2] < 2:
        dyn = np.zeros_like(path)
    else:
        dyn = _moment_sum(np.diff(eps, axis=-2), order)
    return np.stack([path, dyn], axis=-1)


def raw_moment_sum(samples, order: int) -> float:
    """``sum e^k`` over every entry of an (n, d) sample block."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("samples must have shape (n, d)")
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order!r}")
    return float(_moment_sum(arr, order))
