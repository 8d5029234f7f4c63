"""AUROC, end-to-end few-shot detection runs, and parameter sweeps."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import coreset
from .energy import extract_features
from .gmm import GaussianMixture, draw_oracle_trajectories
from .schedule import NoiseSchedule, make_linear_schedule
from .scoring import (
    ScoreConfig,
    calibrate,
    fit_calibration,
    reference_self_scores,
    score_points,
)

DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_TEMPERATURES = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)


def mann_whitney_u(id_scores, ood_scores) -> float:
    """Count of (ood, id) pairs with ood > id, ties counted one half.

    Sorting-based, O(n log n). The result is an exact half-integer.
    """
    a = np.asarray(id_scores, dtype=np.float64).reshape(-1)
    b = np.asarray(ood_scores, dtype=np.float64).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise ValueError("both score sets must be nonempty")
    a = np.sort(a)
    below = np.searchsorted(a, b, side="left")
    at_or_below = np.searchsorted(a, b, side="right")
    # 2U is an integer, so accumulate in int64 and halve once
    twice_u = int(np.sum(below, dtype=np.int64) + np.sum(at_or_below, dtype=np.int64))
    return twice_u / 2


def auroc(id_scores, ood_scores) -> float:
    """Probability that a random OOD score exceeds a random ID score (ties 1/2).

    Values below 1/2 are formed as ``1 - (n - U) / n``. The subtraction is
    exact there, so ``auroc(a, b) == 1 - auroc(b, a)`` holds bit for bit;
    the cost is an absolute error of at most 2**-54 instead of a relative one.
    """
    n = np.size(id_scores) * np.size(ood_scores)
    u = mann_whitney_u(id_scores, ood_scores)
    if 2 * u >= n:
        return u / n
    return 1.0 - (n - u) / n


@dataclass(frozen=True)
class ScoreStats:
    mean: float
    std: float

    @classmethod
    def of(cls, x) -> "ScoreStats":
        x = np.asarray(x, dtype=np.float64)
        return cls(float(np.mean(x)), float(np.std(x)))


@dataclass
class TaskResult:
    auroc: float
    id_raw: ScoreStats
    id_calibrated: ScoreStats
    ood_raw: ScoreStats
    ood_calibrated: ScoreStats
    config: dict
    seed: int
    id_scores: np.ndarray = field(repr=False)
    ood_scores: np.ndarray = field(repr=False)
    reference_indices: tuple = field(repr=False, default=())

    def to_dict(self, include_scores: bool = True) -> dict:
        out = {
            "auroc": self.auroc,
            "id_score_stats": {
                "raw": vars(self.id_raw),
                "calibrated": vars(self.id_calibrated),
            },
            "ood_score_stats": {
                "raw": vars(self.ood_raw),
                "calibrated": vars(self.ood_calibrated),
            },
            "config": self.config,
            "seed": self.seed,
        }
        if include_scores:
            out["reference_indices"] = list(self.reference_indices)
            out["id_scores"] = self.id_scores.tolist()
            out["ood_scores"] = self.ood_scores.tolist()
        return out


def split_pool(n: int, seed: int, reference_fraction: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle of ``range(n)`` into (reference candidates, held-out test)."""
    if not 0 < reference_fraction < 1:
        raise ValueError("reference_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    cut = int(round(n * reference_fraction))
    if cut < 1 or cut >= n:
        raise ValueError(f"pool of {n} too small to split at {reference_fraction}")
    return perm[:cut], perm[cut:]


def run_task(
    id_features,
    ood_features,
    method: str = "facility_location",
    budget: int | None = coreset.DEFAULT_BUDGET,
    score_cfg: ScoreConfig = ScoreConfig(),
    seed: int = 0,
    reference_fraction: float = 0.5,
) -> TaskResult:
    """Select references from part of the ID pool, calibrate, score the rest.

    ``budget=None`` uses every reference candidate. Degenerate calibration
    propagates as :class:`~trajood.scoring.DegenerateCalibrationError`.
    """
    id_features = np.asarray(id_features, dtype=np.float64)
    ood_features = np.asarray(ood_features, dtype=np.float64)
    cand_idx, test_idx = split_pool(len(id_features), seed, reference_fraction)
    candidates = id_features[cand_idx]
    m = len(candidates) if budget is None else budget
    if m > len(candidates):
        raise ValueError(f"budget {m} exceeds {len(candidates)} reference candidates")

    refs = coreset.select(candidates, method, m, seed)
    stats = fit_calibration(reference_self_scores(refs, score_cfg))
    id_raw = np.asarray(score_points(id_features[test_idx], refs, score_cfg)).reshape(-1)
    ood_raw = np.asarray(score_points(ood_features, refs, score_cfg)).reshape(-1)
    id_cal = np.asarray(calibrate(id_raw, stats)).reshape(-1)
    ood_cal = np.asarray(calibrate(ood_raw, stats)).reshape(-1)

    config = {
        "method": method,
        "budget": m,
        "score": score_cfg.to_dict(),
        "reference_fraction": reference_fraction,
        "calibration": stats.to_dict(),
        "n_id": int(len(id_features)),
        "n_ood": int(len(ood_features)),
    }
    return TaskResult(
        auroc=auroc(id_cal, ood_cal),
        id_raw=ScoreStats.of(id_raw),
        id_calibrated=ScoreStats.of(id_cal),
        ood_raw=ScoreStats.of(ood_raw),
        ood_calibrated=ScoreStats.of(ood_cal),
        config=config,
        seed=int(seed),
        id_scores=id_raw,
        ood_scores=ood_raw,
        reference_indices=tuple(int(cand_idx[i]) for i in refs.indices),
    )


@dataclass(frozen=True)
class SweepRow:
    value: float | int | None
    mean_auroc: float
    std_auroc: float
    aurocs: tuple


def _sweep(values, seeds, run) -> list[SweepRow]:
    rows = []
    for v in values:
        scores = tuple(run(v, s).auroc for s in seeds)
        rows.append(SweepRow(v, float(np.mean(scores)), float(np.std(scores)), scores))
    return rows


def sweep_reference_budget(
    id_features,
    ood_features,
    budgets,
    seeds=DEFAULT_SEEDS,
    method: str = "facility_location",
    score_cfg: ScoreConfig = ScoreConfig(),
) -> list[SweepRow]:
    """One :func:`run_task` per (budget, seed); ``None`` in ``budgets`` means the full pool."""
    return _sweep(
        budgets,
        seeds,
        lambda b, s: run_task(id_features, ood_features, method, b, score_cfg, s),
    )


def sweep_temperature(
    id_features,
    ood_features,
    temperatures=DEFAULT_TEMPERATURES,
    seeds=DEFAULT_SEEDS,
    method: str = "facility_location",
    budget: int | None = coreset.DEFAULT_BUDGET,
    score_cfg: ScoreConfig = ScoreConfig(),
) -> list[SweepRow]:
    def run(temp, s):
        cfg = ScoreConfig(float(temp), score_cfg.k, score_cfg.method, score_cfg.leave_one_out)
        return run_task(id_features, ood_features, method, budget, cfg, s)

    return _sweep(temperatures, seeds, run)


def cross_pair_matrix(
    pools: dict,
    method: str = "facility_location",
    budget: int | None = coreset.DEFAULT_BUDGET,
    score_cfg: ScoreConfig = ScoreConfig(),
    seeds=DEFAULT_SEEDS,
) -> dict:
    """Seed-averaged AUROC for every ordered (ID, OOD) pair of distinct pools.

    Keys are ``(id_name, ood_name)`` in the pools' insertion order.
    """
    names = list(pools)
    out = {}
    for id_name in names:
        for ood_name in names:
            if id_name == ood_name:
                continue
            runs = [
                run_task(pools[id_name], pools[ood_name], method, budget, score_cfg, s).auroc
                for s in seeds
            ]
            out[(id_name, ood_name)] = float(np.mean(runs))
    return out


def matrix_to_csv(matrix: dict, names) -> str:
    """Heatmap CSV: one row per ID pool, one column per OOD pool, blank diagonal."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id\\ood", *names])
    for a in names:
        writer.writerow([a, *("" if a == b else repr(matrix[(a, b)]) for b in names)])
    return buf.getvalue()


def sweep_to_csv(rows, value_name: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([value_name, "mean_auroc", "std_auroc", "aurocs"])
    for r in rows:
        value = "full" if r.value is None else r.value
        writer.writerow([value, repr(r.mean_auroc), repr(r.std_auroc), " ".join(map(repr, r.aurocs))])
    return buf.getvalue()


def two_component_mixture(dim: int = 8, separation: float = 3.0, variance: float = 1.0) -> GaussianMixture:
    """Equal-weight pair of isotropic Gaussians at ``+-separation/2`` along the second axis.

    The components sit orthogonal to the default shift direction (first
    axis), so a shifted copy never lands on the other component.
    """
    if dim < 2:
        raise ValueError("need dim >= 2")
    means = np.zeros((2, dim))
    means[0, 1] = separation / 2
    means[1, 1] = -separation / 2
    return GaussianMixture.isotropic(means, variance)


def synthetic_task(
    delta: float,
    seed: int = 0,
    n_id: int = 1000,
    n_ood: int = 500,
    model: GaussianMixture | None = None,
    schedule: NoiseSchedule | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Energy features for ID draws of ``model`` and for a ``delta``-shifted copy.

    The oracle denoiser is always ``model``, so OOD inputs are scored by a
    "network" that never saw them.
    """
    model = two_component_mixture() if model is None else model
    schedule = make_linear_schedule() if schedule is None else schedule
    id_rng, ood_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    _, _, id_traj = draw_oracle_trajectories(model, model, schedule, n_id, id_rng)
    _, _, ood_traj = draw_oracle_trajectories(model, model.shifted(delta), schedule, n_ood, ood_rng)
    return extract_features(id_traj), extract_features(ood_traj)
