"""JSON experiment configuration.

Example::

    {
      "schedule": {"steps": 10, "beta_start": 1e-4, "beta_end": 0.02},
      "model": {"weights": [0.5, 0.5], "means": [[...], [...]], "variances": [[...], [...]]},
      "pools": {
        "id":  {"gmm": "model", "samples": 1000, "label": "id"},
        "ood": {"gmm": "model", "shift": 4.0, "samples": 500, "label": "ood"},
        "real": {"trajectories": "exported.uftj"}
      },
      "coreset": {"method": "facility_location", "budget": 100},
      "score": {"temperature": 0.5, "k": 10, "method": "soft_weighted"},
      "seed": 0,
      "seeds": [0, 1, 2, 3, 4],
      "eval": {"id_pool": "id", "ood_pools": ["ood"]},
      "output_dir": "out"
    }

A pool's ``gmm`` is either an inline mixture or the string ``"model"``.
Relative trajectory paths resolve against the config file's directory.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .coreset import DEFAULT_BUDGET, METHODS
from .gmm import GaussianMixture
from .schedule import NoiseSchedule, make_linear_schedule
from .scoring import ScoreConfig
from .trajectory_io import LABELS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PoolSpec:
    name: str
    gmm: Optional[GaussianMixture] = None
    samples: int = 0
    trajectories: Optional[Path] = None
    label: str = "unlabeled"


@dataclass(frozen=True)
class EvalSpec:
    id_pool: Optional[str] = None
    ood_pools: tuple = ()
    cross_pairs: bool = False
    budgets: tuple = ()
    temperatures: tuple = ()
    reference_fraction: float = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    schedule: NoiseSchedule = field(default_factory=make_linear_schedule)
    model: Optional[GaussianMixture] = None
    pools: dict = field(default_factory=dict)
    method: str = "facility_location"
    budget: Optional[int] = DEFAULT_BUDGET
    score: ScoreConfig = ScoreConfig()
    seed: int = 0
    seeds: tuple = (0, 1, 2, 3, 4)
    eval: EvalSpec = EvalSpec()
    write_trajectories: bool = False
    output_dir: Optional[Path] = None
    raw: dict = field(default_factory=dict, repr=False)

    def check_files(self) -> None:
        """Raise FileNotFoundError for any trajectory file that is missing."""
        for pool in self.pools.values():
            if pool.trajectories is not None and not pool.trajectories.is_file():
                raise FileNotFoundError(f"pool {pool.name!r}: no such file {pool.trajectories}")


_TOP_KEYS = {
    "schedule", "model", "pools", "coreset", "score", "seed", "seeds", "eval",
    "write_trajectories", "output_dir",
}


def _seed(value, what="seed") -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**64:
        raise ConfigError(f"{what} must be an unsigned 64-bit integer, got {value!r}")
    return value


_POOL_NAME = re.compile(r"^[A-Za-z0-9_.-]+$")


def _pool(name: str, spec: dict, model, base: Path) -> PoolSpec:
    if not _POOL_NAME.match(name):
        raise ConfigError(f"pool name {name!r} may only use letters, digits, '_', '.', '-'")
    if not isinstance(spec, dict):
        raise ConfigError(f"pool {name!r} must be an object")
    unknown = set(spec) - {"gmm", "trajectories", "samples", "shift", "direction", "label"}
    if unknown:
        raise ConfigError(f"pool {name!r}: unknown keys {sorted(unknown)}")
    has_gmm, has_traj = "gmm" in spec, "trajectories" in spec
    if has_gmm == has_traj:
        raise ConfigError(f"pool {name!r} needs exactly one of 'gmm' or 'trajectories'")
    label = spec.get("label", "unlabeled")
    if label not in LABELS:
        raise ConfigError(f"pool {name!r}: label must be one of {LABELS}")
    if has_traj:
        if set(spec) & {"samples", "shift", "direction"}:
            raise ConfigError(f"pool {name!r}: 'samples'/'shift'/'direction' only apply to gmm pools")
        path = Path(spec["trajectories"])
        return PoolSpec(name, trajectories=path if path.is_absolute() else base / path, label=label)

    if model is None:
        raise ConfigError(f"pool {name!r} is a gmm pool but the config has no 'model' denoiser")
    if spec["gmm"] == "model":
        gmm = model
    else:
        try:
            gmm = GaussianMixture.from_dict(spec["gmm"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"pool {name!r}: bad mixture: {exc}") from exc
    if gmm.dim != model.dim:
        raise ConfigError(f"pool {name!r}: mixture dimension {gmm.dim} != model dimension {model.dim}")
    if "shift" in spec:
        try:
            gmm = gmm.shifted(float(spec["shift"]), spec.get("direction"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"pool {name!r}: bad shift: {exc}") from exc
    samples = spec.get("samples")
    if isinstance(samples, bool) or not isinstance(samples, int) or samples < 1:
        raise ConfigError(f"pool {name!r}: 'samples' must be a positive integer")
    return PoolSpec(name, gmm=gmm, samples=samples, label=label)


def parse_config(data: dict, base_dir=".") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base = Path(base_dir)
    try:
        schedule = NoiseSchedule.from_dict(data.get("schedule", {}))
        model = GaussianMixture.from_dict(data["model"]) if "model" in data else None
        score = ScoreConfig.from_dict(data.get("score", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    pools_raw = data.get("pools", {})
    if not isinstance(pools_raw, dict):
        raise ConfigError("'pools' must be an object mapping names to pool specs")
    pools = {name: _pool(name, spec, model, base) for name, spec in pools_raw.items()}

    cs = data.get("coreset", {})
    method = cs.get("method", "facility_location")
    if method not in METHODS:
        raise ConfigError(f"coreset method must be one of {METHODS}")
    budget = cs.get("budget", DEFAULT_BUDGET)
    if budget == "full":
        budget = None
    if budget is not None and (isinstance(budget, bool) or not isinstance(budget, int) or budget < 1):
        raise ConfigError("coreset budget must be a positive integer or 'full'")

    seed = _seed(data.get("seed", 0))
    seeds = tuple(_seed(s, "seeds entry") for s in data.get("seeds", [0, 1, 2, 3, 4]))
    if not seeds:
        raise ConfigError("'seeds' must be nonempty")

    ev = data.get("eval", {})
    unknown = set(ev) - {"id_pool", "ood_pools", "cross_pairs", "budgets", "temperatures", "reference_fraction"}
    if unknown:
        raise ConfigError(f"eval: unknown keys {sorted(unknown)}")
    budgets = tuple(None if b == "full" else b for b in ev.get("budgets", ()))
    for b in budgets:
        if b is not None and (isinstance(b, bool) or not isinstance(b, int) or b < 1):
            raise ConfigError("eval budgets must be positive integers or 'full'")
    temps = tuple(float(t) for t in ev.get("temperatures", ()))
    if any(not t > 0 for t in temps):
        raise ConfigError("eval temperatures must be positive")
    frac = float(ev.get("reference_fraction", 0.5))
    if not 0 < frac < 1:
        raise ConfigError("reference_fraction must lie in (0, 1)")
    id_pool = ev.get("id_pool")
    ood_pools = tuple(ev.get("ood_pools", ()))
    for name in ([id_pool] if id_pool is not None else []) + list(ood_pools):
        if name not in pools:
            raise ConfigError(f"eval refers to unknown pool {name!r}")
    if id_pool in ood_pools:
        raise ConfigError("the ID pool cannot also be an OOD pool")
    evspec = EvalSpec(id_pool, ood_pools, bool(ev.get("cross_pairs", False)), budgets, temps, frac)

    out = data.get("output_dir")
    return ExperimentConfig(
        schedule=schedule,
        model=model,
        pools=pools,
        method=method,
        budget=budget,
        score=score,
        seed=seed,
        seeds=seeds,
        eval=evspec,
        write_trajectories=bool(data.get("write_trajectories", False)),
        output_dir=None if out is None else (base / out),
        raw=data,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(os.fspath(path))
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(data, path.parent)
