"""Command-line entry point: ``trajood extract|select|score|eval|validate``.

Every command computes all of its outputs in memory first and writes them
only once everything succeeded, so a bad config never leaves partial files.
Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import zlib
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .coreset import METHODS, ReferenceSet, select
from .energy import extract_features
from .evaluation import (
    cross_pair_matrix,
    matrix_to_csv,
    run_task,
    sweep_reference_budget,
    sweep_temperature,
    sweep_to_csv,
)
from .gmm import GaussianMixture, draw_oracle_trajectories
from .schedule import NoiseSchedule
from .scoring import SCORING_METHODS, ScoreConfig, calibrate, fit_calibration, reference_self_scores, score_points
from .tables import features_to_csv, read_features_csv, scores_to_csv
from .trajectory_io import FORMAT_VERSION, TrajectoryBatch, TrajectoryFormatError, encode_batch, read_batch
from . import validate as V

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


def pool_rng(seed: int, name: str) -> np.random.Generator:
    """Per-pool stream keyed by (seed, pool name); adding a pool never perturbs another."""
    return np.random.default_rng([seed, zlib.crc32(name.encode("utf-8"))])


def pool_features(cfg: ExperimentConfig, seed: int) -> dict:
    """``name -> (features, labels, trajectories or None)`` for every configured pool."""
    cfg.check_files()
    out = {}
    for name, pool in cfg.pools.items():
        if pool.gmm is not None:
            _, _, traj = draw_oracle_trajectories(cfg.model, pool.gmm, cfg.schedule, pool.samples, pool_rng(seed, name))
            labels = [pool.label] * pool.samples
        else:
            batch = read_batch(pool.trajectories)
            traj = batch.eps
            labels = list(batch.labels) if batch.labels is not None else [pool.label] * batch.count
        out[name] = (extract_features(traj), labels, traj if pool.gmm is not None else None)
    return out


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _require_config(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError(f"'{args.command}' needs --config")
    return load_config(args.config)


def _seed_arg(args, default: int) -> int:
    return default if args.seed is None else args.seed


def cmd_extract(args) -> dict:
    cfg = _require_config(args)
    if not cfg.pools:
        raise ConfigError("config defines no pools")
    seed = _seed_arg(args, cfg.seed)
    files = {}
    for name, (feats, labels, traj) in pool_features(cfg, seed).items():
        files[f"features_{name}.csv"] = features_to_csv(feats, labels=labels)
        if cfg.write_trajectories and traj is not None:
            files[f"trajectories_{name}.uftj"] = encode_batch(TrajectoryBatch(traj, tuple(labels)))
    return files


def _load_features(path):
    with open(path) as fh:
        return read_features_csv(fh.read())


def cmd_select(args) -> dict:
    if args.features is None:
        raise ConfigError("'select' needs --features")
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    method = args.method or cfg.method
    budget = cfg.budget if args.budget is None else (None if args.budget == "full" else int(args.budget))
    _, feats, _ = _load_features(args.features)
    if len(feats) == 0:
        raise ConfigError("feature file has no rows")
    m = len(feats) if budget is None else budget
    refs = select(feats, method, m, _seed_arg(args, cfg.seed))
    return {"references.json": refs.to_json() + "\n"}


def _score_config(args, cfg: ExperimentConfig) -> ScoreConfig:
    base = cfg.score
    return ScoreConfig(
        temperature=base.temperature if args.temperature is None else args.temperature,
        k=base.k if args.k is None else args.k,
        method=base.method if args.scoring is None else args.scoring,
        leave_one_out=base.leave_one_out or args.leave_one_out,
    )


def cmd_score(args) -> dict:
    if args.features is None or args.refs is None:
        raise ConfigError("'score' needs --features and --refs")
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    score_cfg = _score_config(args, cfg)
    ids, feats, labels = _load_features(args.features)
    with open(args.refs) as fh:
        try:
            refs = ReferenceSet.from_json(fh.read())
        except (KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad reference file: {exc}") from exc
    stats = fit_calibration(reference_self_scores(refs, score_cfg))
    raw = np.asarray(score_points(feats, refs, score_cfg)).reshape(-1) if len(feats) else np.zeros(0)
    cal = np.asarray(calibrate(raw, stats)).reshape(-1)
    return {
        "scores.csv": scores_to_csv(raw, cal, ids, labels),
        "calibration.json": _json({**stats.to_dict(), "score": score_cfg.to_dict()}),
    }


def cmd_eval(args) -> dict:
    cfg = _require_config(args)
    ev = cfg.eval
    if ev.id_pool is None and not ev.cross_pairs:
        raise ConfigError("eval needs 'eval.id_pool' with 'ood_pools', or 'cross_pairs': true")
    if ev.id_pool is not None and not ev.ood_pools:
        raise ConfigError("eval.id_pool given without eval.ood_pools")
    seeds = cfg.seeds if args.seed is None else (args.seed,)
    feats = {name: f for name, (f, _, _) in pool_features(cfg, cfg.seed if args.seed is None else args.seed).items()}

    files, tasks = {}, []
    for ood in ev.ood_pools:
        runs = [
            run_task(feats[ev.id_pool], feats[ood], cfg.method, cfg.budget, cfg.score, s, ev.reference_fraction)
            for s in seeds
        ]
        aurocs = [r.auroc for r in runs]
        tasks.append({
            "id_pool": ev.id_pool,
            "ood_pool": ood,
            "mean_auroc": float(np.mean(aurocs)),
            "std_auroc": float(np.std(aurocs)),
            "runs": [r.to_dict() for r in runs],
        })
        if ev.budgets:
            rows = sweep_reference_budget(feats[ev.id_pool], feats[ood], ev.budgets, seeds, cfg.method, cfg.score)
            files[f"sweep_budget_{ood}.csv"] = sweep_to_csv(rows, "budget")
        if ev.temperatures:
            rows = sweep_temperature(feats[ev.id_pool], feats[ood], ev.temperatures, seeds, cfg.method, cfg.budget, cfg.score)
            files[f"sweep_temperature_{ood}.csv"] = sweep_to_csv(rows, "temperature")

    result = {"version": __version__, "seeds": list(seeds), "tasks": tasks}
    if ev.cross_pairs:
        if len(feats) < 2:
            raise ConfigError("cross_pairs needs at least two pools")
        matrix = cross_pair_matrix(feats, cfg.method, cfg.budget, cfg.score, seeds)
        names = list(feats)
        files["cross_pair.csv"] = matrix_to_csv(matrix, names)
        result["cross_pairs"] = [{"id_pool": a, "ood_pool": b, "mean_auroc": v} for (a, b), v in matrix.items()]
    files["results.json"] = _json(result)
    return files


_VALIDATE_DEFAULTS = {
    "cramer_rao": {"theta": 1.0, "n": 100, "d": 16, "trials": 10_000},
    "moments": {"theta_id": 1.0, "theta_ood": 1.5, "n": 50, "d": 16, "trials": 1000, "seeds": [0, 1, 2, 3, 4]},
    "separation": {"deltas": [1.0, 2.0, 4.0, 8.0], "samples": 500, "dim": 8},
}


def _validate_params(args) -> dict:
    params = dict(_VALIDATE_DEFAULTS[args.experiment])
    if args.config:
        with open(args.config) as fh:
            try:
                user = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON: {exc}") from exc
        allowed = set(params) | {"seed", "schedule", "gmm"} if args.experiment == "separation" else set(params) | {"seed"}
        unknown = set(user) - allowed
        if unknown:
            raise ConfigError(f"unknown {args.experiment} parameters: {sorted(unknown)}")
        params.update(user)
    if args.seed is not None:
        params["seed"] = args.seed
        if "seeds" in params:
            params["seeds"] = [args.seed]
    params.setdefault("seed", 0)
    return params


def cmd_validate(args) -> tuple[dict, str]:
    p = _validate_params(args)
    exp = args.experiment
    if exp == "cramer_rao":
        rep = V.cramer_rao_experiment(float(p["theta"]), int(p["n"]), int(p["d"]), int(p["trials"]), int(p["seed"]))
        report = rep.to_dict()
        table = [("theta", rep.theta), ("n", rep.n), ("d", rep.d), ("trials", rep.trials),
                 ("empirical variance", rep.empirical_variance), ("bound 2θ²/(nd)", rep.cr_bound),
                 ("ratio", rep.ratio)]
    elif exp == "moments":
        per_seed = [
            V.moment_order_experiment(float(p["theta_id"]), float(p["theta_ood"]), int(p["n"]), int(p["d"]), int(p["trials"]), int(s))
            for s in p["seeds"]
        ]
        means = {k: float(np.mean([r[k] for r in per_seed])) for k in (1, 2, 3)}
        report = {**{k: v for k, v in p.items() if k != "seed"},
                  "auroc_by_order": {str(k): v for k, v in means.items()},
                  "per_seed": [{str(k): v for k, v in r.items()} for r in per_seed],
                  "second_order_best": means[2] > max(means[1], means[3])}
        table = [(f"order {k} AUROC", v) for k, v in means.items()]
    else:
        schedule = NoiseSchedule.from_dict(p.get("schedule", {}))
        if "gmm" in p:
            gmm = GaussianMixture.from_dict(p["gmm"])
        else:
            gmm = GaussianMixture.isotropic(np.zeros((1, int(p["dim"]))))
        rep = V.separation_experiment(gmm, [float(x) for x in p["deltas"]], schedule, int(p["samples"]), int(p["seed"]))
        report = rep.to_dict()
        table = [(f"Δ={r.delta:g} f1 gap / f2 gap", f"{r.f1_gap:.6g} / {r.f2_gap:.6g}") for r in rep.rows]
        table += [("f1 gap monotone", rep.f1_gap_monotone)]
    width = max(len(k) for k, _ in table)
    summary = "\n".join(f"{k:<{width}}  {v}" for k, v in table) + "\n"
    return {f"validate_{exp}.json": _json(report)}, summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajood", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version", version=f"trajood {__version__} (UFTJ trajectory format v{FORMAT_VERSION})"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("extract", parents=[common], help="oracle or ingested trajectories -> feature CSVs")

    p = sub.add_parser("select", parents=[common], help="feature CSV -> reference set JSON")
    p.add_argument("--features", type=Path)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--budget", help="integer or 'full'")

    p = sub.add_parser("score", parents=[common], help="features + references -> score CSV")
    p.add_argument("--features", type=Path)
    p.add_argument("--refs", type=Path)
    p.add_argument("--temperature", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--scoring", choices=SCORING_METHODS)
    p.add_argument("--leave-one-out", action="store_true")

    sub.add_parser("eval", parents=[common], help="end-to-end AUROC runs, sweeps, cross-pair matrix")

    p = sub.add_parser("validate", parents=[common], help="Monte-Carlo theory checks")
    p.add_argument("experiment", choices=tuple(_VALIDATE_DEFAULTS))
    return parser


_COMMANDS = {"extract": cmd_extract, "select": cmd_select, "score": cmd_score, "eval": cmd_eval, "validate": cmd_validate}


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    if args.config is not None and args.command in ("extract", "eval"):
        cfg = load_config(args.config)
        if cfg.output_dir is not None:
            return cfg.output_dir
    return Path("out")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INVALID
    try:
        result = _COMMANDS[args.command](args)
        files, summary = result if isinstance(result, tuple) else (result, "")
        out = _out_dir(args)
        out.mkdir(parents=True, exist_ok=True)
        for name, content in files.items():
            mode = "wb" if isinstance(content, bytes) else "w"
            with open(out / name, mode) as fh:
                fh.write(content)
    except TrajectoryFormatError as exc:
        print(f"error: unreadable trajectory file: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
