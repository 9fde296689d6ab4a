"""Command-line entry point wiring configs, data, fitting, search, and simulation.

Each run takes a single JSON config document. All outputs (model JSON, report
JSON and text, summary/frontier CSV, manifest JSON) are deterministic given
the config and seed; thread count never changes the bytes written.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import COMPLEMENT_REFERENCE, DataSchema, Dataset, load_csv
from .metrics import fairness_report
from .model import FittedModel, PenaltyWeights, SolverConfig
from .reduction import fit_via_reduction, reduce_problem
from .scoring import SYNTHESES, ScoreConfig
from .search import DEFAULT_ALPHAS, SearchConfig, run_search
from .simulate import (
    SETTINGS,
    SimSetting,
    frontier_rows,
    run_replications,
    summarize,
)


class ConfigError(ValueError):
    """The run configuration is missing a key or holds an invalid value."""


_REQUIRED = object()


def _load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        config = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from None
    if not isinstance(config, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return config


def _get(config: dict, key_path: str, default=_REQUIRED):
    node = config
    walked = []
    for key in key_path.split("."):
        walked.append(key)
        if not isinstance(node, dict) or key not in node:
            if default is _REQUIRED:
                raise ConfigError(f"missing config key '{'.'.join(walked)}'")
            return default
        node = node[key]
    return node


def _schema_from_config(config: dict) -> DataSchema:
    reference = _get(config, "data.reference", COMPLEMENT_REFERENCE)
    try:
        return DataSchema(
            outcome=_get(config, "data.outcome"),
            features=tuple(_get(config, "data.features")),
            groups=tuple(_get(config, "data.groups")),
            reference=reference,
        )
    except ValueError as err:
        raise ConfigError(f"config key 'data': {err}") from None


def _load_dataset(config: dict, drop_columns: tuple[str, ...]) -> Dataset:
    dataset = load_csv(_get(config, "data.path"), _schema_from_config(config))
    if drop_columns:
        dataset = dataset.without_features(drop_columns)
    return dataset


def _solver_from_config(config: dict) -> SolverConfig:
    block = _get(config, "solver", {})
    try:
        return SolverConfig(
            max_iterations=int(block.get("max_iterations", 10_000)),
            gradient_tolerance=float(block.get("gradient_tolerance", 1e-8)),
            step_rule=block.get("step_rule", "newton"),
            ridge=float(block.get("ridge", 0.0)),
        )
    except ValueError as err:
        raise ConfigError(f"config key 'solver': {err}") from None


def _search_from_config(config: dict, seed_override: int | None) -> SearchConfig:
    block = _get(config, "search", {})
    threshold = float(_get(config, "threshold", 0.5))
    alphas = block.get("alphas", list(DEFAULT_ALPHAS))
    syntheses = block.get("syntheses", list(SYNTHESES))
    seed = int(block.get("seed", 0)) if seed_override is None else seed_override
    try:
        variants = tuple(
            ScoreConfig(alpha=float(a), synthesis=s, threshold=threshold)
            for s in syntheses
            for a in alphas
        )
        return SearchConfig(
            num_candidates=int(block.get("num_candidates", 40)),
            log10_lower=float(block.get("log10_lower", -3.0)),
            log10_upper=float(block.get("log10_upper", 1.0)),
            folds=int(block.get("folds", 3)),
            seed=seed,
            score_variants=variants,
            stratify=bool(block.get("stratify", True)),
        )
    except ValueError as err:
        raise ConfigError(f"config key 'search': {err}") from None


def _sim_from_config(config: dict, seed_override: int | None) -> tuple[SimSetting, int]:
    block = _get(config, "sim", {})
    if "c" in block:
        c = tuple(float(v) for v in block["c"])
    elif "setting" in block:
        number = int(block["setting"])
        if number not in SETTINGS:
            raise ConfigError(f"config key 'sim.setting': unknown setting {number}")
        c = SETTINGS[number]
    else:
        raise ConfigError("missing config key 'sim.setting' (or explicit 'sim.c')")
    seed = int(block.get("seed", 0)) if seed_override is None else seed_override
    reps = int(block.get("reps", 1))
    try:
        return SimSetting(c=c, n=int(block.get("n", 100_000)), seed=seed), reps
    except ValueError as err:
        raise ConfigError(f"config key 'sim': {err}") from None


def _out_dir(config: dict) -> Path:
    out = Path(_get(config, "output_dir"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solver_dict(solver: SolverConfig) -> dict:
    return {
        "max_iterations": solver.max_iterations,
        "gradient_tolerance": solver.gradient_tolerance,
        "step_rule": solver.step_rule,
        "ridge": solver.ridge,
    }


def _search_dict(search_cfg: SearchConfig) -> dict:
    alphas = sorted({v.alpha for v in search_cfg.score_variants})
    syntheses = list(dict.fromkeys(v.synthesis for v in search_cfg.score_variants))
    return {
        "num_candidates": search_cfg.num_candidates,
        "log10_lower": search_cfg.log10_lower,
        "log10_upper": search_cfg.log10_upper,
        "folds": search_cfg.folds,
        "seed": search_cfg.seed,
        "alphas": alphas,
        "syntheses": syntheses,
        "stratify": search_cfg.stratify,
    }


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _dump_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def _write_manifest(out: Path, command: str, config: dict, seed: int | None) -> None:
    canonical = json.dumps(config, sort_keys=True)
    _dump_json(
        out / "manifest.json",
        {
            "command": command,
            "version": __version__,
            "seed": seed,
            "config": config,
            "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        },
    )


def _announce(command: str, config: dict) -> None:
    print(f"fairpen {__version__} :: {command}")
    print(json.dumps(config, indent=2, sort_keys=True))


def cmd_fit(args) -> int:
    config = _load_config(args.config)
    raw_lambdas = _get(config, "lambdas")
    try:
        lambdas = PenaltyWeights(np.asarray(raw_lambdas, dtype=np.float64))
    except ValueError as err:
        raise ConfigError(f"config key 'lambdas': {err}") from None
    solver = _solver_from_config(config)
    threshold = float(_get(config, "threshold", 0.5))
    effective = {
        **config,
        "lambdas": [float(v) for v in lambdas.lambdas],
        "threshold": threshold,
        "solver": _solver_dict(solver),
        "drop_columns": list(args.drop_column),
    }
    _announce("fit", effective)
    dataset = _load_dataset(config, tuple(args.drop_column))
    if len(lambdas) != dataset.num_groups:
        raise ConfigError(
            f"config key 'lambdas': expected {dataset.num_groups} weights, got {len(lambdas)}"
        )
    out = _out_dir(config)

    model = fit_via_reduction(dataset, lambdas, solver, threshold=threshold)
    report = fairness_report(dataset, model.predict_proba(dataset.features), threshold)

    model.save(out / "model.json")
    _dump_json(out / "report.json", report.to_dict())
    (out / "report.txt").write_text(report.to_text() + "\n")
    if args.audit_reduction:
        reduce_problem(dataset, lambdas).audit_frame().to_csv(out / "reduced_problem.csv", index=False)
    _write_manifest(out, "fit", effective, None)
    print(report.to_text())
    return 0


def cmd_search(args) -> int:
    config = _load_config(args.config)
    search_cfg = _search_from_config(config, args.seed)
    solver = _solver_from_config(config)
    effective = {
        **config,
        "threshold": float(_get(config, "threshold", 0.5)),
        "search": _search_dict(search_cfg),
        "solver": _solver_dict(solver),
        "drop_columns": list(args.drop_column),
    }
    _announce("search", effective)
    dataset = _load_dataset(config, tuple(args.drop_column))
    out = _out_dir(config)

    result = run_search(dataset, search_cfg, solver, threads=args.threads)

    _dump_json(out / "search_result.json", result.to_dict())
    result.baseline_model.save(out / "baseline_model.json")
    baseline_report = fairness_report(
        dataset,
        result.baseline_model.predict_proba(dataset.features),
        result.baseline_model.threshold,
    )
    _dump_json(out / "baseline_report.json", baseline_report.to_dict())
    (out / "baseline_report.txt").write_text(baseline_report.to_text() + "\n")
    for variant in result.variants:
        label = variant.config.label
        variant.model.save(out / f"model_{label}.json")
        report = fairness_report(
            dataset, variant.model.predict_proba(dataset.features), variant.config.threshold
        )
        _dump_json(out / f"report_{label}.json", report.to_dict())
        (out / f"report_{label}.txt").write_text(report.to_text() + "\n")
    _write_manifest(out, "search", effective, search_cfg.seed)
    print(f"wrote {len(result.variants)} variant model(s) to {out}")
    return 0


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    sim, reps = _sim_from_config(config, args.seed)
    search_cfg = _search_from_config(config, None)
    solver = _solver_from_config(config)
    effective = {
        **config,
        "sim": {"c": list(sim.c), "n": sim.n, "reps": reps, "seed": sim.seed},
        "threshold": float(_get(config, "threshold", 0.5)),
        "search": _search_dict(search_cfg),
        "solver": _solver_dict(solver),
        "drop_columns": list(args.drop_column),
    }
    _announce("simulate", effective)
    out = _out_dir(config)

    replications = run_replications(
        sim,
        reps,
        search_cfg,
        solver,
        threads=args.threads,
        drop_features=tuple(args.drop_column),
    )

    with (out / "replications.jsonl").open("w") as handle:
        for rep in replications:
            handle.write(json.dumps(rep.to_dict(), sort_keys=True) + "\n")
    _dump_csv(
        out / "summary.csv",
        summarize(replications),
        ["variant", "metric", "median", "p25", "p75"],
    )
    _dump_csv(
        out / "frontier.csv",
        frontier_rows(replications),
        ["variant", "replication", "accuracy", "unfairness"],
    )
    _write_manifest(out, "simulate", effective, sim.seed)
    print(f"wrote {reps} replication(s) to {out}")
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    _announce("evaluate", config)
    model_path = Path(args.model or _get(config, "model"))
    if not model_path.exists():
        raise ConfigError(f"config key 'model': no such file: {model_path}")
    model = FittedModel.load(model_path)
    dataset = _load_dataset(config, tuple(args.drop_column))
    if model.feature_names is not None and tuple(model.feature_names) != dataset.feature_names:
        raise ConfigError(
            "model feature names do not match the data schema: "
            f"model has {list(model.feature_names)}, data has {list(dataset.feature_names)}"
        )
    if model.feature_names is None and model.coefficients.size != dataset.num_features:
        raise ConfigError(
            f"model expects {model.coefficients.size} features, data has {dataset.num_features}"
        )
    threshold = float(_get(config, "threshold", model.threshold))
    out = _out_dir(config)
    report = fairness_report(dataset, model.predict_proba(dataset.features), threshold)
    _dump_json(out / "report.json", report.to_dict())
    (out / "report.txt").write_text(report.to_text() + "\n")
    _write_manifest(out, "evaluate", config, None)
    print(report.to_text())
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairpen",
        description="Penalized fair classification for multiple overlapping groups.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="max concurrent fits")
        p.add_argument(
            "--drop-column",
            action="append",
            default=[],
            metavar="NAME",
            help="drop a feature column before fitting (repeatable)",
        )

    fit = sub.add_parser("fit", help="fit one penalized model with explicit penalty weights")
    common(fit)
    fit.add_argument(
        "--audit-reduction",
        action="store_true",
        help="also dump the cost-sensitive reduction (weights, labels, costs) as CSV",
    )
    fit.set_defaults(handler=cmd_fit)

    search = sub.add_parser("search", help="random penalty-weight search with cross-validation")
    common(search)
    search.set_defaults(handler=cmd_search)

    simulate = sub.add_parser("simulate", help="replicated synthetic-data experiments")
    common(simulate)
    simulate.set_defaults(handler=cmd_simulate)

    evaluate = sub.add_parser("evaluate", help="evaluate a saved model on a dataset")
    common(evaluate)
    evaluate.add_argument("--model", default=None, help="model JSON (overrides config key 'model')")
    evaluate.set_defaults(handler=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except Exception as err:  # surfaced with context; nonzero exit per contract
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
