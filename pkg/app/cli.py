"""Batch front end: simulate, fit, metrics, summarize, experiment.

Exit codes: 0 ok, 2 validation or I/O error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import time
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.config import settings
from app.errors import ConfigError, DataValidationError, NumericError, PartitionDomainError
from app.experiment import ExperimentConfig, run_experiment
from app.formatter import (
    ExperimentWriter,
    FitWriter,
    RunManifest,
    SimulationWriter,
    acceptance_flags,
    content_hash,
    read_fit_dir,
    read_json,
    write_json_atomic,
)
from app.formatter.run_files import TRUE_MEANS_FILE, curves_from_frame
from app.metrics import evaluate
from app.models import ModelVariant
from app.parsers import load_dataset
from app.sampler import ChainConfig, PRIOR_PRESETS, cluster_count_distribution, effective_sample_size, point_partition, run_chains
from app.sampler.chain_config import load_json_model
from app.simdata import SimConfig, generate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

METRICS_FILE = "metrics.json"
SUMMARY_FILE = "summary.json"


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="sgdp",
        description="Spatial random-partition GP mixtures for functional data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic clustered dataset")
    sim.add_argument("--config", type=Path, help="SimConfig JSON file")
    sim.add_argument("--out", type=Path, required=True)
    sim.add_argument("--seed", type=_u64)

    fit = sub.add_parser("fit", help="run the posterior sampler on a data directory")
    fit.add_argument("--data", type=Path, required=True)
    fit.add_argument("--config", type=Path, help="ChainConfig JSON file")
    fit.add_argument("--out", type=Path, required=True)
    fit.add_argument("--seed", type=_u64)
    fit.add_argument("--model", choices=[m.value for m in ModelVariant])
    fit.add_argument("--preset", choices=sorted(PRIOR_PRESETS))
    fit.add_argument("--chains", type=_positive, default=1)
    fit.add_argument("--threads", type=_positive, default=settings.default_threads)

    met = sub.add_parser("metrics", help="score a fit against a simulated truth")
    met.add_argument("--fit", type=Path, required=True, help="fit output directory")
    met.add_argument("--truth", type=Path, required=True, help="truth.json of the simulated data")
    met.add_argument("--period", type=int, default=0)

    summ = sub.add_parser("summarize", help="recompute pooled summary tables of a fit")
    summ.add_argument("--fit", type=Path, required=True)

    exp = sub.add_parser("experiment", help="fit every model and preset on replicate simulated datasets")
    exp.add_argument("--config", type=Path, help="ExperimentConfig JSON file")
    exp.add_argument("--out", type=Path, required=True)
    exp.add_argument("--seed", type=_u64)
    exp.add_argument("--threads", type=_positive, default=settings.default_threads)

    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(config_path: Optional[Path], out_dir: Path, seed: Optional[int] = None) -> Path:
    config = load_json_model(SimConfig, config_path) if config_path else SimConfig(seed=settings.default_seed)
    if seed is not None:
        config = SimConfig.model_validate({**config.model_dump(), "seed": seed})
    return SimulationWriter(generate(config)).write(out_dir)


def _fit_config(args: argparse.Namespace) -> ChainConfig:
    payload = read_json(args.config) if args.config else {"seed": settings.default_seed}
    if args.seed is not None:
        payload["seed"] = args.seed
    if args.model is not None:
        payload["model"] = args.model
    if args.preset is not None:
        payload["prior_preset"] = args.preset
    try:
        return ChainConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"{args.config or 'chain config'}: {e}") from e


def cmd_fit(args: argparse.Namespace) -> Path:
    config = _fit_config(args)
    data = load_dataset(args.data)
    started = time.perf_counter()
    summaries = run_chains(data, config, chains=args.chains, threads=args.threads)
    for summary in summaries:
        FitWriter(summary, data).write(args.out)

    inputs = [p for p in Path(args.data).glob("*.csv")]
    if args.config:
        inputs.append(Path(args.config))
    manifest = RunManifest(
        command="fit",
        config=config.model_dump(mode="json"),
        seed=config.seed,
        model=config.model.value,
        input_hash=content_hash(inputs),
        chains=args.chains,
        wall_clock_seconds=time.perf_counter() - started,
        ess={f"chain_{s.chain:02d}": s.ess() for s in summaries},
        acceptance={f"chain_{s.chain:02d}": s.acceptance for s in summaries},
        acceptance_flags={f"chain_{s.chain:02d}": acceptance_flags(s.acceptance) for s in summaries},
        approximate_conditionals=config.conditional_mode.is_approximate,
        periods=[data.period_name(ell) for ell in range(data.M)],
    )
    manifest.write(args.out)
    return Path(args.out)


def cmd_metrics(fit_dir: Path, truth_path: Path, period: int = 0) -> dict[str, float]:
    truth = read_json(truth_path)
    if "labels" not in truth:
        raise DataValidationError(f"{truth_path}: no 'labels' entry")
    true_means_path = Path(truth_path).parent / TRUE_MEANS_FILE
    try:
        true_means = curves_from_frame(pd.read_csv(true_means_path), str(true_means_path))
    except FileNotFoundError as e:
        raise DataValidationError(f"{true_means_path}: file not found") from e

    chains = read_fit_dir(fit_dir)
    if not 0 <= period < len(chains[0].partitions):
        raise DataValidationError(f"{fit_dir}: no period {period}")
    draws = np.concatenate([c.partitions[period] for c in chains])
    if draws.shape[0] == 0:
        raise DataValidationError(f"{fit_dir}: fit has no recorded draws")
    estimate = point_partition(draws)
    area_means = np.mean([c.area_means for c in chains], axis=0)
    result = evaluate(truth["labels"], estimate, area_means, true_means)
    write_json_atomic(Path(fit_dir) / METRICS_FILE, result)
    return result


def _pooled_percentiles(values: np.ndarray) -> dict[str, float]:
    q = (2.5, 50.0, 97.5)
    return {f"{p:g}%": float(v) for p, v in zip(q, np.percentile(values, q))}


def cmd_summarize(fit_dir: Path) -> dict:
    chains = read_fit_dir(fit_dir)
    names = list(chains[0].traces)
    pooled = {name: np.concatenate([c.traces[name] for c in chains]) for name in names}
    periods = []
    for ell in range(len(chains[0].partitions)):
        draws = np.concatenate([c.partitions[ell] for c in chains])
        point = point_partition(draws) if draws.shape[0] else None
        periods.append(
            {
                "period": ell,
                "name": chains[0].period_names[ell],
                "k_distribution": {str(k): v for k, v in cluster_count_distribution(draws).items()},
                "point_partition": point.assignments.tolist() if point is not None else None,
            }
        )
    summary = {
        "chains": len(chains),
        "draws": int(sum(c.partitions[0].shape[0] for c in chains)) if chains[0].partitions else 0,
        "posterior_means": {n: float(v.mean()) for n, v in pooled.items() if v.size},
        "percentiles": {n: _pooled_percentiles(v) for n, v in pooled.items() if v.size},
        "periods": periods,
        "ess": {
            f"chain_{c.chain:02d}": {n: effective_sample_size(v) for n, v in c.traces.items() if v.size >= 10}
            for c in chains
        },
    }
    write_json_atomic(Path(fit_dir) / SUMMARY_FILE, summary)
    return summary


def cmd_experiment(
    config_path: Optional[Path],
    out_dir: Path,
    seed: Optional[int] = None,
    threads: int = 1,
) -> Path:
    if config_path:
        config = load_json_model(ExperimentConfig, config_path)
    else:
        config = ExperimentConfig(seed=settings.default_seed)
    results = run_experiment(config, threads=threads, seed=seed)
    return ExperimentWriter(results).write(out_dir)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def main(argv: Optional[list[str]] = None) -> int:
    args = _parse_args(argv)
    logging.basicConfig(level=settings.log_level, format=settings.log_format)
    try:
        if args.command == "simulate":
            out = cmd_simulate(args.config, args.out, args.seed)
            print(f"dataset written to {out}")
        elif args.command == "fit":
            out = cmd_fit(args)
            print(f"fit written to {out}")
        elif args.command == "metrics":
            print(json.dumps(cmd_metrics(args.fit, args.truth, args.period), indent=2))
        elif args.command == "summarize":
            print(json.dumps(cmd_summarize(args.fit), indent=2))
        elif args.command == "experiment":
            out = cmd_experiment(args.config, args.out, args.seed, args.threads)
            print(f"experiment results written to {out}")
    except NumericError as e:
        logger.error("numeric failure: %s", e)
        return EXIT_NUMERIC
    except (ConfigError, DataValidationError, PartitionDomainError, ValidationError) as e:
        logger.error("invalid input: %s", e)
        return EXIT_VALIDATION
    except OSError as e:
        logger.error("I/O error on %s: %s", e.filename or "?", e)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
