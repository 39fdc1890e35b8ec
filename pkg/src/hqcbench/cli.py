"""Command-line driver.

Subcommands:
    run              train and evaluate the configured dataset x model grid
    summarize        render tables and the accuracy figure from a results dir
    validate-config  check a config file and report every problem

Exit codes: 0 success, 1 job failure (partial results preserved), 2 config
error. The output directory resolves as --out flag > HQCBENCH_OUT env var >
config out_dir.
"""
from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, RunConfig
from .runner import run_benchmark
from .summary import emit_summary

EXIT_OK = 0
EXIT_JOB_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hqcbench",
                                     description="hybrid quantum-classical fusion benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the benchmark grid")
    run_p.add_argument("--config", required=True, help="path to the JSON run config")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out", default=None, help="override the output directory")
    run_p.add_argument("--models", default=None,
                       help="comma-separated subset of the config's model kinds")
    run_p.add_argument("--datasets", default=None,
                       help="comma-separated subset of the config's dataset names")
    run_p.add_argument("--workers", type=int, default=None, help="parallel job count")

    sum_p = sub.add_parser("summarize", help="emit summary tables and the accuracy figure")
    sum_p.add_argument("--results", required=True, help="directory of aggregated JSON results")
    sum_p.add_argument("--out", default=None, help="where to write the summary (default: results dir)")

    val_p = sub.add_parser("validate-config", help="validate a run config file")
    val_p.add_argument("--config", required=True)
    return parser


def _resolve_out(flag_value: str | None, config_value: str) -> str:
    if flag_value:
        return flag_value
    return os.environ.get("HQCBENCH_OUT") or config_value


def _load_and_filter(args) -> RunConfig:
    config = RunConfig.load(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.workers is not None:
        config.workers = args.workers
    if args.datasets:
        wanted = [name.strip() for name in args.datasets.split(",") if name.strip()]
        config.datasets = [d for d in config.datasets if d.name in wanted]
        missing = set(wanted) - {d.name for d in config.datasets}
        if missing:
            raise ConfigError(f"--datasets names not in config: {sorted(missing)}")
    if args.models:
        wanted = [name.strip() for name in args.models.split(",") if name.strip()]
        config.models = [m for m in config.models if m.kind in wanted]
        missing = set(wanted) - {m.kind for m in config.models}
        if missing:
            raise ConfigError(f"--models kinds not in config: {sorted(missing)}")
    return config


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "validate-config":
        try:
            config = RunConfig.load(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG_ERROR
        problems = config.validate()
        for problem in problems:
            print(f"config error: {problem}", file=sys.stderr)
        if problems:
            return EXIT_CONFIG_ERROR
        print(f"config ok (hash {config.config_hash()})")
        return EXIT_OK

    if args.command == "run":
        try:
            config = _load_and_filter(args)
            problems = config.validate()
            if problems:
                for problem in problems:
                    print(f"config error: {problem}", file=sys.stderr)
                return EXIT_CONFIG_ERROR
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG_ERROR
        out_dir = _resolve_out(args.out, config.out_dir)
        result = run_benchmark(config, out_dir=out_dir)
        for report in result.reports:
            print(f"{report.dataset} / {report.model}: "
                  f"accuracy {report.mean['accuracy']:.3f} +- {report.std['accuracy']:.3f}, "
                  f"f1 {report.mean['f1']:.3f}")
        if result.failures:
            for failure in result.failures:
                print(f"FAILED {failure['dataset']} / {failure['model']} fold {failure['fold']}",
                      file=sys.stderr)
            return EXIT_JOB_FAILURE
        return EXIT_OK

    if args.command == "summarize":
        out_dir = args.out or os.environ.get("HQCBENCH_OUT") or args.results
        try:
            paths = emit_summary(args.results, out_dir)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_JOB_FAILURE
        for kind, path in paths.items():
            print(f"{kind}: {path}")
        return EXIT_OK

    return EXIT_CONFIG_ERROR  # pragma: no cover


if __name__ == "__main__":
    raise SystemExit(main())
