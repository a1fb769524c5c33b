"""Command line entry point: ``python -m psl_eps <command> [options]``.

Commands: ``run`` (one training run), ``matrix`` (problems x scalarizations x
samplers x seeds), ``sweep`` (EPS sensitivity), ``front`` (reference front
CSV) and ``plot`` (SVG/CSV scatter for finished runs).

Any option may also come from ``--config FILE`` holding flat ``key=value``
lines (keys are option names without the leading dashes); command line
options win.  Exit status: 0 success, 2 configuration error, 3 a run hit a
numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .eps import EpsConfig
from .harness import (
    SAMPLERS,
    ConfigError,
    RunConfig,
    emit_plots,
    run_matrix,
    run_single,
    run_sweep,
)
from .model import OptimizerConfig
from .problems import PROBLEMS, get_problem
from .scalarize import Scalarization

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# option name -> (type, default)
TRAINING_OPTIONS = {
    "problem": (str, "zdt3"),
    "scalarization": (str, "mtch"),
    "sampler": (str, "eps"),
    "seed": (int, 0),
    "iters": (int, 1000),
    "batch": (int, 8),
    "lr": (float, 1e-3),
    "period": (int, 100),
    "sp": (float, 0.1),
    "cp": (float, 0.9),
    "mp": (float, 0.9),
    "eta-c": (float, 15.0),
    "eta-m": (float, 20.0),
    "mu": (float, 1.0),
    "epsilon": (float, 0.1),
    "stride": (int, 20),
    "out": (str, "runs"),
}


def read_config_file(path) -> dict:
    values = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("_", "-")] = value
    return values


def _parse_seeds(text: str) -> list[int]:
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError("no seeds given")
    return seeds


def _split(text) -> list[str]:
    return [s.strip() for s in str(text).split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psl_eps", description="Pareto set learning with evolutionary preference sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    def training(p):
        p.add_argument("--config", help="file of key=value lines; flags override it")
        for name, (typ, _) in TRAINING_OPTIONS.items():
            p.add_argument(f"--{name}", type=typ, default=None)
        p.add_argument("--log-preferences", action="store_true", default=None)
        p.add_argument("--workers", type=int, default=None)

    training(sub.add_parser("run", help="train one model"))
    m = sub.add_parser("matrix", help="problems x scalarizations x samplers x seeds")
    training(m)
    m.add_argument("--problems", default=None)
    m.add_argument("--scalarizations", default=None)
    m.add_argument("--samplers", default=None)
    m.add_argument("--seeds", default=None)
    s = sub.add_parser("sweep", help="EPS sensitivity to sp and (cp, mp)")
    training(s)
    s.add_argument("--seeds", default=None)
    f = sub.add_parser("front", help="write a reference front as CSV")
    f.add_argument("--problem", required=True)
    f.add_argument("--points", type=int, default=1000)
    f.add_argument("--out", required=True)
    pl = sub.add_parser("plot", help="scatter plots for finished runs")
    pl.add_argument("runs", nargs="*", help="run directories")
    pl.add_argument("--out", default="plots")
    return parser


def resolve(args) -> dict:
    """Merge defaults, the config file and command line flags."""
    values = {k: d for k, (_, d) in TRAINING_OPTIONS.items()}
    values.update({"log-preferences": False, "workers": 1, "problems": None, "scalarizations": None,
                   "samplers": None, "seeds": None})
    if getattr(args, "config", None):
        for key, raw in read_config_file(args.config).items():
            if key not in values:
                raise ConfigError(f"unknown config key {key!r}")
            typ = TRAINING_OPTIONS.get(key, (str, None))[0]
            if key == "log-preferences":
                values[key] = raw.lower() in ("1", "true", "yes", "on")
            elif key == "workers":
                values[key] = int(raw)
            else:
                try:
                    values[key] = typ(raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    for key in values:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            values[key] = flag
    return values


def config_from(values: dict) -> RunConfig:
    try:
        return RunConfig(
            problem=values["problem"],
            scalarization=values["scalarization"],
            sampler=values["sampler"],
            seed=values["seed"],
            optimizer=OptimizerConfig(learning_rate=values["lr"], batch_size=values["batch"],
                                      max_iterations=values["iters"]),
            eps=EpsConfig(period=values["period"], select_fraction=values["sp"], crossover_prob=values["cp"],
                          mutation_prob=values["mp"], eta_c=values["eta-c"], eta_m=values["eta-m"]),
            mu=values["mu"],
            epsilon=values["epsilon"],
            hv_eval_stride=values["stride"],
            log_preferences=bool(values["log-preferences"]),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _check_names(problems, scalarizations, samplers):
    for p in problems:
        if p not in PROBLEMS:
            raise ConfigError(f"unknown problem {p!r}")
    for s in scalarizations:
        if s not in Scalarization.KINDS:
            raise ConfigError(f"unknown scalarization {s!r}")
    for s in samplers:
        if s not in SAMPLERS:
            raise ConfigError(f"unknown sampler {s!r}")


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "front":
            if args.problem not in PROBLEMS:
                raise ConfigError(f"unknown problem {args.problem!r}")
            try:
                front = get_problem(args.problem).reference_front(args.points)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            front.to_csv(args.out)
            print(f"wrote {len(front.points)} points ({front.source}) to {args.out}")
            return EXIT_OK
        if args.command == "plot":
            files = emit_plots(args.runs, args.out)
            print(f"wrote {len(files)} files to {args.out}" if files else "nothing to plot")
            return EXIT_OK

        values = resolve(args)
        base = config_from(values)
        out = values["out"]
        if args.command == "run":
            record = run_single(base, out)
            print(f"{record.path}: status={record.status} final_log_hv_diff={record.final_log_hv_diff:.6g}")
            return EXIT_OK if record.status == "ok" else EXIT_NUMERIC
        if args.command == "matrix":
            problems = _split(values["problems"] or values["problem"])
            scals = _split(values["scalarizations"] or values["scalarization"])
            samplers = _split(values["samplers"] or ",".join(SAMPLERS))
            seeds = _parse_seeds(values["seeds"] or str(values["seed"]))
            _check_names(problems, scals, samplers)
            result = run_matrix(problems, scals, samplers, seeds, out, base, workers=values["workers"])
            for row in result.aggregates:
                print(",".join(str(v) for v in row))
            return EXIT_NUMERIC if result.failures else EXIT_OK
        if args.command == "sweep":
            seeds = _parse_seeds(values["seeds"] or str(values["seed"]))
            rows = run_sweep(base.problem, base.scalarization, seeds, out, base, workers=values["workers"])
            failed = any(r[2] != r[2] for r in rows)
            print(f"wrote {len(rows)} sweep rows to {out}")
            return EXIT_NUMERIC if failed else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG
