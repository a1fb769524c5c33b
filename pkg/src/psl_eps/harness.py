"""Experiment runner: single runs, the sampler comparison matrix, sweeps and plots.

Every run writes into its own directory, named after a hash of its
configuration:

* ``trace.csv``       iteration,loss,hv_estimate,log_hv_diff every
                      ``hv_eval_stride`` iterations and at the last one
* ``report.json``     configuration, final hypervolume report, evaluation count
* ``model.txt``       checkpoint of the trained network
* ``objectives.csv``  final objective vectors on the evaluation preferences
* ``preferences.csv`` every training preference (only with ``log_preferences``)
* ``FAILED``          present when the run stopped on a numeric error
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np
from sklearn.neighbors import KDTree

from .core import NumericStateError, make_rng
from .eps import EpsConfig, run_eps_training, run_uniform_training
from .indicators import evaluation_preferences, log_hv_difference
from .model import OptimizerConfig, ParetoSetModel
from .problems import PROBLEMS, get_problem
from .scalarize import DEFAULT_EPSILON, Scalarization

log = logging.getLogger(__name__)

SAMPLERS = ("uniform", "eps")
FRONT_POINTS = 10_000
TRACE_HEADER = ["iteration", "loss", "hv_estimate", "log_hv_diff"]
MATRIX_HEADER = ["problem", "scalarization", "sampler", "seed", "final_log_hv_diff", "wallclock_s"]
AGGREGATE_HEADER = ["problem", "scalarization", "mean_uniform", "std_uniform", "mean_eps", "std_eps", "improved"]
SWEEP_SP = (0.05, 0.1, 0.2, 0.4)
SWEEP_CP_MP = ((0.7, 0.5), (0.7, 0.7), (0.7, 0.9), (0.9, 0.5), (0.9, 0.7), (0.9, 0.9))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: str = "zdt3"
    scalarization: str = "mtch"
    sampler: str = "eps"
    seed: int = 0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    eps: EpsConfig = field(default_factory=EpsConfig)
    mu: float = 1.0
    epsilon: float = DEFAULT_EPSILON
    hidden: tuple[int, ...] = (64, 64)
    zero_last: bool = False
    hv_eval_stride: int = 20
    log_preferences: bool = False

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if self.scalarization not in Scalarization.KINDS:
            raise ConfigError(f"unknown scalarization {self.scalarization!r}")
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.hv_eval_stride < 1:
            raise ConfigError("hv_eval_stride must be positive")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.sampler == "eps" and self.optimizer.max_iterations % self.eps.period:
            raise ConfigError("period must divide the number of iterations")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden"] = list(self.hidden)
        d["optimizer"]["betas"] = list(self.optimizer.betas)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha1(blob.encode()).hexdigest()

    @property
    def run_name(self) -> str:
        return f"{self.problem}-{self.scalarization}-{self.sampler}-seed{self.seed}-{self.digest()[:12]}"

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class RunRecord:
    config: RunConfig
    path: Path
    status: str
    trace: list[tuple[int, float, float, float]]
    final_log_hv_diff: float
    wallclock_s: float
    n_evaluations: int = 0
    message: str = ""
    last_period_preferences: np.ndarray | None = None


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, np.ndarray):
        return [_json_safe(float(x)) for x in v]
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def run_single(config: RunConfig, out_dir, front_points: int = FRONT_POINTS) -> RunRecord:
    """Train one model and write its artifacts under ``out_dir/<run name>``."""
    problem = get_problem(config.problem)
    front = problem.reference_front(front_points)
    eval_prefs = evaluation_preferences(problem.n_obj)
    path = Path(out_dir) / config.run_name
    path.mkdir(parents=True, exist_ok=True)
    (path / "FAILED").unlink(missing_ok=True)

    rng = make_rng(config.seed)
    model = ParetoSetModel.for_problem(problem, hidden=config.hidden, rng=rng, zero_last=config.zero_last)
    scal = Scalarization(config.scalarization, mu=config.mu)
    T_max = config.optimizer.max_iterations
    trace: list[tuple[int, float, float, float]] = []
    pref_log: list[tuple] = []
    last_period: list[np.ndarray] = []
    last_period_start = T_max - config.eps.period + 1

    def callback(t, mdl, record):
        if config.log_preferences:
            pref_log.extend((t, record.source, *lam) for lam in record.preferences)
        if t >= last_period_start:
            last_period.append(record.preferences)
        if t % config.hv_eval_stride == 0 or t == T_max:
            report = log_hv_difference(front, problem.evaluate(mdl.forward(eval_prefs)))
            trace.append((t, record.loss, report.hv_estimate, report.log_hv_diff))

    start = time.perf_counter()
    status, message, result = "ok", "", None
    try:
        if config.sampler == "eps":
            result = run_eps_training(problem, model, scal, config.optimizer, config.eps, rng, callback,
                                      epsilon=config.epsilon)
        else:
            result = run_uniform_training(problem, model, scal, config.optimizer, rng, callback,
                                          epsilon=config.epsilon)
    except (NumericStateError, FloatingPointError) as exc:
        status, message = "failed", str(exc)
    wallclock = time.perf_counter() - start

    _write_csv(path / "trace.csv", TRACE_HEADER, trace)
    if config.log_preferences:
        m = problem.n_obj
        _write_csv(path / "preferences.csv", ["iteration", "source", *[f"l{i + 1}" for i in range(m)]], pref_log)
    info = {"config": config.to_dict(), "config_hash": config.digest(), "status": status,
            "evaluation_preferences": len(eval_prefs), "front_points": len(front.points),
            "front_source": front.source, "wallclock_s": wallclock}
    final = math.nan
    if status == "ok":
        F = problem.evaluate(model.forward(eval_prefs))
        report = log_hv_difference(front, F)
        final = report.log_hv_diff
        info["final"] = dataclasses.asdict(report)
        info["n_evaluations"] = result.n_evaluations
        _write_csv(path / "objectives.csv", [f"f{i + 1}" for i in range(problem.n_obj)], F.tolist())
        model.save(path / "model.txt")
    else:
        info["error"] = message
        (path / "FAILED").write_text(message + "\n")
    (path / "report.json").write_text(json.dumps(_json_safe(info), indent=2, sort_keys=True) + "\n")
    return RunRecord(config, path, status, trace, final, wallclock,
                     result.n_evaluations if result else 0, message,
                     np.concatenate(last_period) if last_period else None)


def _run_job(args):
    config, out_dir, front_points = args
    return run_single(config, out_dir, front_points)


def execute(configs, out_dir, workers: int = 1, front_points: int = FRONT_POINTS) -> list[RunRecord]:
    """Run ``configs`` serially or on a process pool; results keep input order."""
    jobs = [(c, Path(out_dir) / "runs", front_points) for c in configs]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


@dataclass
class MatrixResult:
    records: list[RunRecord]
    aggregates: list[tuple]
    failures: int


def _mean_std(values):
    v = np.array([x for x in values if not math.isnan(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    with np.errstate(invalid="ignore"):
        return float(v.mean()), float(v.std())


def aggregate(records) -> list[tuple]:
    """Per (problem, scalarization) mean and population std of the final metric."""
    cells: dict = {}
    for r in records:
        key = (r.config.problem, r.config.scalarization)
        cells.setdefault(key, {s: [] for s in SAMPLERS})[r.config.sampler].append(r.final_log_hv_diff)
    rows = []
    for (prob, scal), by in cells.items():
        mu, su = _mean_std(by["uniform"])
        me, se = _mean_std(by["eps"])
        improved = "" if math.isnan(mu) or math.isnan(me) else int(me < mu)
        rows.append((prob, scal, mu, su, me, se, improved))
    return rows


def median_curves(records) -> list[tuple]:
    """Median log-HV-difference per iteration for each (problem, scalarization, sampler)."""
    groups: dict = {}
    for r in records:
        if r.status != "ok":
            continue
        key = (r.config.problem, r.config.scalarization, r.config.sampler)
        groups.setdefault(key, []).append(r.trace)
    rows = []
    for key, traces in groups.items():
        n = min(len(t) for t in traces)
        for i in range(n):
            it = traces[0][i][0]
            rows.append((*key, it, float(np.median([t[i][3] for t in traces]))))
    return rows


def run_matrix(problems, scalarizations, samplers, seeds, out_dir, base: RunConfig | None = None,
               workers: int = 1, front_points: int = FRONT_POINTS) -> MatrixResult:
    """Run the cross product and write matrix, aggregate and curve CSVs."""
    axes = [list(problems), list(scalarizations), list(samplers), list(seeds)]
    if not all(axes):
        raise ConfigError("every matrix axis needs at least one value")
    base = base or RunConfig()
    configs = [base.replace(problem=p, scalarization=s, sampler=sm, seed=int(seed))
               for p, s, sm, seed in product(*axes)]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = execute(configs, out, workers, front_points)
    _write_csv(out / "matrix.csv", MATRIX_HEADER,
               [(r.config.problem, r.config.scalarization, r.config.sampler, r.config.seed,
                 r.final_log_hv_diff, f"{r.wallclock_s:.3f}") for r in records])
    aggs = aggregate(records)
    _write_csv(out / "aggregates.csv", AGGREGATE_HEADER, aggs)
    _write_csv(out / "curves.csv", ["problem", "scalarization", "sampler", "iteration", "median_log_hv_diff"],
               median_curves(records))
    failures = sum(r.status != "ok" for r in records)
    return MatrixResult(records, aggs, failures)


def sweep_settings(sp_values=SWEEP_SP, cp_mp=SWEEP_CP_MP) -> list[tuple[str, dict]]:
    settings = [("uniform", {})]
    settings += [(f"sp={sp}", {"select_fraction": sp}) for sp in sp_values]
    settings += [(f"cp={cp},mp={mp}", {"crossover_prob": cp, "mutation_prob": mp}) for cp, mp in cp_mp]
    return settings


def run_sweep(problem, scalarization, seeds, out_dir, base: RunConfig | None = None, workers: int = 1,
              settings=None, front_points: int = FRONT_POINTS) -> list[tuple]:
    """Sensitivity of EPS to ``sp`` and to the (cp, mp) pair, against uniform sampling.

    Writes ``sweep.csv`` (one row per run) and ``sweep_curves.csv`` (median
    curve per setting).  Returns the sweep rows.
    """
    base = (base or RunConfig()).replace(problem=problem, scalarization=scalarization)
    settings = sweep_settings() if settings is None else settings
    labels, configs = [], []
    for label, changes in settings:
        for seed in seeds:
            if label == "uniform":
                cfg = base.replace(sampler="uniform", seed=int(seed))
            else:
                cfg = base.replace(sampler="eps", seed=int(seed), eps=dataclasses.replace(base.eps, **changes))
            labels.append(label)
            configs.append(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = execute(configs, out, workers, front_points)
    rows = [(label, r.config.seed, r.final_log_hv_diff) for label, r in zip(labels, records)]
    _write_csv(out / "sweep.csv", ["setting", "seed", "final_log_hv_diff"], rows)
    curves = []
    for label in dict.fromkeys(labels):
        traces = [r.trace for lb, r in zip(labels, records) if lb == label and r.status == "ok"]
        if not traces:
            continue
        n = min(len(t) for t in traces)
        curves += [(label, traces[0][i][0], float(np.median([t[i][3] for t in traces]))) for i in range(n)]
    _write_csv(out / "sweep_curves.csv", ["setting", "iteration", "median_log_hv_diff"], curves)
    return rows


def projected_front(front_points, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Map front points onto the simplex as normalised offsets from a shifted ideal."""
    F = np.asarray(front_points, dtype=float)
    diff = F - (F.min(axis=0) - epsilon)
    return diff / diff.sum(axis=1, keepdims=True)


def front_concentration(prefs, front_points, radius: float = 0.05, epsilon: float = DEFAULT_EPSILON) -> float:
    """Fraction of ``prefs`` within ``radius`` (Euclidean) of the projected front."""
    prefs = np.asarray(prefs, dtype=float)
    if len(prefs) == 0:
        return math.nan
    tree = KDTree(projected_front(front_points, epsilon))
    dist, _ = tree.query(prefs, k=1)
    return float(np.mean(dist[:, 0] <= radius))


# ----------------------------------------------------------------- plotting

_SVG_SIZE = 420
_PAD = 30


def _svg_scatter(path, series, title, labels=("", "")) -> None:
    """Minimal scatter plot; ``series`` is a list of (points, colour, radius, name)."""
    pts = [np.asarray(p, dtype=float) for p, *_ in series if len(p)]
    allp = np.concatenate(pts) if pts else np.zeros((1, 2))
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    inner = _SVG_SIZE - 2 * _PAD

    def xy(p):
        u = (p - lo) / span
        return _PAD + u[0] * inner, _SVG_SIZE - _PAD - u[1] * inner

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_SIZE}" height="{_SVG_SIZE}" '
           f'viewBox="0 0 {_SVG_SIZE} {_SVG_SIZE}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<rect x="{_PAD}" y="{_PAD}" width="{inner}" height="{inner}" fill="none" stroke="#999"/>',
           f'<text x="{_SVG_SIZE / 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
           f'<text x="{_SVG_SIZE / 2}" y="{_SVG_SIZE - 8}" text-anchor="middle" font-size="11">{labels[0]}</text>',
           f'<text x="10" y="{_SVG_SIZE / 2}" font-size="11" transform="rotate(-90 10 {_SVG_SIZE / 2})">'
           f'{labels[1]}</text>']
    for k, (points, colour, radius, name) in enumerate(series):
        out.append(f'<g fill="{colour}" fill-opacity="0.6"><title>{name}</title>')
        for p in np.asarray(points, dtype=float):
            x, y = xy(p)
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius}"/>')
        out.append("</g>")
        out.append(f'<text x="{_PAD + 4}" y="{_PAD + 14 + 13 * k}" font-size="11" fill="{colour}">{name}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def _ternary(lam):
    lam = np.asarray(lam, dtype=float)
    return np.stack([lam[:, 1] + 0.5 * lam[:, 2], lam[:, 2] * math.sqrt(3) / 2], axis=1)


def _isometric(F):
    F = np.asarray(F, dtype=float)
    c = math.cos(math.pi / 6)
    return np.stack([c * (F[:, 1] - F[:, 0]), F[:, 2] - 0.5 * (F[:, 0] + F[:, 1])], axis=1)


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def emit_plots(run_dirs, out_dir, max_points: int = 4000) -> list[Path]:
    """Scatter data and SVG renderings for finished runs.

    For each run: sampled preferences on the simplex (needs the preference
    log) and final objectives against the reference front.
    """
    written: list[Path] = []
    run_dirs = [Path(d) for d in run_dirs]
    if not run_dirs:
        return written
    out = Path(out_dir)
    for run in run_dirs:
        report_path = run / "report.json"
        if not report_path.exists():
            log.warning("skipping %s: no report.json", run)
            continue
        cfg = json.loads(report_path.read_text())["config"]
        problem = get_problem(cfg["problem"])
        m = problem.n_obj
        out.mkdir(parents=True, exist_ok=True)
        name = run.name
        prefs_path = run / "preferences.csv"
        if prefs_path.exists():
            _, rows = _read_csv(prefs_path)
            lam = np.array([[float(v) for v in r[2:]] for r in rows])
            its = np.array([int(r[0]) for r in rows])
            stride = max(1, len(lam) // max_points)
            lam, its = lam[::stride], its[::stride]
            if m == 2:
                pts = np.stack([lam[:, 0], its / its.max()], axis=1)
                axes = ("lambda_1", "iteration (scaled)")
            else:
                pts = _ternary(lam)
                axes = ("ternary x", "ternary y")
            dest = out / f"{name}-preferences.csv"
            _write_csv(dest, ["iteration", "x", "y"], [(i, *p) for i, p in zip(its, pts)])
            svg = out / f"{name}-preferences.svg"
            _svg_scatter(svg, [(pts, "#1f77b4", 1.2, "sampled preferences")], f"{name}: preferences", axes)
            written += [dest, svg]
        else:
            log.info("no preference log in %s; preference plot skipped", run)
        obj_path = run / "objectives.csv"
        if obj_path.exists():
            _, rows = _read_csv(obj_path)
            F = np.array([[float(v) for v in r] for r in rows])
            front = problem.reference_front(FRONT_POINTS).points
            front = front[:: max(1, len(front) // max_points)]
            proj = (lambda a: a[:, :2]) if m == 2 else _isometric
            svg = out / f"{name}-front.svg"
            _svg_scatter(svg, [(proj(front), "#bbbbbb", 1.0, "reference front"),
                               (proj(F), "#d62728", 2.5, "model")],
                         f"{name}: objectives", ("f1", "f2") if m == 2 else ("projection", "projection"))
            written.append(svg)
    return written
