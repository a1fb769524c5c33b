import csv
import json
import math

import numpy as np
import pytest

from psl_eps.core import NumericStateError
from psl_eps.eps import EpsConfig
from psl_eps.harness import (
    AGGREGATE_HEADER,
    MATRIX_HEADER,
    ConfigError,
    RunConfig,
    emit_plots,
    front_concentration,
    projected_front,
    run_matrix,
    run_single,
    run_sweep,
    sweep_settings,
)
from psl_eps.model import OptimizerConfig

SHORT = OptimizerConfig(max_iterations=100)


def cfg(**kw):
    kw.setdefault("optimizer", SHORT)
    kw.setdefault("eps", EpsConfig(period=50))
    return RunConfig(**kw)


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(problem="zdt9")
    with pytest.raises(ConfigError):
        RunConfig(scalarization="hv")
    with pytest.raises(ConfigError):
        RunConfig(sampler="grid")
    with pytest.raises(ConfigError):
        cfg(eps=EpsConfig(period=30))


def test_config_hash_names_directory():
    a, b = cfg(seed=1), cfg(seed=2)
    assert a.digest() != b.digest()
    assert a.digest() == cfg(seed=1).digest()
    assert a.digest()[:12] in a.run_name


def test_run_single_artifacts(tmp_path):
    rec = run_single(cfg(log_preferences=True), tmp_path)
    assert rec.status == "ok"
    files = {p.name for p in rec.path.iterdir()}
    assert {"trace.csv", "report.json", "model.txt", "objectives.csv", "preferences.csv"} <= files
    rows = read_rows(rec.path / "trace.csv")
    assert rows[0] == ["iteration", "loss", "hv_estimate", "log_hv_diff"]
    assert [int(r[0]) for r in rows[1:]] == [20, 40, 60, 80, 100]
    report = json.loads((rec.path / "report.json").read_text())
    assert report["n_evaluations"] == 800
    assert report["evaluation_preferences"] == 100
    assert report["final"]["log_hv_diff"] == pytest.approx(rec.final_log_hv_diff)
    assert len(read_rows(rec.path / "preferences.csv")) == 1 + 800


def test_trace_includes_final_iteration_off_stride(tmp_path):
    rec = run_single(cfg(hv_eval_stride=30), tmp_path)
    assert [t[0] for t in rec.trace] == [30, 60, 90, 100]


def test_same_seed_byte_identical(tmp_path):
    a = run_single(cfg(seed=3), tmp_path / "a")
    b = run_single(cfg(seed=3), tmp_path / "b")
    assert (a.path / "trace.csv").read_bytes() == (b.path / "trace.csv").read_bytes()


def test_single_period_eps_matches_uniform_trace(tmp_path):
    u = run_single(cfg(sampler="uniform", seed=4), tmp_path)
    e = run_single(cfg(sampler="eps", seed=4, eps=EpsConfig(period=100)), tmp_path)
    assert (u.path / "trace.csv").read_bytes() == (e.path / "trace.csv").read_bytes()


def test_numeric_failure_writes_marker(tmp_path, monkeypatch):
    import psl_eps.harness as harness

    def boom(*args, **kwargs):
        raise NumericStateError("non-finite loss nan")

    monkeypatch.setattr(harness, "run_eps_training", boom)
    rec = run_single(cfg(), tmp_path)
    assert rec.status == "failed" and math.isnan(rec.final_log_hv_diff)
    assert (rec.path / "FAILED").exists()
    assert json.loads((rec.path / "report.json").read_text())["status"] == "failed"
    assert read_rows(rec.path / "trace.csv")[0][0] == "iteration"


def test_matrix_outputs(tmp_path):
    res = run_matrix(["zdt3"], ["mtch", "ls"], ["uniform", "eps"], [0, 1], tmp_path, cfg())
    rows = read_rows(tmp_path / "matrix.csv")
    assert rows[0] == MATRIX_HEADER and len(rows) == 1 + 8
    aggs = read_rows(tmp_path / "aggregates.csv")
    assert aggs[0] == AGGREGATE_HEADER and len(aggs) == 1 + 2
    # aggregates recomputed from the row CSV
    for prob, scal, mu, su, me, se, improved in aggs[1:]:
        def vals(sampler):
            return np.array([float(r[4]) for r in rows[1:] if r[1] == scal and r[2] == sampler])
        assert abs(vals("uniform").mean() - float(mu)) <= 1e-12
        assert abs(vals("uniform").std() - float(su)) <= 1e-12
        assert abs(vals("eps").mean() - float(me)) <= 1e-12
        assert abs(vals("eps").std() - float(se)) <= 1e-12
        assert improved == str(int(float(me) < float(mu)))
    curves = read_rows(tmp_path / "curves.csv")
    assert len(curves) == 1 + 4 * 5
    assert res.failures == 0


def test_matrix_rejects_empty_axis(tmp_path):
    with pytest.raises(ConfigError):
        run_matrix([], ["mtch"], ["eps"], [0], tmp_path)


def test_matrix_counting():
    from itertools import product
    cells = list(product(range(7), range(4), range(2), range(11)))
    assert len(cells) == 616
    assert len({c[:2] for c in cells}) == 28  # x 2 samplers = 56 mean/std cells


def test_parallel_matches_serial(tmp_path):
    kw = dict(problems=["dtlz5"], scalarizations=["tch"], samplers=["uniform", "eps"], seeds=[0, 1])
    run_matrix(**kw, out_dir=tmp_path / "s", base=cfg(), workers=1)
    run_matrix(**kw, out_dir=tmp_path / "p", base=cfg(), workers=2)
    for d in (tmp_path / "s" / "runs").iterdir():
        other = tmp_path / "p" / "runs" / d.name
        assert (d / "trace.csv").read_bytes() == (other / "trace.csv").read_bytes()
    strip = lambda rows: [r[:5] for r in rows]  # noqa: E731  wallclock differs
    assert strip(read_rows(tmp_path / "s" / "matrix.csv")) == strip(read_rows(tmp_path / "p" / "matrix.csv"))


def test_sweep(tmp_path):
    settings = sweep_settings()
    labels = [s[0] for s in settings]
    assert labels[:5] == ["uniform", "sp=0.05", "sp=0.1", "sp=0.2", "sp=0.4"]
    assert "cp=0.9,mp=0.9" in labels
    rows = run_sweep("zdt3", "mtch", [0], tmp_path, cfg(), settings=settings[:3])
    assert [r[0] for r in rows] == ["uniform", "sp=0.05", "sp=0.1"]
    assert (tmp_path / "sweep_curves.csv").exists()


def test_projected_front_and_concentration():
    pts = np.array([[0.0, 1.0], [1.0, 0.0]])
    proj = projected_front(pts, epsilon=0.1)
    np.testing.assert_allclose(proj, [[0.1 / 1.2, 1.1 / 1.2], [1.1 / 1.2, 0.1 / 1.2]])
    assert front_concentration(proj, pts) == 1.0
    assert front_concentration([[0.5, 0.5]], pts) == 0.0


def test_emit_plots(tmp_path):
    rec = run_single(cfg(problem="dtlz7", log_preferences=True), tmp_path / "runs")
    bare = run_single(cfg(problem="zdt3"), tmp_path / "runs")
    files = emit_plots([rec.path, bare.path], tmp_path / "plots")
    names = {f.name for f in files}
    assert f"{rec.path.name}-preferences.svg" in names
    assert f"{rec.path.name}-preferences.csv" in names
    assert f"{bare.path.name}-front.svg" in names
    assert f"{bare.path.name}-preferences.svg" not in names  # no log, skipped
    assert (tmp_path / "plots" / f"{rec.path.name}-front.svg").read_text().startswith("<svg")


def test_emit_plots_empty(tmp_path):
    assert emit_plots([], tmp_path / "plots") == []
    assert not (tmp_path / "plots").exists()
