import csv

import pytest

from psl_eps.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main, read_config_file, resolve, build_parser


def test_run_command(tmp_path, capsys):
    code = main(["run", "--problem", "zdt3", "--iters", "40", "--period", "20", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert "status=ok" in capsys.readouterr().out
    (run,) = list(tmp_path.iterdir())
    assert (run / "trace.csv").exists()


def test_config_file_and_override(tmp_path):
    conf = tmp_path / "c.cfg"
    conf.write_text("# comment\nproblem = dtlz5\nsp=0.2\nlr=0.01\n")
    args = build_parser().parse_args(["run", "--config", str(conf), "--lr", "0.005"])
    values = resolve(args)
    assert values["problem"] == "dtlz5"
    assert values["sp"] == 0.2
    assert values["lr"] == 0.005


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("no equals sign\n")
    with pytest.raises(ValueError):
        read_config_file(bad)
    unknown = tmp_path / "u.cfg"
    unknown.write_text("colour=blue\n")
    assert main(["run", "--config", str(unknown)]) == EXIT_CONFIG


@pytest.mark.parametrize("argv", [
    ["run", "--problem", "nope"],
    ["run", "--scalarization", "hv"],
    ["run", "--iters", "100", "--period", "30"],
    ["run", "--sp", "0"],
    ["matrix", "--problems", "zdt3", "--samplers", "grid"],
])
def test_config_errors_exit_2(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_CONFIG


def test_matrix_command(tmp_path):
    code = main(["matrix", "--problems", "zdt3", "--scalarizations", "ls", "--seeds", "0-1",
                 "--iters", "40", "--period", "20", "--out", str(tmp_path)])
    assert code == EXIT_OK
    with open(tmp_path / "matrix.csv") as fh:
        assert len(list(csv.reader(fh))) == 1 + 4


def test_numeric_failure_exit_3(tmp_path, monkeypatch):
    import psl_eps.harness as harness
    from psl_eps.core import NumericStateError

    def boom(*a, **k):
        raise NumericStateError("boom")

    monkeypatch.setattr(harness, "run_uniform_training", boom)
    assert main(["run", "--sampler", "uniform", "--iters", "20", "--out", str(tmp_path)]) == EXIT_NUMERIC


def test_front_and_plot_commands(tmp_path):
    out = tmp_path / "front.csv"
    assert main(["front", "--problem", "dtlz5", "--points", "200", "--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith("f1,f2,f3\n")
    assert main(["front", "--problem", "dtlz5", "--points", "10", "--out", str(out)]) == EXIT_CONFIG
    assert main(["plot", "--out", str(tmp_path / "plots")]) == EXIT_OK
