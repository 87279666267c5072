import subprocess
import sys

import numpy as np
import pytest

from trustwalk.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from trustwalk.trust_graph import read_edgelist, row_normalize
from trustwalk.twr_oracle import exact_indirect_trust, normalize_rows, read_matrix_csv


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "g.edges"
    assert main(["generate", "--topology", "scale_free", "--n", "60", "--avg-degree", "6", "--seed", "4", "--out", str(path)]) == EXIT_OK
    return path


def test_generate(graph_file):
    g = read_edgelist(graph_file)
    assert g.node_count == 60 and g.seed == 4


def test_oracle(graph_file, tmp_path):
    out, raw = tmp_path / "s_hat.csv", tmp_path / "t.csv"
    assert main(["oracle", "--graph", str(graph_file), "--beta", "0.75", "--out", str(out), "--raw", str(raw)]) == EXIT_OK
    S = row_normalize(read_edgelist(graph_file))
    T = exact_indirect_trust(S, 0.75)
    np.testing.assert_array_equal(read_matrix_csv(raw), T.rows)
    np.testing.assert_array_equal(read_matrix_csv(out), normalize_rows(T).rows)


def test_simulate(graph_file, tmp_path, capsys):
    hits, log = tmp_path / "h.csv", tmp_path / "sim.log"
    args = ["simulate", "--graph", str(graph_file), "--walkers", "50", "--gamma", "0.75", "--seed", "1",
            "--out", str(hits), "--log", str(log)]
    assert main(args) == EXIT_OK
    line = capsys.readouterr().out.strip()
    n, W, gamma, mode, seed, total, cov = line.split()
    assert (n, W, gamma, mode, seed) == ("60", "50", "0.75", "geometric", "1")
    assert int(total) > 2 * 50 * 60 and 0 < float(cov) <= 1
    assert log.read_text().strip() == line
    counts = np.loadtxt(hits, delimiter=",", dtype=np.int64)
    assert counts.shape == (60, 60) and np.all(np.diag(counts) == 0)


def test_global(graph_file, tmp_path, capsys):
    out = tmp_path / "imp.csv"
    assert main(["global", "--graph", str(graph_file), "--walkers", "100", "--gamma", "0.8", "--seed", "2", "--out", str(out)]) == EXIT_OK
    rmse = float(capsys.readouterr().out.split()[1])
    assert 0 <= rmse < 1
    assert out.read_text().splitlines()[0] == "node,I_twr,I_rw"


def test_recover(graph_file, tmp_path):
    out = tmp_path / "rec.csv"
    args = ["recover", "--graph", str(graph_file), "--delta", "0.05", "--x", "0.5", "--x", "0.8", "--replicates", "2", "--out", str(out)]
    assert main(args) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "delta,x,min_walkers" and len(lines) == 3


def _sweep_cfg(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("topology = scale_free\nn = 40\navg_degree = 6\nW_grid = 10, 40\ngamma_grid = 0.6\nreplicates = 2\n")
    return cfg


def test_sweep_requires_output(tmp_path):
    assert main(["sweep", "--config", str(_sweep_cfg(tmp_path))]) == EXIT_USAGE


def test_sweep_and_summary(tmp_path):
    out, summ = tmp_path / "s.csv", tmp_path / "summary.csv"
    assert main(["sweep", "--config", str(_sweep_cfg(tmp_path)), "--out", str(out), "--summary", str(summ), "--seed", "5"]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 1 + 2 * 2
    assert len(summ.read_text().splitlines()) == 1 + 2


@pytest.mark.parametrize(
    "argv",
    [
        ["generate", "--topology", "erdos_renyi", "--n", "50", "--seed", "3"],
        ["oracle", "--beta", "0.75"],
        ["simulate", "--walkers", "40", "--gamma", "0.7", "--seed", "8"],
        ["global", "--walkers", "40", "--gamma", "0.7", "--seed", "8"],
        ["recover", "--x", "0.5", "--replicates", "1", "--seed", "2"],
        ["sweep", "--seed", "1"],
    ],
)
def test_repeat_invocations_byte_identical(argv, graph_file, tmp_path):
    outputs = []
    for run in range(2):
        out = tmp_path / f"out{run}"
        cmd = list(argv)
        if cmd[0] not in ("generate", "sweep"):
            cmd += ["--graph", str(graph_file)]
        if cmd[0] == "sweep":
            cmd += ["--config", str(_sweep_cfg(tmp_path))]
        cmd += ["--out", str(out)]
        assert main(cmd) == EXIT_OK
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_usage_errors(tmp_path, capsys):
    assert main([]) == EXIT_USAGE
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["simulate", "--graph"]) == EXIT_USAGE
    assert main(["sweep", "--config", str(tmp_path / "nope.cfg")]) == EXIT_RUNTIME
    assert "error" in capsys.readouterr().err


def test_runtime_errors(graph_file, tmp_path):
    assert main(["simulate", "--graph", str(graph_file), "--gamma", "1.0", "--out", str(tmp_path / "x")]) == EXIT_RUNTIME
    assert main(["oracle", "--graph", str(tmp_path / "missing.edges"), "--out", str(tmp_path / "x")]) == EXIT_RUNTIME


def test_module_entry_point(tmp_path):
    out = tmp_path / "g.edges"
    proc = subprocess.run(
        [sys.executable, "-m", "trustwalk", "generate", "--n", "20", "--avg-degree", "4", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().startswith("n 20\n")
