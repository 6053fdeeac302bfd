import json
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from privmech.cli import EXIT_INVALID, EXIT_NO_CONVERGENCE, main
from privmech import eit


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSolve:
    def test_mirrored(self, capsys):
        code, out, _ = run(["solve", "--p1", "0.05,0.95", "--p2", "0.95,0.05", "--eps1", "0.01", "--eps2", "0.01"], capsys)
        assert code == 0
        W = np.array(json.loads(out)["mechanism"])
        assert_allclose(np.sort(W, axis=1), [[0.429289, 0.570711]] * 2, atol=1e-6)

    def test_degenerate(self, capsys):
        code, out, _ = run(["solve", "--p1", "0.5,0.5", "--p2", "0.5,0.5", "--eps1", "0.1", "--eps2", "0.1"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["exact_utility"] == 0 and doc["degenerate"]

    def test_simplex_violation(self, capsys):
        code, _, err = run(["solve", "--p1", "0.6,0.5", "--p2", "0.5,0.5", "--eps1", "0.1"], capsys)
        assert code == EXIT_INVALID
        assert "p1" in err and "simplex" in err

    @pytest.mark.parametrize("argv,field", [
        (["--eps1", "-1"], "eps1"),
        (["--eps1", "x"], "eps1"),
        (["--eps1", "0.1", "--w0", "0.5,0.6"], "w0"),
    ])
    def test_bad_fields(self, capsys, argv, field):
        code, _, err = run(["solve", "--p1", "0.3,0.7", "--p2", "0.6,0.4", *argv], capsys)
        assert code == EXIT_INVALID and field in err

    def test_bits(self, capsys):
        base = ["solve", "--preset", "mirrored", "--eps1", "0.01"]
        _, nats, _ = run(base, capsys)
        _, bits, _ = run(base + ["--bits"], capsys)
        assert_allclose(json.loads(bits)["exact_utility"], json.loads(nats)["exact_utility"] / np.log(2))

    def test_convergence_error(self, capsys, monkeypatch):
        def boom(*a, **k):
            raise eit.ConvergenceError("stalled")

        monkeypatch.setattr(eit, "solve", boom)
        code, _, err = run(["solve", "--preset", "mirrored", "--eps1", "0.01"], capsys)
        assert code == EXIT_NO_CONVERGENCE and "stalled" in err


class TestOtherCommands:
    def test_oracle(self, capsys):
        code, out, _ = run(["oracle", "--preset", "mirrored", "--eps1", "0.01", "--grid-step", "0.01"], capsys)
        assert code == 0 and json.loads(out)["utility"] > 0

    def test_compare(self, capsys, tmp_path):
        out = tmp_path / "pt.json"
        code, _, _ = run(["compare", "--preset", "near-uniform", "--eps1", "0.01", "--out", str(out)], capsys)
        doc = json.loads(out.read_text())
        assert code == 0 and doc["utility_oracle"] >= doc["utility_eit"] - 1e-9

    def test_sweep_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "p1": [0.45, 0.55], "p2": [0.5, 0.5],
            "eps_grid": {"fractions": [0.05, 0.1]}, "grid": {"step": 0.01},
        }))
        csv = tmp_path / "c.csv"
        code, _, _ = run(["sweep", "--config", str(cfg), "--out", str(csv), "--svg", str(tmp_path / "c.svg")], capsys)
        assert code == 0
        assert len(csv.read_text().splitlines()) == 3

    def test_sweep_stdout(self, capsys):
        code, out, _ = run(["sweep", "--preset", "mirrored", "--points", "2", "--grid-step", "0.01"], capsys)
        assert code == 0 and out.startswith("eps_target,")

    def test_missing_sources(self, capsys):
        code, _, err = run(["solve", "--eps1", "0.1"], capsys)
        assert code == EXIT_INVALID and "p1" in err

    def test_module_entry(self):
        r = subprocess.run([sys.executable, "-m", "privmech", "solve", "--p1", "0.6,0.5", "--p2", "0.5,0.5", "--eps1", "0.1"],
                           capture_output=True, text=True)
        assert r.returncode == 2
