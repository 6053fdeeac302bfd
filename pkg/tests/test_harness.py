import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from privmech.harness import (
    CSV_COLUMNS,
    PRESETS,
    ExperimentConfig,
    TradeoffCurve,
    TradeoffPoint,
    compare_at,
    fraction_grid,
    min_entropy,
    sweep,
    worker_count,
)
from privmech.infocore import ValidationError, entropy
from privmech.oracle import GridSpec, grid_allowance


def config(preset="near-uniform", fractions=(), **kw):
    p1, p2 = PRESETS[preset]
    return ExperimentConfig(p1=p1, p2=p2, eps_grid=tuple(fraction_grid(p1, p2, fractions)), **kw)


class TestConfig:
    def test_presets(self):
        assert PRESETS["skewed-vs-mixed"] == ((0.95, 0.05), (0.55, 0.45))
        assert PRESETS["mirrored"] == ((0.05, 0.95), (0.95, 0.05))
        assert PRESETS["near-uniform"] == ((0.45, 0.55), (0.50, 0.50))
        assert PRESETS["skewed-neighbours"] == ((0.05, 0.95), (0.10, 0.90))

    def test_budget_range(self):
        p1, p2 = PRESETS["mirrored"]
        with pytest.raises(ValidationError) as exc:
            ExperimentConfig(p1=p1, p2=p2, eps_grid=((0.5, 0.5),))
        assert exc.value.field == "eps_grid"

    def test_json_round_trip(self, tmp_path):
        cfg = config(fractions=(0.1, 0.2), grid=GridSpec(step=0.01), log_base="bits")
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        back = ExperimentConfig.from_json(path)
        assert back.eps_grid == cfg.eps_grid and back.grid == cfg.grid and back.log_base == "bits"

    def test_fraction_form(self):
        p1, p2 = PRESETS["mirrored"]
        cfg = ExperimentConfig.from_dict({"p1": p1, "p2": p2, "eps_grid": {"fractions": [0.1]}})
        assert_allclose(cfg.eps_grid[0][0], 0.1 * entropy(p1))

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            ExperimentConfig.from_dict({"p1": [0.5, 0.5], "p2": [0.4, 0.6], "eps": 1})

    def test_bad_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{")
        with pytest.raises(ValidationError):
            ExperimentConfig.from_json(path)


class TestCompare:
    def test_zero_budget(self):
        pt = compare_at(config(grid=GridSpec(step=0.01)), 0.0, 0.0)
        assert pt.utility_eit == 0 and pt.utility_oracle == pytest.approx(0, abs=1e-12)

    def test_mirrored_near_equal(self):
        cfg = config("mirrored")
        h = min_entropy(*PRESETS["mirrored"])
        pt = compare_at(cfg, 0.05 * h, 0.05 * h)
        assert pt.leak1 <= pt.eps_effective + 1e-9 and pt.leak2 <= pt.eps_effective + 1e-9
        assert pt.utility_oracle >= pt.utility_eit - 1e-9
        assert pt.relative_gap < 1e-6

    def test_skewed_gap_is_reported(self):
        # away from the vanishing-budget limit the closed form falls short
        cfg = config("skewed-vs-mixed")
        h = min_entropy(*PRESETS["skewed-vs-mixed"])
        pt = compare_at(cfg, 0.15 * h, 0.15 * h)
        assert pt.utility_oracle + grid_allowance(*PRESETS["skewed-vs-mixed"], 1e-3) >= pt.utility_eit
        assert pt.relative_gap > 0.05


class TestSweep:
    def test_empty_grid(self, tmp_path):
        out = tmp_path / "c.csv"
        curve = sweep(config(output_path=str(out)))
        assert curve.points == ()
        assert out.read_text() == ",".join(CSV_COLUMNS) + "\n"

    def test_monotone_and_deterministic(self, tmp_path, monkeypatch):
        fr = np.linspace(0.01, 0.2, 20)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        monkeypatch.setenv("PRIVMECH_THREADS", "4")
        c1 = sweep(config(fractions=fr, grid=GridSpec(step=0.01), output_path=str(a)))
        monkeypatch.setenv("PRIVMECH_THREADS", "1")
        sweep(config(fractions=fr, grid=GridSpec(step=0.01), output_path=str(b)))
        assert a.read_bytes() == b.read_bytes()
        ue = [p.utility_eit for p in c1.points]
        uo = [p.utility_oracle for p in c1.points]
        assert np.all(np.diff(ue) >= 0) and np.all(np.diff(uo) >= 0)

    def test_csv_format(self, tmp_path):
        curve = sweep(config(fractions=(0.1,), grid=GridSpec(step=0.01)), svg_path=tmp_path / "c.svg")
        lines = curve.to_csv().splitlines()
        assert lines[0].split(",") == list(CSV_COLUMNS)
        first = lines[1].split(",")[0]
        assert float(first) == pytest.approx(curve.points[0].eps_target, rel=1e-11)
        svg = (tmp_path / "c.svg").read_text()
        assert svg.count("<polyline") == 2

    def test_bits_scaling(self):
        cfg = config(fractions=(0.1,), grid=GridSpec(step=0.01), log_base="bits")
        curve = sweep(cfg)
        row = curve.to_csv().splitlines()[1].split(",")
        assert float(row[0]) == pytest.approx(curve.points[0].eps_target / np.log(2), rel=1e-11)

    def test_io_error_has_path(self, tmp_path):
        bad = tmp_path / "missing" / "c.csv"
        with pytest.raises(OSError, match="missing"):
            sweep(config(output_path=str(bad)))

    def test_order_enforced(self):
        pt = TradeoffPoint(0.1, 0.1, 0, 0, 0, 0, "Both", 1.0)
        with pytest.raises(ValueError):
            TradeoffCurve((pt, pt), config())


class TestThreads:
    def test_env(self, monkeypatch):
        monkeypatch.setenv("PRIVMECH_THREADS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("PRIVMECH_THREADS", "0")
        assert worker_count() >= 1
        monkeypatch.setenv("PRIVMECH_THREADS", "x")
        with pytest.raises(ValidationError):
            worker_count()
