"""Budget sweeps comparing the closed-form mechanism against the exhaustive oracle.

For each budget pair the closed-form mechanism is built first; its largest
exact leakage becomes the common budget handed to the oracle, so both
utilities are compared at the same effective leakage.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import eit
from .infocore import Distribution, ValidationError, as_distribution, entropy
from .oracle import GridSpec, oracle_solve_binary, oracle_solve_general

CSV_COLUMNS = (
    "eps_target",
    "eps_effective",
    "utility_eit",
    "utility_oracle",
    "leak1",
    "leak2",
    "case_tag",
    "repair_scale",
)
BITS = 1.0 / math.log(2)

# source pairs whose tradeoff curves are reproduced by the notebooks
PRESETS = {
    "skewed-vs-mixed": ((0.95, 0.05), (0.55, 0.45)),
    "mirrored": ((0.05, 0.95), (0.95, 0.05)),
    "near-uniform": ((0.45, 0.55), (0.50, 0.50)),
    "skewed-neighbours": ((0.05, 0.95), (0.10, 0.90)),
}


def min_entropy(p1, p2) -> float:
    """``min(H(p1), H(p2))`` in nats, the scale of the high-privacy regime."""
    return min(entropy(p1), entropy(p2))


def fraction_grid(p1, p2, fractions: Sequence[float]) -> List[Tuple[float, float]]:
    """Equal budget pairs at the given fractions of :func:`min_entropy`."""
    h = min_entropy(p1, p2)
    return [(f * h, f * h) for f in fractions]


@dataclass(frozen=True)
class ExperimentConfig:
    p1: Distribution
    p2: Distribution
    w0: Union[str, Distribution] = "uniform"
    eps_grid: Tuple[Tuple[float, float], ...] = ()
    grid: GridSpec = field(default_factory=GridSpec)
    log_base: str = "natural"
    output_path: Optional[str] = None

    def __post_init__(self):
        p1 = as_distribution(self.p1, "p1", min_size=2)
        p2 = as_distribution(self.p2, "p2", min_size=2)
        if len(p1) != len(p2):
            raise ValidationError("p2", f"length {len(p2)} does not match p1 (length {len(p1)})")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)
        if not isinstance(self.w0, str):
            object.__setattr__(self, "w0", as_distribution(self.w0, "w0", min_size=2))
        elif self.w0 != "uniform":
            raise ValidationError("w0", f"expected 'uniform' or a distribution, got {self.w0!r}")
        if self.log_base not in ("natural", "bits"):
            raise ValidationError("log_base", f"expected 'natural' or 'bits', got {self.log_base!r}")
        cap = min_entropy(p1, p2)
        pairs = []
        for pair in self.eps_grid:
            e1, e2 = (float(x) for x in pair)
            for name, e in (("eps_grid", e1), ("eps_grid", e2)):
                if not math.isfinite(e) or e < 0 or e > cap * (1 + 1e-12):
                    raise ValidationError(name, f"budget {e} outside [0, min entropy = {cap:.6g}]")
            pairs.append((e1, e2))
        object.__setattr__(self, "eps_grid", tuple(pairs))

    @property
    def scale(self) -> float:
        return BITS if self.log_base == "bits" else 1.0

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        """Build from the JSON layout; ``eps_grid`` may be a list of pairs or ``{"fractions": [...]}``."""
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValidationError(sorted(unknown)[0], "unknown config field")
        for name in ("p1", "p2"):
            if name not in d:
                raise ValidationError(name, "missing from config")
        p1 = as_distribution(d["p1"], "p1", min_size=2)
        p2 = as_distribution(d["p2"], "p2", min_size=2)
        grid = d.get("eps_grid", [])
        if isinstance(grid, dict):
            if "fractions" in grid:
                pairs = fraction_grid(p1, p2, grid["fractions"])
            elif "pairs" in grid:
                pairs = grid["pairs"]
            else:
                raise ValidationError("eps_grid", "expected 'fractions' or 'pairs'")
        else:
            pairs = grid
        for pair in pairs:
            if len(pair) != 2:
                raise ValidationError("eps_grid", f"expected budget pairs, got {pair!r}")
        gs = d.get("grid", {})
        if isinstance(gs, (int, float)):
            gs = {"step": gs}
        try:
            gridspec = GridSpec(**gs)
        except TypeError as exc:
            raise ValidationError("grid", str(exc)) from None
        return cls(
            p1=p1,
            p2=p2,
            w0=d.get("w0", "uniform"),
            eps_grid=tuple(tuple(p) for p in pairs),
            grid=gridspec,
            log_base=d.get("log_base", "natural"),
            output_path=d.get("output_path"),
        )

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ValidationError("config", f"cannot read {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError("config", f"{path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "p1": self.p1.probs.tolist(),
            "p2": self.p2.probs.tolist(),
            "w0": self.w0 if isinstance(self.w0, str) else self.w0.probs.tolist(),
            "eps_grid": [list(p) for p in self.eps_grid],
            "grid": {
                "step": self.grid.step,
                "feasibility_tol": self.grid.feasibility_tol,
                "refine": self.grid.refine,
            },
            "log_base": self.log_base,
            "output_path": self.output_path,
        }


@dataclass(frozen=True)
class TradeoffPoint:
    """One comparison, all information quantities in nats."""

    eps_target: float
    eps_effective: float
    utility_eit: float
    utility_oracle: float
    leak1: float
    leak2: float
    case_tag: str
    repair_scale: float

    @property
    def relative_gap(self) -> float:
        if self.utility_oracle <= 0:
            return 0.0
        return (self.utility_oracle - self.utility_eit) / self.utility_oracle

    def as_row(self, scale: float = 1.0) -> list:
        info = (self.eps_target, self.eps_effective, self.utility_eit,
                self.utility_oracle, self.leak1, self.leak2)
        return [_fmt(x * scale) for x in info] + [self.case_tag, _fmt(self.repair_scale)]

    def to_dict(self, scale: float = 1.0) -> dict:
        row = self.as_row(scale)
        return {k: (v if k == "case_tag" else float(v)) for k, v in zip(CSV_COLUMNS, row)}


def _fmt(x: float) -> str:
    return f"{x:.12g}"


@dataclass(frozen=True)
class TradeoffCurve:
    points: Tuple[TradeoffPoint, ...]
    config: ExperimentConfig

    def __post_init__(self):
        t = [p.eps_target for p in self.points]
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("points must be strictly increasing in eps_target")

    def to_csv(self, scale: Optional[float] = None) -> str:
        scale = self.config.scale if scale is None else scale
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for p in self.points:
            w.writerow(p.as_row(scale))
        return buf.getvalue()

    def to_svg(self, scale: Optional[float] = None, width: int = 640, height: int = 420) -> str:
        scale = self.config.scale if scale is None else scale
        unit = "bits" if scale != 1.0 else "nats"
        return _svg_chart(
            [p.eps_effective * scale for p in self.points],
            [
                ("closed form", "#1f77b4", [p.utility_eit * scale for p in self.points]),
                ("oracle", "#d62728", [p.utility_oracle * scale for p in self.points]),
            ],
            xlabel=f"effective leakage ({unit})",
            ylabel=f"utility D(p1W||p2W) ({unit})",
            width=width,
            height=height,
        )


def _svg_chart(xs, series, xlabel, ylabel, width, height) -> str:
    ml, mr, mt, mb = 70, 20, 20, 50
    pw, ph = width - ml - mr, height - mt - mb
    ys = [y for _, _, vals in series for y in vals]
    x1 = max(xs, default=1.0) or 1.0
    y1 = max(ys, default=1.0) or 1.0

    def sx(x):
        return ml + pw * x / x1

    def sy(y):
        return mt + ph * (1 - y / y1)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{ml + pw / 2}" y="{height - 12}" text-anchor="middle" font-size="13">{xlabel}</text>',
        f'<text x="16" y="{mt + ph / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {mt + ph / 2})">{ylabel}</text>',
        f'<text x="{ml}" y="{height - 32}" font-size="11" text-anchor="middle">0</text>',
        f'<text x="{ml + pw}" y="{height - 32}" font-size="11" text-anchor="middle">{x1:.3g}</text>',
        f'<text x="{ml - 6}" y="{mt + 4}" font-size="11" text-anchor="end">{y1:.3g}</text>',
    ]
    for k, (name, color, vals) in enumerate(series):
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, vals))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        out.append(
            f'<text x="{ml + 10}" y="{mt + 18 + 16 * k}" font-size="12" fill="{color}">{name}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def compare_at(config: ExperimentConfig, eps1: float, eps2: float) -> TradeoffPoint:
    """Closed-form mechanism at ``(eps1, eps2)`` versus the oracle at its effective leakage."""
    sol = eit.solve(config.p1, config.p2, eps1, eps2, w0=config.w0)
    leak1, leak2 = sol.exact_leak1, sol.exact_leak2
    eff = max(leak1, leak2)
    m = len(config.p1)
    if m == 2:
        res = oracle_solve_binary(config.p1, config.p2, eff, eff, config.grid)
    else:
        res = oracle_solve_general(config.p1, config.p2, eff, eff, config.grid, m)
    return TradeoffPoint(
        eps_target=max(eps1, eps2),
        eps_effective=eff,
        utility_eit=sol.exact_utility,
        utility_oracle=res.utility,
        leak1=leak1,
        leak2=leak2,
        case_tag=sol.case.tag.value,
        repair_scale=sol.repair_scale,
    )


def worker_count() -> int:
    """Sweep parallelism from ``PRIVMECH_THREADS`` (unset or 0 means one per CPU)."""
    raw = os.environ.get("PRIVMECH_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError("PRIVMECH_THREADS", f"expected an integer, got {raw!r}") from None
    if n < 0:
        raise ValidationError("PRIVMECH_THREADS", "must be >= 0")
    return n or (os.cpu_count() or 1)


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def sweep(config: ExperimentConfig, svg_path=None) -> TradeoffCurve:
    """Run :func:`compare_at` over the budget grid and write CSV (and optionally SVG).

    Points are ordered by target budget regardless of how they were
    scheduled; repeated runs produce byte-identical files.
    """
    pairs = sorted(config.eps_grid, key=lambda p: (max(p), p))
    targets = [max(p) for p in pairs]
    if any(b <= a for a, b in zip(targets, targets[1:])):
        raise ValidationError("eps_grid", "budget targets must be distinct")
    workers = min(worker_count(), max(len(pairs), 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(lambda p: compare_at(config, *p), pairs))
    else:
        points = [compare_at(config, *p) for p in pairs]
    curve = TradeoffCurve(tuple(points), config)
    if config.output_path:
        _write(config.output_path, curve.to_csv())
    if svg_path:
        _write(svg_path, curve.to_svg())
    return curve
