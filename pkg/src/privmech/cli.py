"""Command-line front end: ``privmech {solve,oracle,sweep,compare}``.

Budgets are always read in nats; ``--bits`` only rescales printed and
written information quantities.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

from . import eit
from .harness import BITS, PRESETS, ExperimentConfig, compare_at, fraction_grid, sweep
from .infocore import ValidationError, check_simplex
from .oracle import GridSpec, oracle_solve_binary, oracle_solve_general

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_CONVERGENCE = 3


def _vector(text: str, field: str):
    try:
        values = [float(x) for x in text.split(",")]
    except ValueError:
        raise ValidationError(field, f"expected comma-separated numbers, got {text!r}") from None
    return check_simplex(values, field)


def _budget(text: Optional[str], field: str) -> Optional[float]:
    if text is None:
        return None
    try:
        e = float(text)
    except ValueError:
        raise ValidationError(field, f"expected a number, got {text!r}") from None
    if not math.isfinite(e) or e < 0:
        raise ValidationError(field, f"budget must be finite and nonnegative, got {e}")
    return e


def _fractions(text: str):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ValidationError("fractions", f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config; explicit flags override it")
    common.add_argument("--preset", choices=sorted(PRESETS), help="built-in source pair")
    common.add_argument("--p1", help="first source, e.g. 0.05,0.95")
    common.add_argument("--p2", help="second source")
    common.add_argument("--eps1", help="leakage budget for p1 (nats)")
    common.add_argument("--eps2", help="leakage budget for p2 (nats, defaults to eps1)")
    common.add_argument("--w0", help="perfect-privacy output distribution: uniform or a,b[,c]")
    common.add_argument("--grid-step", type=float, help="oracle grid step")
    common.add_argument("--bits", action="store_true", help="report information in bits")
    common.add_argument("--out", help="output file (stdout when omitted)")

    parser = argparse.ArgumentParser(
        prog="privmech",
        description="Privacy mechanisms maximizing a hypothesis-testing error exponent under leakage budgets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="closed-form mechanism (JSON)")
    sub.add_parser("oracle", parents=[common], help="exhaustive grid optimum (JSON)")
    sub.add_parser("compare", parents=[common], help="one closed-form vs oracle point (JSON)")
    sw = sub.add_parser("sweep", parents=[common], help="tradeoff curve (CSV)")
    sw.add_argument("--fractions", help="budgets as fractions of min entropy, e.g. 0.01,0.05,0.1")
    sw.add_argument("--points", type=int, help="evenly spaced fractions up to --max-fraction")
    sw.add_argument("--max-fraction", type=float, default=0.2)
    sw.add_argument("--svg", help="also write an SVG chart to this path")
    return parser


def _config(args) -> ExperimentConfig:
    base = {}
    if args.config:
        base = ExperimentConfig.from_json(args.config).to_dict()
    if args.preset:
        base["p1"], base["p2"] = (list(p) for p in PRESETS[args.preset])
    if args.p1 is not None:
        base["p1"] = _vector(args.p1, "p1")
    if args.p2 is not None:
        base["p2"] = _vector(args.p2, "p2")
    for name in ("p1", "p2"):
        if name not in base:
            raise ValidationError(name, "required (use --p1/--p2, --preset or --config)")
    if args.w0 is not None:
        base["w0"] = "uniform" if args.w0 == "uniform" else _vector(args.w0, "w0")
    grid = dict(base.get("grid", {}))
    if args.grid_step is not None:
        grid["step"] = args.grid_step
    base["grid"] = grid
    if args.bits:
        base["log_base"] = "bits"
    if args.out is not None:
        base["output_path"] = args.out
    if getattr(args, "fractions", None) or getattr(args, "points", None):
        if args.fractions:
            fr = _fractions(args.fractions)
        else:
            if args.points < 0:
                raise ValidationError("points", "must be nonnegative")
            fr = [args.max_fraction * (k + 1) / args.points for k in range(args.points)]
        base["eps_grid"] = fraction_grid(base["p1"], base["p2"], fr)
    return ExperimentConfig.from_dict(base)


def _budgets(args, config: ExperimentConfig):
    eps1 = _budget(args.eps1, "eps1")
    eps2 = _budget(args.eps2, "eps2")
    if eps1 is None and eps2 is None and len(config.eps_grid) == 1:
        return config.eps_grid[0]
    if eps1 is None:
        raise ValidationError("eps1", "required")
    return eps1, eps1 if eps2 is None else eps2


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(args) -> None:
    config = _config(args)
    scale = config.scale
    if args.command == "sweep":
        out = config.output_path
        curve = sweep(config, svg_path=args.svg)
        if not out:
            sys.stdout.write(curve.to_csv())
        return
    eps1, eps2 = _budgets(args, config)
    if args.command == "solve":
        doc = eit.solve(config.p1, config.p2, eps1, eps2, w0=config.w0).to_dict(scale)
    elif args.command == "oracle":
        m = len(config.p1)
        if m == 2:
            res = oracle_solve_binary(config.p1, config.p2, eps1, eps2, config.grid)
        else:
            res = oracle_solve_general(config.p1, config.p2, eps1, eps2, config.grid, m)
        doc = {
            "mechanism": res.mechanism.rows.tolist(),
            "utility": res.utility * scale,
            "eps1": eps1 * scale,
            "eps2": eps2 * scale,
            "grid_step": config.grid.step,
        }
    else:
        doc = compare_at(config, eps1, eps2).to_dict(scale)
    _emit(json.dumps(doc, indent=2) + "\n", config.output_path)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _run(args)
    except ValidationError as exc:
        print(f"privmech: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except eit.ConvergenceError as exc:
        print(f"privmech: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except OSError as exc:
        print(f"privmech: {exc}", file=sys.stderr)
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
