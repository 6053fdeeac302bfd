# %% [markdown]
# # Tradeoff curves against the exhaustive oracle
#
# For each built-in source pair we sweep budgets up to a fifth of the
# smaller source entropy. At every point the closed-form channel is built
# first, its larger exact leakage becomes the common budget for the oracle,
# and both utilities are recorded. CSV and SVG files land in `out/`.

# %%
from pathlib import Path

import numpy as np

from privmech.harness import PRESETS, ExperimentConfig, fraction_grid, sweep

out = Path(__file__).resolve().parent / "out"
out.mkdir(exist_ok=True)

# %%
for name, (p1, p2) in PRESETS.items():
    cfg = ExperimentConfig(
        p1=p1,
        p2=p2,
        eps_grid=tuple(fraction_grid(p1, p2, np.linspace(0.01, 0.2, 10))),
        output_path=str(out / f"{name}.csv"),
    )
    curve = sweep(cfg, svg_path=out / f"{name}.svg")
    gaps = [p.relative_gap for p in curve.points]
    print(f"{name:18s} gap min {min(gaps):7.2%}  max {max(gaps):7.2%}")

# %% [markdown]
# The mirrored and near-uniform pairs sit essentially on the oracle. The two
# skewed pairs do not, even at tiny budgets: channels that send one output
# letter almost deterministically for one input are linear in the leakage
# budget rather than quadratic, and beat any small symmetric perturbation
# by a constant factor.
