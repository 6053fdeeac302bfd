"""Exhaustive-search ground truth for the exact (non-convex) tradeoff problem.

Only tiny alphabets are tractable. The binary solver scans the full
``(a, b)`` grid of channels ``[[a, 1-a], [b, 1-b]]`` and then polishes the
result on the boundary of the feasible set, where the optimum of a convex
objective over a convex region must lie.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import rel_entr, xlogy

from .infocore import Mechanism, ValidationError, as_distribution, as_mechanism, mutual_information

CHUNK_ROWS = 64
POLISH_ITERATIONS = 80
MIN_GENERAL_STEP = 0.02


@dataclass(frozen=True)
class GridSpec:
    """Grid resolution and feasibility slack for the exhaustive search.

    ``refine`` enables the boundary polish of the binary solver; switch it
    off to get the plain grid optimum.
    """

    step: float = 1e-3
    feasibility_tol: float = 1e-12
    refine: bool = True

    def __post_init__(self):
        if not 0 < self.step <= 0.1:
            raise ValidationError("grid.step", f"must lie in (0, 0.1], got {self.step}")
        n = 1.0 / self.step
        if abs(n - round(n)) > 1e-9 * n:
            raise ValidationError("grid.step", f"1/step must be an integer, got 1/{self.step} = {n}")
        if self.feasibility_tol < 0:
            raise ValidationError("grid.feasibility_tol", "must be nonnegative")

    @property
    def points(self) -> int:
        return int(round(1.0 / self.step))


class OracleResult(NamedTuple):
    mechanism: Mechanism
    utility: float


def is_feasible(W, p1, p2, eps1: float, eps2: float, tol: float = 1e-12) -> bool:
    """True iff both exact leakages are within their budgets (closed constraint set)."""
    W = as_mechanism(W)
    return (
        mutual_information(p1, W) <= eps1 + tol
        and mutual_information(p2, W) <= eps2 + tol
    )


def grid_allowance(p1, p2, step: float) -> float:
    """Utility slack a grid of resolution ``step`` may lose: ``4 max|log(p1/p2)| step``."""
    p1 = as_distribution(p1, "p1").probs
    p2 = as_distribution(p2, "p2").probs
    with np.errstate(divide="ignore"):
        c = 4.0 * float(np.max(np.abs(np.log(p1) - np.log(p2))))
    return c * step


def _binary_parts(p, a, b):
    # exact leakage of [[a, 1-a], [b, 1-b]] under p, elementwise over a, b
    q = p[0] * a + p[1] * b
    return (
        p[0] * (rel_entr(a, q) + rel_entr(1 - a, 1 - q))
        + p[1] * (rel_entr(b, q) + rel_entr(1 - b, 1 - q))
    )


def _binary_utility(p1, p2, a, b):
    q1 = p1[0] * a + p1[1] * b
    q2 = p2[0] * a + p2[1] * b
    return rel_entr(q1, q2) + rel_entr(1 - q1, 1 - q2)


def _binary_inputs(p1, p2, eps1, eps2):
    p1 = as_distribution(p1, "p1").probs
    p2 = as_distribution(p2, "p2").probs
    if p1.size != 2 or p2.size != 2:
        raise ValidationError("p1", "the binary oracle needs M = N = 2")
    for name, e in (("eps1", eps1), ("eps2", eps2)):
        if not math.isfinite(e) or e < 0:
            raise ValidationError(name, f"budget must be a finite nonnegative number, got {e}")
    return p1, p2


def _interval_ends(p1, p2, eps1, eps2, a, tol):
    """Feasible b-interval ends for each a; leakage is convex in b so the set is an interval."""

    def slack(b):
        return np.maximum(_binary_parts(p1, a, b) - eps1, _binary_parts(p2, a, b) - eps2)

    ends = []
    for edge in (1.0, 0.0):
        inside = a.copy()
        outside = np.full_like(a, edge)
        done = slack(outside) <= tol
        for _ in range(POLISH_ITERATIONS):
            mid = 0.5 * (inside + outside)
            ok = slack(mid) <= tol
            inside = np.where(ok, mid, inside)
            outside = np.where(ok, outside, mid)
        ends.append(np.where(done, edge, inside))
    return ends


def _boundary_profile(p1, p2, eps1, eps2, a, tol):
    """Best utility over b for each a, with the maximizing b."""
    hi, lo = _interval_ends(p1, p2, eps1, eps2, a, tol)
    u_hi = _binary_utility(p1, p2, a, hi)
    u_lo = _binary_utility(p1, p2, a, lo)
    take_lo = u_lo > u_hi
    return np.where(take_lo, u_lo, u_hi), np.where(take_lo, lo, hi)


def _binary_mechanism(a: float, b: float) -> Mechanism:
    return Mechanism(np.array([[a, 1.0 - a], [b, 1.0 - b]]))


def oracle_solve_binary(p1, p2, eps1: float, eps2: float, grid: GridSpec = GridSpec()) -> OracleResult:
    """Best binary channel under both exact leakage budgets.

    Grid ties go to the lexicographically smallest ``(a, b)``. With
    ``grid.refine`` the grid optimum is then improved by an exact scan of
    the feasible-set boundary over the same ``a`` grid, followed by a
    bounded 1-D search for ``a`` between the neighbours of the best one.
    """
    p1, p2 = _binary_inputs(p1, p2, eps1, eps2)
    tol = grid.feasibility_tol
    n = grid.points
    g = np.arange(n + 1) / n

    best_u, best_ab = -np.inf, (0.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        for start in range(0, n + 1, CHUNK_ROWS):
            a = g[start:start + CHUNK_ROWS, None]
            b = g[None, :]
            ok = (_binary_parts(p1, a, b) <= eps1 + tol) & (_binary_parts(p2, a, b) <= eps2 + tol)
            U = np.where(ok, _binary_utility(p1, p2, a, b), -np.inf)
            U = np.where(np.isnan(U), -np.inf, U)
            k = int(np.argmax(U))
            i, j = divmod(k, U.shape[1])
            if U[i, j] > best_u:
                best_u, best_ab = float(U[i, j]), (float(a[i, 0]), float(g[j]))

        if grid.refine:
            # the polish stays exactly inside the budgets; only grid points get the slack
            U, B = _boundary_profile(p1, p2, eps1, eps2, g.copy(), 0.0)
            k = int(np.argmax(U))
            if U[k] > best_u:
                best_u, best_ab = float(U[k]), (float(g[k]), float(B[k]))

            def neg(x):
                u, _ = _boundary_profile(p1, p2, eps1, eps2, np.array([x]), 0.0)
                return -float(u[0])

            lo, hi = g[max(k - 1, 0)], g[min(k + 1, n)]
            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
            if -res.fun > best_u:
                x = float(res.x)
                u, b = _boundary_profile(p1, p2, eps1, eps2, np.array([x]), 0.0)
                best_u, best_ab = float(u[0]), (x, float(b[0]))

    return OracleResult(_binary_mechanism(*best_ab), best_u)


def simplex_lattice(m: int, k: int) -> np.ndarray:
    """All length-``m`` vectors with entries in ``{0, 1/k, ..., 1}`` summing to 1, lexicographic."""
    pts = [c for c in itertools.product(range(k + 1), repeat=m - 1) if sum(c) <= k]
    return np.array([list(c) + [k - sum(c)] for c in pts], dtype=float) / k


def oracle_solve_general(p1, p2, eps1: float, eps2: float, grid: GridSpec, m: int) -> OracleResult:
    """Plain grid search over all ``m x m`` channels with lattice rows (m <= 3).

    Cost grows like ``(1/step)^(m(m-1))``, so only coarse grids are accepted.
    """
    if m not in (2, 3):
        raise ValidationError("m", f"exhaustive search is limited to m <= 3, got {m}")
    if grid.step < MIN_GENERAL_STEP:
        raise ValidationError("grid.step", f"must be >= {MIN_GENERAL_STEP} for the general search")
    p1 = as_distribution(p1, "p1").probs
    p2 = as_distribution(p2, "p2").probs
    if p1.size != m or p2.size != m:
        raise ValidationError("p1", f"sources must have {m} letters")
    tol = grid.feasibility_tol

    rows = simplex_lattice(m, grid.points)
    R = len(rows)
    row_h = -xlogy(rows, rows).sum(axis=1)
    # index tuples for the remaining m-1 rows, lexicographic
    tail = np.array(list(itertools.product(range(R), repeat=m - 1)), dtype=np.intp)

    # the tail rows' share of q and of the conditional entropy does not depend on row 0
    tail_q = [np.einsum("k,ckj->cj", p[1:], rows[tail]) for p in (p1, p2)]
    tail_h = [row_h[tail] @ p[1:] for p in (p1, p2)]

    def q_and_leak(k, p, r0):
        q = p[0] * rows[r0] + tail_q[k]
        return q, -xlogy(q, q).sum(axis=1) - p[0] * row_h[r0] - tail_h[k]

    best_u, best_idx = -np.inf, None
    with np.errstate(divide="ignore", invalid="ignore"):
        for r0 in range(R):
            q1, l1 = q_and_leak(0, p1, r0)
            q2, l2 = q_and_leak(1, p2, r0)
            ok = (l1 <= eps1 + tol) & (l2 <= eps2 + tol)
            U = np.where(ok, rel_entr(q1, q2).sum(axis=1), -np.inf)
            U = np.where(np.isnan(U), -np.inf, U)
            k = int(np.argmax(U))
            if U[k] > best_u:
                best_u, best_idx = float(U[k]), (r0, *tail[k])
    return OracleResult(Mechanism(rows[list(best_idx)]), best_u)
