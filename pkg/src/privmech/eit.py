"""Closed-form privacy mechanisms for the local (chi-squared) tradeoff problem.

Around a perfect-privacy channel ``W0`` (every row equal to ``w0``) the
utility and both leakages become quadratic in the perturbation. The optimal
perturbation is rank one, ``Theta = alpha^T v [sqrt(w0)]``, where ``alpha``
solves a two-constraint QCQP in closed form (one or both constraints
active) and ``v`` is any unit vector orthogonal to ``sqrt(w0)``.

The pipeline in :func:`solve` is::

    principal_direction -> select_active_case -> alpha -> orthogonal_direction
        -> assemble_mechanism -> repair_feasibility
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple, Union

import numpy as np

from .infocore import (
    Distribution,
    Mechanism,
    Perturbation,
    ValidationError,
    as_distribution,
    check_simplex,
    is_row_stochastic,
    kl_divergence,
    mutual_information,
)

BOUNDARY_RTOL = 1e-12
REPAIR_ITERATIONS = 32


class ConvergenceError(RuntimeError):
    """The dual-variable root finder did not reach its tolerance."""


class CaseTag(str, enum.Enum):
    FIRST_ONLY = "FirstOnly"
    SECOND_ONLY = "SecondOnly"
    BOTH = "Both"
    # zero budget or identical sources: nothing to optimize
    INACTIVE = "Inactive"


@dataclass(frozen=True)
class PrincipalDirection:
    """Top eigenpair of ``(p1 - p2)^T (p1 - p2)``."""

    lambda_star: float
    v_star: np.ndarray
    degenerate: bool = False


@dataclass(frozen=True)
class ActiveCase:
    tag: CaseTag
    eta1: float
    eta2: float

    def __post_init__(self):
        tag, e1, e2 = self.tag, self.eta1, self.eta2
        ok = {
            CaseTag.FIRST_ONLY: e1 > 0 and e2 == 0,
            CaseTag.SECOND_ONLY: e2 > 0 and e1 == 0,
            CaseTag.BOTH: e1 > 0 and e2 > 0,
            CaseTag.INACTIVE: e1 == 0 and e2 == 0,
        }[CaseTag(tag)]
        if not ok:
            raise ValueError(f"inconsistent dual variables for {tag}: ({e1}, {e2})")


@dataclass(frozen=True)
class EitSolution:
    """Everything :func:`solve` computed, including exact evaluations of the result.

    ``alpha`` is the QCQP optimum before repair; ``mechanism`` is
    ``W0 + repair_scale * alpha^T v [sqrt(w0)]``.
    """

    w0: Distribution
    alpha: np.ndarray
    v: np.ndarray
    case: ActiveCase
    mechanism: Mechanism
    repair_scale: float
    exact_utility: float
    exact_leak1: float
    exact_leak2: float
    approx_utility: float
    direction: PrincipalDirection
    eps1: float
    eps2: float
    sign: int = 1

    @property
    def degenerate(self) -> bool:
        return self.direction.degenerate

    def to_dict(self, scale: float = 1.0) -> dict:
        """JSON-ready summary. ``scale`` multiplies information quantities (use 1/ln 2 for bits)."""
        return {
            "case": self.case.tag.value,
            "eta1": self.case.eta1,
            "eta2": self.case.eta2,
            "lambda_star": self.direction.lambda_star,
            "v_star": self.direction.v_star.tolist(),
            "degenerate": self.degenerate,
            "w0": self.w0.probs.tolist(),
            "alpha": self.alpha.tolist(),
            "v": self.v.tolist(),
            "sign": self.sign,
            "mechanism": self.mechanism.rows.tolist(),
            "repair_scale": self.repair_scale,
            "eps1": self.eps1 * scale,
            "eps2": self.eps2 * scale,
            "exact_utility": self.exact_utility * scale,
            "exact_leak1": self.exact_leak1 * scale,
            "exact_leak2": self.exact_leak2 * scale,
            "approx_utility": self.approx_utility * scale,
        }


class Assembly(NamedTuple):
    matrix: np.ndarray
    perturbation: Perturbation
    in_range: bool


def _source(p, name: str) -> np.ndarray:
    a = as_distribution(p, name, min_size=2).probs
    if np.any(a <= 0):
        raise ValidationError(name, "must be strictly positive (interior of the simplex)")
    return a


def _budget(eps, name: str) -> float:
    eps = float(eps)
    if not math.isfinite(eps) or eps < 0:
        raise ValidationError(name, f"budget must be a finite nonnegative number, got {eps}")
    return eps


def _base(w0, m: int) -> Distribution:
    if isinstance(w0, str):
        if w0 != "uniform":
            raise ValidationError("w0", f"expected 'uniform' or a distribution, got {w0!r}")
        return Distribution.uniform(m)
    w = as_distribution(w0, "w0", min_size=2)
    if not w.strictly_positive:
        raise ValidationError("w0", "must be strictly positive; drop zero columns up front")
    if len(w) > m:
        raise ValidationError("w0", f"output alphabet ({len(w)}) larger than input ({m})")
    return w


def perfect_privacy_mechanism(w0, m: int) -> Mechanism:
    """The zero-leakage channel: ``m`` copies of ``w0`` stacked as rows."""
    w = check_simplex(w0, "w0", min_size=1)
    if m < w.size:
        raise ValidationError("m", f"need m >= {w.size}, got {m}")
    return Mechanism(np.tile(w, (m, 1)))


def principal_direction(p1, p2) -> PrincipalDirection:
    p1 = as_distribution(p1, "p1").probs
    p2 = as_distribution(p2, "p2").probs
    if p1.shape != p2.shape:
        raise ValidationError("p2", "length does not match p1")
    d = p1 - p2
    lam = float(d @ d)
    if lam == 0.0:
        return PrincipalDirection(0.0, np.zeros_like(d), degenerate=True)
    return PrincipalDirection(lam, d / math.sqrt(lam))


def activity_ratios(p1, p2, direction: PrincipalDirection) -> Tuple[float, float]:
    """Left-hand sides of the single-constraint activity conditions.

    The first constraint alone is active iff ``ratios[0] < eps2 / eps1``;
    the second alone iff ``ratios[1] < eps1 / eps2``.
    """
    p1 = _source(p1, "p1")
    p2 = _source(p2, "p2")
    v2 = direction.v_star**2
    r1 = (v2 * p2 / p1**2).sum() / (v2 / p1).sum()
    r2 = (v2 * p1 / p2**2).sum() / (v2 / p2).sum()
    return float(r1), float(r2)


def select_active_case(p1, p2, eps1: float, eps2: float, direction: PrincipalDirection) -> CaseTag:
    """Which leakage constraints bind at the local optimum.

    Exactly on a boundary the single-constraint branch is returned: its
    solution meets both constraints with equality there and the other
    multiplier is zero.
    """
    if direction.degenerate or direction.lambda_star <= 0:
        raise ValidationError("p2", "identical sources have no principal direction")
    if eps1 <= 0 or eps2 <= 0:
        raise ValidationError("eps", "activity is only defined for positive budgets")
    r1, r2 = activity_ratios(p1, p2, direction)
    t1, t2 = eps2 / eps1, eps1 / eps2
    if r1 < t1 or abs(r1 - t1) <= BOUNDARY_RTOL * max(1.0, t1):
        return CaseTag.FIRST_ONLY
    if r2 < t2 or abs(r2 - t2) <= BOUNDARY_RTOL * max(1.0, t2):
        return CaseTag.SECOND_ONLY
    return CaseTag.BOTH


def alpha_single_constraint(which: int, eps: float, p_active, direction: PrincipalDirection) -> np.ndarray:
    """Optimal ``alpha`` when only constraint ``which`` binds (positive-sign representative)."""
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    p = _source(p_active, f"p{which}")
    eps = _budget(eps, f"eps{which}")
    u = direction.v_star / p
    q = float(direction.v_star @ u)
    if q <= 0:
        return np.zeros_like(p)
    return math.sqrt(2.0 * eps / q) * u


def single_constraint_eta(eps: float, p_active, direction: PrincipalDirection) -> float:
    """Multiplier of the lone active constraint."""
    p = _source(p_active, "p")
    q = float((direction.v_star**2 / p).sum())
    return math.sqrt(direction.lambda_star**2 * q / (8.0 * eps))


def eta_lhs(eta1: float, eta2: float, p1: np.ndarray, p2: np.ndarray, v_star: np.ndarray) -> np.ndarray:
    d = eta1 * p1 + eta2 * p2
    w = v_star**2 / d**2
    return np.array([p1 @ w, p2 @ w])


def eta_residuals(eta1, eta2, p1, p2, eps1, eps2, direction: PrincipalDirection) -> np.ndarray:
    """Absolute residuals of the two stationarity equations for the multipliers."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    rhs = 8.0 * np.array([eps1, eps2]) / direction.lambda_star**2
    return eta_lhs(eta1, eta2, p1, p2, direction.v_star) - rhs


def _newton_log_eta(p1, p2, v, rhs, x0, max_iter=100):
    v2 = v**2

    def F(x):
        e1, e2 = np.exp(x)
        return np.log(eta_lhs(e1, e2, p1, p2, v)) - np.log(rhs)

    x = np.array(x0, dtype=float)
    f = F(x)
    for _ in range(max_iter):
        if np.max(np.abs(f)) < 1e-15:
            break
        e = np.exp(x)
        d = e[0] * p1 + e[1] * p2
        L = eta_lhs(e[0], e[1], p1, p2, v)
        P = np.stack([p1, p2])
        # d log L_k / d log eta_j
        J = -2.0 * (P * v2 / d**3) @ (P.T * e) / L[:, None]
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            return None
        lam, fnorm = 1.0, np.max(np.abs(f))
        while lam > 1e-10:
            x_new = x + lam * step
            f_new = F(x_new)
            if np.all(np.isfinite(f_new)) and np.max(np.abs(f_new)) < fnorm:
                break
            lam *= 0.5
        else:
            return None
        x, f = x_new, f_new
    return np.exp(x)


def _bisect_ratio(p1, p2, v, rhs, iterations=200):
    # L1/L2 is increasing in s = log(eta2/eta1) and depends on s alone
    target = math.log(rhs[0] / rhs[1])

    def g(s):
        L = eta_lhs(1.0, math.exp(s), p1, p2, v)
        return math.log(L[0] / L[1]) - target

    lo, hi = -60.0, 60.0
    if not g(lo) < 0 < g(hi):
        return None
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    L1 = eta_lhs(1.0, math.exp(s), p1, p2, v)[0]
    e1 = math.sqrt(L1 / rhs[0])
    return np.array([e1, e1 * math.exp(s)])


def solve_eta(p1, p2, eps1: float, eps2: float, direction: PrincipalDirection, tol: float = 1e-10) -> Tuple[float, float]:
    """Positive multipliers ``(eta1, eta2)`` for the both-active case.

    Damped Newton in log coordinates from the symmetric closed form, with a
    bracketing fallback on ``log(eta2 / eta1)``. Residuals are checked
    against ``tol`` scaled by ``max(1, rhs)``.
    """
    if direction.degenerate or direction.lambda_star <= 0:
        raise ValidationError("p2", "identical sources have no principal direction")
    p1 = _source(p1, "p1")
    p2 = _source(p2, "p2")
    eps1 = _budget(eps1, "eps1")
    eps2 = _budget(eps2, "eps2")
    if eps1 <= 0 or eps2 <= 0:
        raise ValidationError("eps", "both budgets must be positive")
    v = direction.v_star
    lam = direction.lambda_star
    rhs = 8.0 * np.array([eps1, eps2]) / lam**2

    pbar = 0.5 * (p1 + p2)
    ebar = 0.5 * (eps1 + eps2)
    eta0 = math.sqrt(lam**2 * float(v**2 @ pbar) / (8.0 * ebar))

    def good(eta):
        if eta is None or not np.all(np.isfinite(eta)) or np.any(eta <= 0):
            return False
        res = eta_residuals(eta[0], eta[1], p1, p2, eps1, eps2, direction)
        return bool(np.all(np.abs(res) <= tol * np.maximum(1.0, rhs)))

    eta = _newton_log_eta(p1, p2, v, rhs, np.log([eta0, eta0]))
    if not good(eta):
        eta = _bisect_ratio(p1, p2, v, rhs)
    if not good(eta):
        raise ConvergenceError(
            f"no positive multipliers found for eps=({eps1}, {eps2}); "
            "check that both constraints are really active"
        )
    return float(eta[0]), float(eta[1])


def alpha_both_constraints(direction: PrincipalDirection, p1, p2, eta1: float, eta2: float) -> np.ndarray:
    """Stationary point ``(lambda*/2) v* (eta1 [p1] + eta2 [p2])^-1``."""
    if eta1 <= 0 or eta2 <= 0:
        raise ValidationError("eta", "both multipliers must be positive")
    p1 = _source(p1, "p1")
    p2 = _source(p2, "p2")
    return 0.5 * direction.lambda_star * direction.v_star / (eta1 * p1 + eta2 * p2)


def _householder_complement(u: np.ndarray) -> np.ndarray:
    e1 = np.zeros_like(u)
    e1[0] = 1.0
    h = u - e1
    if np.linalg.norm(h) < 1e-8:
        h = u + e1
    H = np.eye(u.size) - 2.0 * np.outer(h, h) / (h @ h)
    return H[:, 1]


def orthogonal_direction(w0, direction: PrincipalDirection) -> np.ndarray:
    """Unit vector orthogonal to ``sqrt(w0)``, as close to ``v*`` as possible.

    Falls back to the first Householder complement vector when ``v*`` is
    (nearly) parallel to ``sqrt(w0)``, zero, or of a different length.
    """
    w = as_distribution(w0, "w0").probs
    if w.size < 2:
        raise ValidationError("w0", "a one-letter output alphabet has no orthogonal complement")
    if np.any(w <= 0):
        raise ValidationError("w0", "must be strictly positive")
    u = np.sqrt(w)
    u = u / np.linalg.norm(u)
    vs = direction.v_star
    if vs.shape == u.shape and not direction.degenerate:
        v = vs - (vs @ u) * u
        n = np.linalg.norm(v)
        if n >= 1e-9:
            v = v / n
            # one re-orthogonalization pass keeps v.sqrt(w0) at rounding level
            v = v - (v @ u) * u
            return v / np.linalg.norm(v)
    return _householder_complement(u)


def assemble_mechanism(w0, alpha, v) -> Assembly:
    """``W0 + alpha^T v [sqrt(w0)]``; entries outside [0, 1] are flagged, not fixed."""
    w = as_distribution(w0, "w0")
    alpha = np.asarray(alpha, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.shape != w.probs.shape:
        raise ValidationError("v", f"length {v.size} does not match w0 (length {len(w)})")
    if alpha.ndim != 1:
        raise ValidationError("alpha", "expected a vector")
    if abs(np.linalg.norm(v) - 1.0) > 1e-10 or abs(v @ np.sqrt(w.probs)) > 1e-10:
        raise ValidationError("v", "must be a unit vector orthogonal to sqrt(w0)")
    theta = np.outer(alpha, v * np.sqrt(w.probs))
    pert = Perturbation(theta, w, radius=None)
    W = pert.mechanism_matrix()
    return Assembly(W, pert, is_row_stochastic(W))


def _exact_feasible(W, p1, p2, eps1, eps2) -> bool:
    if not is_row_stochastic(W):
        return False
    M = Mechanism(W)
    return mutual_information(p1, M) <= eps1 and mutual_information(p2, M) <= eps2


def repair_feasibility(w0, alpha, v, p1, p2, eps1: float, eps2: float) -> Tuple[Mechanism, float]:
    """Shrink the perturbation along its ray until the channel is stochastic and meets both exact budgets.

    Returns the repaired mechanism and the scale ``t`` in [0, 1]; ``t == 1``
    means no repair was needed.
    """
    asm = assemble_mechanism(w0, alpha, v)
    W0 = asm.perturbation.base.probs[None, :]
    theta = asm.perturbation.deltas
    p1 = as_distribution(p1, "p1")
    p2 = as_distribution(p2, "p2")

    if _exact_feasible(asm.matrix, p1, p2, eps1, eps2):
        return Mechanism(asm.matrix), 1.0
    lo, hi = 0.0, 1.0
    for _ in range(REPAIR_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if _exact_feasible(W0 + mid * theta, p1, p2, eps1, eps2):
            lo = mid
        else:
            hi = mid
    return Mechanism(W0 + lo * theta), lo


def approx_utility(alpha, direction: PrincipalDirection) -> float:
    """Quadratic surrogate of the utility, ``(lambda*/2) (alpha . v*)^2``."""
    return 0.5 * direction.lambda_star * float(np.asarray(alpha) @ direction.v_star) ** 2


def solve(p1, p2, eps1: float, eps2: float, w0: Union[str, Distribution, np.ndarray] = "uniform", tol: float = 1e-10) -> EitSolution:
    """Locally optimal privacy mechanism for leakage budgets ``(eps1, eps2)`` in nats.

    Of the two optimal signs ``+alpha`` and ``-alpha`` the one with the larger
    exact utility after repair is kept; near-ties go to ``+alpha``.
    """
    p1a = _source(p1, "p1")
    p2a = _source(p2, "p2")
    if p1a.shape != p2a.shape:
        raise ValidationError("p2", f"length {p2a.size} does not match p1 (length {p1a.size})")
    eps1 = _budget(eps1, "eps1")
    eps2 = _budget(eps2, "eps2")
    m = p1a.size
    base = _base(w0, m)
    direction = principal_direction(p1a, p2a)
    v = orthogonal_direction(base, direction)

    if direction.degenerate or eps1 == 0 or eps2 == 0:
        W0 = perfect_privacy_mechanism(base.probs, m)
        return EitSolution(
            w0=base,
            alpha=np.zeros(m),
            v=v,
            case=ActiveCase(CaseTag.INACTIVE, 0.0, 0.0),
            mechanism=W0,
            repair_scale=1.0,
            exact_utility=kl_divergence(p1a @ W0.rows, p2a @ W0.rows),
            exact_leak1=mutual_information(p1a, W0),
            exact_leak2=mutual_information(p2a, W0),
            approx_utility=0.0,
            direction=direction,
            eps1=eps1,
            eps2=eps2,
        )

    tag = select_active_case(p1a, p2a, eps1, eps2, direction)
    if tag is CaseTag.FIRST_ONLY:
        alpha = alpha_single_constraint(1, eps1, p1a, direction)
        case = ActiveCase(tag, single_constraint_eta(eps1, p1a, direction), 0.0)
    elif tag is CaseTag.SECOND_ONLY:
        alpha = alpha_single_constraint(2, eps2, p2a, direction)
        case = ActiveCase(tag, 0.0, single_constraint_eta(eps2, p2a, direction))
    else:
        eta1, eta2 = solve_eta(p1a, p2a, eps1, eps2, direction, tol=tol)
        alpha = alpha_both_constraints(direction, p1a, p2a, eta1, eta2)
        case = ActiveCase(tag, eta1, eta2)

    best = None
    for sign in (1, -1):
        W, t = repair_feasibility(base, sign * alpha, v, p1a, p2a, eps1, eps2)
        q1, q2 = p1a @ W.rows, p2a @ W.rows
        u = kl_divergence(q1 / q1.sum(), q2 / q2.sum())
        if best is None or u > best[0] + 1e-12 * max(1.0, abs(best[0])):
            best = (u, sign, W, t)
    u, sign, W, t = best
    return EitSolution(
        w0=base,
        alpha=sign * alpha,
        v=v,
        case=case,
        mechanism=W,
        repair_scale=t,
        exact_utility=u,
        exact_leak1=mutual_information(p1a, W),
        exact_leak2=mutual_information(p2a, W),
        approx_utility=approx_utility(alpha, direction),
        direction=direction,
        eps1=eps1,
        eps2=eps2,
        sign=sign,
    )
