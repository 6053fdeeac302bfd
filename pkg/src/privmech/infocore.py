"""Finite-alphabet information measures and their chi-squared surrogates.

Everything here works in nats. Pass ``base="bits"`` to the exact measures
to get bits instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import rel_entr, xlogy

SIMPLEX_TOL = 1e-12
ROW_SUM_TOL = 1e-10
DEFAULT_RADIUS = 0.3

ArrayLike = Union[Sequence[float], np.ndarray]


class ValidationError(ValueError):
    """An input violates a domain invariant.

    ``field`` names the offending input so front ends can report it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_simplex(x: ArrayLike, field: str = "p", min_size: int = 2) -> np.ndarray:
    """Return ``x`` as a read-only float array, or raise if it is not a pmf.

    Sums are checked against ``SIMPLEX_TOL``; nothing is renormalized.
    """
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise ValidationError(field, f"expected a vector, got shape {a.shape}")
    if a.size < min_size:
        raise ValidationError(field, f"need at least {min_size} entries, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(field, "entries must be finite")
    if np.any(a < 0):
        raise ValidationError(field, "entries must be nonnegative")
    total = math.fsum(a)
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise ValidationError(field, f"entries sum to {total!r}, not 1 (simplex violation)")
    return _frozen(a)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector on a finite alphabet.

    One-letter alphabets are allowed so that single-output channels have a
    valid output distribution; solvers demand at least two source letters.
    """

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", check_simplex(self.probs, "probs", min_size=1))

    def __len__(self) -> int:
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.probs > 0))

    @classmethod
    def uniform(cls, size: int) -> "Distribution":
        return cls(np.full(size, 1.0 / size))


def as_distribution(p, field: str = "p", min_size: int = 1) -> Distribution:
    if isinstance(p, Distribution):
        if len(p) < min_size:
            raise ValidationError(field, f"need at least {min_size} entries, got {len(p)}")
        return p
    return Distribution(check_simplex(p, field, min_size))


@dataclass(frozen=True, eq=False)
class Mechanism:
    """Row-stochastic M x N channel with N <= M."""

    rows: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.rows, dtype=float)
        if W.ndim != 2:
            raise ValidationError("mechanism", f"expected a matrix, got shape {W.shape}")
        m, n = W.shape
        if n > m:
            raise ValidationError("mechanism", f"output alphabet ({n}) larger than input ({m})")
        if not np.all(np.isfinite(W)) or np.any(W < 0) or np.any(W > 1):
            raise ValidationError("mechanism", "entries must lie in [0, 1]")
        sums = W.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > SIMPLEX_TOL):
            raise ValidationError("mechanism", f"row sums {sums} are not 1")
        object.__setattr__(self, "rows", _frozen(W))

    @property
    def shape(self):
        return self.rows.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.rows, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, Mechanism):
            return NotImplemented
        return np.array_equal(self.rows, other.rows)

    def __hash__(self):
        return hash(self.rows.tobytes())

    @classmethod
    def identity(cls, size: int) -> "Mechanism":
        return cls(np.eye(size))


def as_mechanism(W) -> Mechanism:
    return W if isinstance(W, Mechanism) else Mechanism(W)


def is_row_stochastic(W: np.ndarray, tol: float = SIMPLEX_TOL) -> bool:
    W = np.asarray(W, dtype=float)
    return bool(
        np.all(W >= 0) and np.all(W <= 1) and np.all(np.abs(W.sum(axis=1) - 1.0) <= tol)
    )


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Additive deviation ``deltas`` from the rank-1 channel with rows ``base``.

    Rows of ``deltas`` must sum to zero. When ``radius`` is not None every
    entry must also satisfy ``|deltas[i, j]| <= radius * base[j]``; pass
    ``radius=None`` to skip that check (e.g. for large-budget candidates).
    """

    deltas: np.ndarray
    base: Distribution
    radius: Optional[float] = DEFAULT_RADIUS

    def __post_init__(self):
        base = as_distribution(self.base, "base")
        object.__setattr__(self, "base", base)
        D = np.asarray(self.deltas, dtype=float)
        if D.ndim != 2 or D.shape[1] != len(base):
            raise ValidationError(
                "theta", f"shape {D.shape} incompatible with base of length {len(base)}"
            )
        if np.any(np.abs(D.sum(axis=1)) > ROW_SUM_TOL):
            raise ValidationError("theta", "rows must sum to 0")
        if self.radius is not None:
            if not 0 <= self.radius < 1:
                raise ValidationError("radius", f"must lie in [0, 1), got {self.radius}")
            bound = self.radius * base.probs
            if np.any(np.abs(D) > bound + 1e-15):
                raise ValidationError(
                    "theta", f"entries exceed radius {self.radius} times base"
                )
        object.__setattr__(self, "deltas", _frozen(D))

    def relative_size(self) -> float:
        """Smallest radius this perturbation satisfies (inf if base has zeros under nonzero deltas)."""
        w = self.base.probs
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(self.deltas == 0, 0.0, np.abs(self.deltas) / w)
        return float(r.max()) if r.size else 0.0

    def mechanism_matrix(self) -> np.ndarray:
        """``W0 + deltas`` as a raw array; may leave [0, 1] for large deltas."""
        return self.base.probs[None, :] + self.deltas


def _scale(base: str) -> float:
    if base in ("nats", "e", "natural"):
        return 1.0
    if base in ("bits", 2):
        return 1.0 / math.log(2)
    raise ValueError(f"unsupported log base {base!r}; use 'nats' or 'bits'")


def entropy(p, base: str = "nats") -> float:
    """Shannon entropy with the convention 0 log 0 = 0."""
    p = as_distribution(p).probs
    return float(-xlogy(p, p).sum() * _scale(base))


def kl_divergence(p, q, base: str = "nats") -> float:
    """Relative entropy D(p || q); ``math.inf`` when p is not absolutely continuous w.r.t. q."""
    p = as_distribution(p, "p").probs
    q = as_distribution(q, "q").probs
    if p.shape != q.shape:
        raise ValidationError("q", f"length {q.size} does not match p (length {p.size})")
    d = rel_entr(p, q).sum()
    return float(max(d, 0.0) * _scale(base))


def pushforward(p, W) -> Distribution:
    """Output distribution ``p W``."""
    p = as_distribution(p).probs
    W = as_mechanism(W).rows
    if W.shape[0] != p.size:
        raise ValidationError("mechanism", f"{W.shape[0]} rows for an input of size {p.size}")
    q = p @ W
    # inputs are already validated; this only strips accumulated rounding
    return Distribution(q / math.fsum(q))


def mutual_information(p, W, base: str = "nats") -> float:
    """I(p, W) = sum_ij p_i W_ij log(W_ij / (pW)_j)."""
    p = as_distribution(p).probs
    W = as_mechanism(W).rows
    if W.shape[0] != p.size:
        raise ValidationError("mechanism", f"{W.shape[0]} rows for an input of size {p.size}")
    q = p @ W
    live = p > 0  # rows with p_i = 0 can hold W_ij > 0 where q_j = 0
    mi = (p[live, None] * rel_entr(W[live], q[None, :])).sum()
    return float(max(mi, 0.0) * _scale(base))


def _whitened(theta: Perturbation) -> np.ndarray:
    if not isinstance(theta, Perturbation):
        raise TypeError("theta must be a Perturbation")
    w0 = theta.base.probs
    if np.any(w0 <= 0):
        raise ValidationError("base", "chi-squared surrogates need a strictly positive base")
    return theta.deltas / np.sqrt(w0)[None, :]


def chi2_kl_approx(p1, p2, theta: Perturbation) -> float:
    """Second-order surrogate of D(p1 W || p2 W) for W = W0 + theta."""
    p1 = as_distribution(p1, "p1").probs
    p2 = as_distribution(p2, "p2").probs
    A = _whitened(theta)
    if A.shape[0] != p1.size or p1.size != p2.size:
        raise ValidationError("theta", "row count must match the source alphabet")
    r = (p1 - p2) @ A
    return float(0.5 * r @ r)


def chi2_mi_approx(p, theta: Perturbation) -> float:
    """Second-order surrogate of I(p, W0 + theta): half the p-weighted whitened row energy."""
    p = as_distribution(p).probs
    A = _whitened(theta)
    if A.shape[0] != p.size:
        raise ValidationError("theta", "row count must match the source alphabet")
    return float(0.5 * p @ (A * A).sum(axis=1))
