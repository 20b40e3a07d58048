"""Finite distributions, observation symbols and f-divergences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

NORM_TOL = 1e-9


class ShapeError(ValueError):
    pass


class DivergenceUndefined(ValueError):
    """Raised when P is not absolutely continuous w.r.t. Q for a divergence that needs it."""


class Dist:
    """Immutable probability vector over a finite support.

    Inputs that are not normalized within ``NORM_TOL`` are rejected rather than
    rescaled, so downstream certificates are computed on exactly what was given.
    """

    __slots__ = ("probs",)

    def __init__(self, probs, tol: float = NORM_TOL):
        p = np.array(probs, dtype=float).ravel()
        if p.size == 0:
            raise ShapeError("distribution needs at least one outcome")
        if not np.all(np.isfinite(p)):
            raise ValueError("non-finite probability")
        if p.min() < -tol:
            raise ValueError(f"negative probability {p.min():.3g}")
        total = p.sum()
        if abs(total - 1.0) > tol:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __setattr__(self, name, value):
        raise AttributeError("Dist is immutable")

    def __len__(self):
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __repr__(self):
        return f"Dist({np.array2string(self.probs, precision=4)})"

    def __eq__(self, other):
        if not isinstance(other, Dist):
            return NotImplemented
        return self.probs.shape == other.probs.shape and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    @classmethod
    def uniform(cls, n: int) -> "Dist":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point(cls, n: int, i: int) -> "Dist":
        p = np.zeros(n)
        p[i] = 1.0
        return cls(p)


def bernoulli(p: float) -> Dist:
    """Distribution over {0, 1} with mass p on 1."""
    return Dist([1.0 - p, p])


def as_probs(x) -> np.ndarray:
    if isinstance(x, Dist):
        return x.probs
    return np.asarray(x, dtype=float)


def _pair(P, Q):
    p, q = as_probs(P), as_probs(Q)
    if p.shape != q.shape:
        raise ShapeError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return p, q


@dataclass(frozen=True)
class ObsSymbol:
    """A full observation: per-player rewards plus an opaque label.

    ``pure_tag`` carries the pure profile the symbol reveals, if any.
    """

    id: str
    rewards: tuple[float, ...] = ()
    pure_tag: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "rewards", tuple(float(r) for r in self.rewards))
        if self.pure_tag is not None:
            object.__setattr__(self, "pure_tag", tuple(int(a) for a in self.pure_tag))


@dataclass(frozen=True)
class Divergence:
    """An f-divergence given by a convex generator with phi(1) = 0.

    ``alpha`` and ``beta`` are the declared growth constants:
    phi(1/x) + phi(x)/x <= beta * x**alpha for x >= 1. ``slope_at_infinity`` is
    lim phi(x)/x, used for coordinates where Q has no mass; None means infinite.
    """

    kind: str
    phi: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    alpha: float
    beta: float
    slope_at_infinity: float | None = None

    def __post_init__(self):
        if abs(float(self.phi(np.array([1.0]))[0])) > 1e-12:
            raise ValueError("generator must vanish at 1")

    def growth_violations(self, n: int = 400, x_max: float = 1e6) -> np.ndarray:
        """Grid points in [1, x_max] where the declared growth bound fails."""
        x = np.geomspace(1.0, x_max, n)
        lhs = self.phi(1.0 / x) + self.phi(x) / x
        rhs = self.beta * x**self.alpha
        return x[lhs > rhs * (1 + 1e-12) + 1e-12]


def _phi_hellinger(x):
    return (np.sqrt(x) - 1.0) ** 2


def _phi_kl(x):
    x = np.asarray(x, dtype=float)
    out = 1.0 - x
    pos = x > 0
    out[pos] += x[pos] * np.log(x[pos])
    return out


def _phi_chi2(x):
    return (np.asarray(x, dtype=float) - 1.0) ** 2


HELLINGER = Divergence("hellinger", _phi_hellinger, 0.0, 2.0, slope_at_infinity=1.0)
# x ln x + 1 - x gives phi(1/x) + phi(x)/x = ln(x)(1 - 1/x), which is unbounded,
# so no alpha = 0 constant exists; ln(x)/sqrt(x) <= 2/e gives (1/2, 3/4).
KL = Divergence("kl", _phi_kl, 0.5, 0.75)
CHI2 = Divergence("chi2", _phi_chi2, 1.0, 1.0)

DIVERGENCES = {d.kind: d for d in (HELLINGER, KL, CHI2)}


def custom_divergence(phi, alpha: float, beta: float, slope_at_infinity=None) -> Divergence:
    div = Divergence("custom", phi, alpha, beta, slope_at_infinity)
    bad = div.growth_violations()
    if bad.size:
        raise ValueError(f"declared ({alpha}, {beta}) bound fails at x = {bad[0]:.4g}")
    return div


def get_divergence(kind) -> Divergence:
    if isinstance(kind, Divergence):
        return kind
    try:
        return DIVERGENCES[kind]
    except KeyError:
        raise ValueError(f"unknown divergence {kind!r}") from None


def hellinger_sq(P, Q) -> float:
    """Squared Hellinger distance, sum_i (sqrt p_i - sqrt q_i)^2, in [0, 2]."""
    p, q = _pair(P, Q)
    return float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))


def hellinger_sq_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Squared Hellinger distance along the last axis, with broadcasting."""
    return np.sum((np.sqrt(P) - np.sqrt(Q)) ** 2, axis=-1)


def f_divergence(kind, P, Q) -> float:
    """E_Q[phi(dP/dQ)] with the usual conventions on zero-mass cells."""
    div = get_divergence(kind)
    p, q = _pair(P, Q)
    if div.kind == "hellinger":
        return hellinger_sq(p, q)
    support = q > 0
    total = float(np.sum(q[support] * div.phi(p[support] / q[support])))
    orphan = p[~support].sum()
    if orphan > 0:
        if div.slope_at_infinity is None:
            raise DivergenceUndefined(f"{div.kind}: P puts mass {orphan:.3g} where Q has none")
        total += orphan * div.slope_at_infinity
    return total


def product_dist(parts: Sequence) -> Dist:
    """Product distribution, flattened in row-major (C) order."""
    if not parts:
        raise ShapeError("need at least one factor")
    out = as_probs(parts[0])
    for part in parts[1:]:
        out = np.multiply.outer(out, as_probs(part)).ravel()
    return Dist(out)


def mixture(weights, dists: Sequence) -> Dist:
    w = as_probs(weights)
    if w.size != len(dists):
        raise ShapeError(f"{w.size} weights for {len(dists)} distributions")
    mat = np.array([as_probs(d) for d in dists])
    if mat.ndim != 2:
        raise ShapeError("distributions must share one dimension")
    return Dist(w @ mat)


def kl_divergence(P, Q) -> float:
    return f_divergence(KL, P, Q)


def log_ratio_bound(P, Q) -> float:
    """max_i p_i / q_i, infinite when P has mass outside the support of Q."""
    p, q = _pair(P, Q)
    if np.any((q == 0) & (p > 0)):
        return math.inf
    mask = q > 0
    return float(np.max(p[mask] / q[mask])) if mask.any() else 1.0
