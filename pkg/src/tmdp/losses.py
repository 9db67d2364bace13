"""Empirical Hellinger loss, the pairwise comparison functional, and the
inequality checkers used as numerical invariants.

The comparison functional T(f1, f2) is the sum of three antisymmetric terms:
a point-marginal average of the psi kernel on observed transitions, a
square-root cross term against the sampling measure, and a mass-difference
term that penalizes improper densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from tmdp.measures import (
    EmpiricalMeasure,
    Integrand,
    Quadrature,
    _evaluate_on_grid,
)

SQRT2 = math.sqrt(2.0)
PSI_SUP = 1.0 / SQRT2
DEFAULT_SLACK = 1e-10


@dataclass(frozen=True)
class CandidateDensity:
    """An evaluable candidate transition density with complexity metadata.

    ``fn`` maps broadcastable arrays (x, a, g, y) on [0,1]^4 to values; the
    public evaluation clips into [0, 1] so every candidate satisfies the
    bounded-range requirement.
    """

    fn: Integrand
    dim: int
    penalty: float
    label: str

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if not self.penalty > 0:
            raise ValueError("penalty must be positive")

    def eval(self, x, a, g, y) -> np.ndarray:
        return np.clip(np.asarray(self.fn(x, a, g, y), dtype=float), 0.0, 1.0)

    # CandidateDensity is itself an Integrand.
    def __call__(self, x, a, g, y) -> np.ndarray:
        return self.eval(x, a, g, y)


def psi(c1, c2):
    """Normalized square-root contrast of two nonnegative levels, valued in
    [-1/sqrt(2), 1/sqrt(2)] and antisymmetric; the (0, 0) corner is 0 by
    continuous extension along the diagonal."""
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    if np.any(c1 < 0) or np.any(c2 < 0):
        raise ValueError("psi requires nonnegative arguments")
    total = c1 + c2
    safe = np.where(total > 0, total, 1.0)
    out = (np.sqrt(c2) - np.sqrt(c1)) / (SQRT2 * np.sqrt(safe))
    out = np.where(total > 0, out, 0.0)
    return out if out.ndim else float(out)


def phi(c1, c2):
    """Half-scaled variant of :func:`psi` appearing in the main-text display;
    kept for documentation parity, the selector path uses psi throughout."""
    return np.asarray(psi(c1, c2)) / 2.0


class _PairCache:
    """Cached per-candidate evaluations on the (sample x quadrature) grid and
    on the observed 4-tuples; shared across pairwise computations."""

    def __init__(self, m: EmpiricalMeasure):
        self.m = m
        self._grid: dict[int, np.ndarray] = {}
        self._sqrt: dict[int, np.ndarray] = {}
        self._point: dict[int, np.ndarray] = {}

    def grid(self, f: Integrand) -> np.ndarray:
        key = id(f)
        if key not in self._grid:
            if hasattr(f, "grid_values"):
                vals = np.asarray(
                    f.grid_values(self.m.base, self.m.quadrature), dtype=float
                )
            else:
                vals = _evaluate_on_grid(f, self.m)
            if isinstance(f, CandidateDensity):
                vals = np.clip(vals, 0.0, 1.0)
            self._grid[key] = vals
        return self._grid[key]

    def sqrt_grid(self, f: Integrand) -> np.ndarray:
        key = id(f)
        if key not in self._sqrt:
            self._sqrt[key] = np.sqrt(np.clip(self.grid(f), 0.0, None))
        return self._sqrt[key]

    def point(self, f: Integrand) -> np.ndarray:
        key = id(f)
        if key not in self._point:
            t = self.m.base
            vals = np.asarray(f(t.x, t.a, t.g, t.y), dtype=float)
            self._point[key] = np.broadcast_to(vals, (t.n,)).astype(float)
        return self._point[key]


def hellinger_sq(
    f1: Integrand,
    f2: Integrand,
    m: EmpiricalMeasure,
    cache: _PairCache | None = None,
) -> float:
    """Squared empirical Hellinger distance against the sampling measure."""
    cache = cache or _PairCache(m)
    diff = cache.sqrt_grid(f1) - cache.sqrt_grid(f2)
    return float(0.5 * np.mean((diff * diff) @ m.quadrature.weights))


def t_functional(
    f1: Integrand,
    f2: Integrand,
    m: EmpiricalMeasure,
    cache: _PairCache | None = None,
) -> float:
    """Pairwise comparison of f1 and f2 on the trajectory: point-marginal psi
    term + square-root cross term + mass-difference term. Antisymmetric with
    T(f, f) = 0."""
    cache = cache or _PairCache(m)
    w = m.quadrature.weights

    a_term = float(np.mean(psi(cache.point(f1), cache.point(f2))))

    s1, s2 = cache.sqrt_grid(f1), cache.sqrt_grid(f2)
    mid = np.sqrt((s1 * s1 + s2 * s2) / 2.0)
    b_term = float(np.mean((mid * (s2 - s1)) @ w))

    c_term = float(np.mean((cache.grid(f1) - cache.grid(f2)) @ w))
    return a_term + b_term + c_term


def l2_sqrt_distance_sq(
    f1: Integrand,
    f2: Integrand,
    q: Quadrature | Sequence[Quadrature],
) -> float:
    """Deterministic squared root-density distance under the normalized
    product Lebesgue measure on [0,1]^4, via a tensor-product quadrature."""
    quads = list(q) if isinstance(q, (list, tuple)) else [q] * 4
    if len(quads) != 4:
        raise ValueError("need one quadrature per axis")
    x = quads[0].nodes[:, None, None, None]
    a = quads[1].nodes[None, :, None, None]
    g = quads[2].nodes[None, None, :, None]
    y = quads[3].nodes[None, None, None, :]
    shape = tuple(qi.nodes.shape[0] for qi in quads)
    v1 = np.broadcast_to(np.asarray(f1(x, a, g, y), dtype=float), shape)
    v2 = np.broadcast_to(np.asarray(f2(x, a, g, y), dtype=float), shape)
    diff = np.sqrt(np.clip(v1, 0.0, None)) - np.sqrt(np.clip(v2, 0.0, None))
    w = (
        quads[0].weights[:, None, None, None]
        * quads[1].weights[None, :, None, None]
        * quads[2].weights[None, None, :, None]
        * quads[3].weights[None, None, None, :]
    )
    return float(np.sum(diff * diff * w))


def check_bernstein_var_bound(
    s: Integrand,
    f1: Integrand,
    f2: Integrand,
    m: EmpiricalMeasure,
    slack: float = DEFAULT_SLACK,
) -> tuple[float, float, bool]:
    """Variance-style bound: the psi-kernel second moment weighted by s is at
    most three times the sum of the two Hellinger distances to s."""
    cache = _PairCache(m)
    w = m.quadrature.weights
    g1, g2 = cache.grid(f1), cache.grid(f2)
    psi_sq = np.asarray(psi(g1, g2)) ** 2
    sv = np.clip(cache.grid(s), 0.0, None)
    lhs = float(np.mean((psi_sq * sv) @ w))
    rhs = 3.0 * (hellinger_sq(s, f1, m, cache) + hellinger_sq(s, f2, m, cache))
    return lhs, rhs, bool(lhs <= rhs + slack)


def check_mb_eb_bound(
    s: Integrand,
    f1: Integrand,
    f2: Integrand,
    m: EmpiricalMeasure,
    true_s: Integrand,
    slack: float = DEFAULT_SLACK,
) -> tuple[float, float, bool]:
    """Comparison bound linking the pairwise functional to Hellinger
    distances plus the centered point-kernel average. The centering uses
    ``true_s`` as the conditional next-state weight, evaluated by quadrature;
    passing the same evaluator for ``s`` and ``true_s`` makes the bound a
    deterministic pathwise check.

    The comparison functional enters on the same scale as the halved
    Hellinger distance: its cross and mass terms carry a factor 1/2 here, so
    the bound is pointwise-tight (equality at s = f1 = 0).
    """
    cache = _PairCache(m)
    w = m.quadrature.weights

    s1, s2 = cache.sqrt_grid(f1), cache.sqrt_grid(f2)
    mid = np.sqrt((s1 * s1 + s2 * s2) / 2.0)
    a_term = float(np.mean(psi(cache.point(f1), cache.point(f2))))
    b_half = 0.5 * float(np.mean((mid * (s2 - s1)) @ w))
    c_half = 0.5 * float(np.mean((cache.grid(f1) - cache.grid(f2)) @ w))
    t_half = a_term + b_half + c_half

    lhs = (1.0 - 1.0 / SQRT2) * hellinger_sq(s, f2, m, cache) + t_half

    # Z-bar: psi at observed transitions minus its conditional expectation
    # under true_s given (X_i, a_i, G_i).
    psi_pts = np.asarray(psi(cache.point(f1), cache.point(f2)))
    psi_grid = np.asarray(psi(cache.grid(f1), cache.grid(f2)))
    sv = np.clip(cache.grid(true_s), 0.0, None)
    centered = (psi_grid * sv) @ w
    z_bar = float(np.mean(psi_pts - centered))

    rhs = (1.0 + 1.0 / SQRT2) * hellinger_sq(s, f1, m, cache) + z_bar
    return lhs, rhs, bool(lhs <= rhs + slack)
