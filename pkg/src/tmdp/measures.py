"""Empirical measures built from a logged trajectory.

The sampling measure places point masses on the observed (state, control,
context) triples and extends them with Lebesgue measure in the next-state
direction, realized here by a deterministic quadrature on [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

# Evaluable integrand over the augmented space [0,1]^4. Must accept
# broadcastable numpy arrays (x, a, g, y) and return an array.
Integrand = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]

DEFAULT_MIDPOINT_NODES = 256
# Midpoints of 2^10 uniform cells line up with every dyadic cell of depth <= 10,
# so piecewise-constant integrands on those cells integrate exactly.
EXACT_PIECEWISE_NODES = 1024
DEFAULT_MATCH_TOL = 1e-9


class EmptyConditional(LookupError):
    """No observed (control, context) pair matches the query."""


class EvaluationError(ValueError):
    """An integrand produced a non-finite value."""


@dataclass(frozen=True)
class Trajectory:
    """Ordered offline log of (state, control, context, next-state) tuples.

    All coordinates are clipped into [0, 1] at construction. ``contiguous``
    records whether sample i's next-state equals sample i+1's state (true for
    harness-generated chains).
    """

    x: np.ndarray
    a: np.ndarray
    g: np.ndarray
    y: np.ndarray
    contiguous: bool = False

    def __post_init__(self) -> None:
        for name in ("x", "a", "g", "y"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, np.clip(arr, 0.0, 1.0))
        n = self.x.shape[0]
        if not (self.a.shape[0] == self.g.shape[0] == self.y.shape[0] == n):
            raise ValueError("coordinate arrays must share a common length")
        if n < 3:
            raise ValueError(f"need at least 3 samples, got {n}")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @classmethod
    def from_samples(
        cls, samples: Sequence[tuple[float, float, float, float]], contiguous: bool = False
    ) -> "Trajectory":
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError("samples must be a sequence of (x, a, g, y) tuples")
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], contiguous=contiguous)

    @classmethod
    def from_csv(cls, path: str | Path) -> "Trajectory":
        """Read the `x,a,g,y` CSV transition log."""
        path = Path(path)
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        if not rows:
            raise ValueError(f"{path}: empty trajectory file")
        header = [c.strip().lower() for c in rows[0]]
        if header != ["x", "a", "g", "y"]:
            raise ValueError(f"{path}: expected header x,a,g,y, got {rows[0]}")
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        if data.size == 0:
            raise ValueError(f"{path}: no transition rows")
        traj = cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3])
        chained = bool(np.allclose(traj.y[:-1], traj.x[1:]))
        return cls(traj.x, traj.a, traj.g, traj.y, contiguous=chained)

    def to_csv(self, path: str | Path, comments: Sequence[str] = ()) -> None:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["x", "a", "g", "y"])
            for row in zip(self.x, self.a, self.g, self.y):
                writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class Quadrature:
    """Nodes/weights for integrating over the next-state interval [0, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    scheme: str = "midpoint-composite"

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be matching 1-d arrays")
        if np.any(weights < 0):
            raise ValueError("quadrature weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("quadrature weights must sum to 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def midpoint(cls, count: int = DEFAULT_MIDPOINT_NODES) -> "Quadrature":
        """Composite midpoint rule with ``count`` uniform cells."""
        if count < 1:
            raise ValueError("need at least one node")
        nodes = (np.arange(count) + 0.5) / count
        return cls(nodes, np.full(count, 1.0 / count), scheme="midpoint-composite")

    @classmethod
    def exact_piecewise(cls, count: int = EXACT_PIECEWISE_NODES) -> "Quadrature":
        """Midpoint rule aligned with dyadic cells: exact for piecewise
        constants on any dyadic partition of depth <= log2(count)."""
        if count & (count - 1):
            raise ValueError("exact-piecewise node count must be a power of two")
        nodes = (np.arange(count) + 0.5) / count
        return cls(nodes, np.full(count, 1.0 / count), scheme="exact-piecewise")

    @classmethod
    def cell_midpoints(cls, cells: int) -> "Quadrature":
        """One node per uniform cell; exact for functions constant on those
        cells (counting-measure shim for finite-chain instances)."""
        nodes = (np.arange(cells) + 0.5) / cells
        return cls(nodes, np.full(cells, 1.0 / cells), scheme="exact-piecewise")

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Contract values of shape (..., len(nodes)) against the weights."""
        return np.asarray(values) @ self.weights


@dataclass(frozen=True)
class EmpiricalMeasure:
    """The trajectory-driven sampling measure and its conditional factors."""

    base: Trajectory
    quadrature: Quadrature = field(default_factory=Quadrature.midpoint)
    match_tol: float = DEFAULT_MATCH_TOL


def _evaluate_on_grid(f: Integrand, m: EmpiricalMeasure) -> np.ndarray:
    t, q = m.base, m.quadrature
    vals = np.asarray(
        f(t.x[:, None], t.a[:, None], t.g[:, None], q.nodes[None, :]), dtype=float
    )
    vals = np.broadcast_to(vals, (t.n, q.nodes.shape[0]))
    if not np.all(np.isfinite(vals)):
        i, j = np.argwhere(~np.isfinite(vals))[0]
        raise EvaluationError(
            f"integrand non-finite at sample {i}, quadrature node {q.nodes[j]!r}"
        )
    return vals


def integrate_lambda_n(f: Integrand, m: EmpiricalMeasure) -> float:
    """Integrate f against the sampling measure: the average over samples of
    the quadrature integral of f(X_i, a_i, G_i, .)."""
    vals = _evaluate_on_grid(f, m)
    return float(np.mean(vals @ m.quadrature.weights))


def integrate_point_marginal(f: Integrand, t: Trajectory) -> float:
    """Average f over the observed 4-tuples (X_i, a_i, G_i, X_{i+1}); the
    logged y column is the realized next state, so no quadrature is involved."""
    vals = np.asarray(f(t.x, t.a, t.g, t.y), dtype=float)
    vals = np.broadcast_to(vals, (t.n,))
    if not np.all(np.isfinite(vals)):
        idx = int(np.argwhere(~np.isfinite(vals))[0])
        raise EvaluationError(f"integrand non-finite at sample index {idx}")
    return float(np.mean(vals))


def conditional_match_mask(
    t: Trajectory, a: float, g: float, tol: float = DEFAULT_MATCH_TOL
) -> np.ndarray:
    return (np.abs(t.a - a) <= tol) & (np.abs(t.g - g) <= tol)


def conditional_measure_weights(
    t: Trajectory, a: float, g: float, tol: float = DEFAULT_MATCH_TOL
) -> list[tuple[int, float]]:
    """Uniform weights over the sample indices whose (a_i, G_i) matches (a, g).

    Realizes the conditional factor of the sampling measure given a
    control/context pair; raises EmptyConditional if nothing matches.
    """
    mask = conditional_match_mask(t, a, g, tol)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise EmptyConditional(f"no observed sample matches (a={a!r}, g={g!r})")
    w = 1.0 / idx.size
    return [(int(i), w) for i in idx]
