"""Candidate families: piecewise-constant densities on dyadic partitions and
clipped polynomial candidates on a tensor shifted-Legendre basis.

Each fitted candidate carries the complexity charge used by the selector:
cell count minus log(3)/2 for histograms, degree plus a fixed offset for the
polynomial class. The offsets are chosen so that the per-class weights
exp(-penalty) are summable with total at most 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from tmdp.losses import CandidateDensity
from tmdp.measures import Quadrature, Trajectory

HISTOGRAM_PENALTY_SHIFT = math.log(3.0) / 2.0
# Offset a in the polynomial penalty degree + a. With 2^degree models charged
# per degree, sum_l 2^l exp(-l - a) equals 1 exactly for a = log(2/(e-2)).
SPLINE_PENALTY_OFFSET = math.log(2.0 / (math.e - 2.0))
# Half-width of the triangular smoothing kernel used by the projection fit;
# sits below the finest partition resolution exercised by the harness.
SPLINE_KERNEL_HALFWIDTH = 2.0**-7
SPLINE_CLIP_FLOOR = 1e-6
DEFAULT_CELL_BUDGET = 1 << 16
DEFAULT_DEGREE_BUDGET = 12


class CellBudget(ValueError):
    """Requested partition exceeds the configured cell budget."""


@dataclass(frozen=True)
class DyadicPartition:
    """Axis-aligned dyadic grid on [0,1]^4 with per-axis halving depths."""

    depths: tuple[int, int, int, int]

    def __post_init__(self) -> None:
        if len(self.depths) != 4 or any(d < 0 for d in self.depths):
            raise ValueError("depths must be four nonnegative integers")
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))

    @property
    def cells(self) -> int:
        return 1 << sum(self.depths)

    @property
    def slab_count(self) -> int:
        """Cells of the (x, a, g) marginal grid."""
        return 1 << sum(self.depths[:3])

    @property
    def y_cells(self) -> int:
        return 1 << self.depths[3]

    def slab_index(self, x, a, g) -> np.ndarray:
        dx, da, dg, _ = self.depths
        ix = _axis_index(x, dx)
        ia = _axis_index(a, da)
        ig = _axis_index(g, dg)
        return (ix << (da + dg)) | (ia << dg) | ig

    def y_index(self, y) -> np.ndarray:
        return _axis_index(y, self.depths[3])


def _axis_index(v, depth: int) -> np.ndarray:
    k = 1 << depth
    idx = np.floor(np.asarray(v, dtype=float) * k).astype(np.int64)
    return np.clip(idx, 0, k - 1)


@dataclass(frozen=True, eq=False)
class HistogramDensity(CandidateDensity):
    """Piecewise-constant candidate: per-slab next-state profiles."""

    partition: DyadicPartition = None  # type: ignore[assignment]
    heights: np.ndarray = None  # type: ignore[assignment]

    def grid_values(self, t: Trajectory, quad: Quadrature) -> np.ndarray:
        slab = self.partition.slab_index(t.x, t.a, t.g)
        ycell = self.partition.y_index(quad.nodes)
        return self.heights[slab][:, ycell]


def _make_histogram(partition: DyadicPartition, heights: np.ndarray, label: str) -> HistogramDensity:
    heights = np.asarray(heights, dtype=float)

    def fn(x, a, g, y):
        slab = partition.slab_index(x, a, g)
        ycell = partition.y_index(y)
        return heights[slab, ycell]

    return HistogramDensity(
        fn=fn,
        dim=partition.cells,
        penalty=partition.cells - HISTOGRAM_PENALTY_SHIFT,
        label=label,
        partition=partition,
        heights=heights,
    )


def fit_histogram(
    t: Trajectory,
    p: DyadicPartition,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> HistogramDensity:
    """Empirical conditional-frequency histogram on the given partition.

    Each (x, a, g)-slab gets the normalized next-state count density over its
    y-cells; empty slabs fall back to the uniform profile so candidates stay
    strictly positive. Heights are clipped into [1/n, 1].
    """
    if p.cells > cell_budget:
        raise CellBudget(f"partition has {p.cells} cells, budget is {cell_budget}")
    slabs, ycells = p.slab_count, p.y_cells
    slab = p.slab_index(t.x, t.a, t.g)
    ycell = p.y_index(t.y)
    counts = np.zeros((slabs, ycells))
    np.add.at(counts, (slab, ycell), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    heights = np.where(totals > 0, counts * ycells / np.maximum(totals, 1.0), 1.0)
    heights = np.clip(heights, 1.0 / t.n, 1.0)
    label = "hist-d{}{}{}{}".format(*p.depths)
    return _make_histogram(p, heights, label)


def _legendre_values(v: np.ndarray, degree: int) -> np.ndarray:
    """Shifted Legendre polynomials, orthonormal on [0,1], degrees 0..degree.

    Returns an array of shape v.shape + (degree + 1,).
    """
    u = 2.0 * np.asarray(v, dtype=float) - 1.0
    out = np.empty(u.shape + (degree + 1,))
    out[..., 0] = 1.0
    if degree >= 1:
        out[..., 1] = u
    for k in range(1, degree):
        out[..., k + 1] = ((2 * k + 1) * u * out[..., k] - k * out[..., k - 1]) / (k + 1)
    out *= np.sqrt(2.0 * np.arange(degree + 1) + 1.0)
    return out


def _total_degree_indices(
    degree: int, axis_caps: tuple[int, int, int, int] | None
) -> np.ndarray:
    caps = axis_caps or (degree, degree, degree, degree)
    idx = [
        (i, j, k, l)
        for i in range(min(degree, caps[0]) + 1)
        for j in range(min(degree, caps[1]) + 1)
        for k in range(min(degree, caps[2]) + 1)
        for l in range(min(degree, caps[3]) + 1)
        if i + j + k + l <= degree
    ]
    return np.asarray(idx, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class SplineDensity(CandidateDensity):
    """Clipped tensor-Legendre polynomial candidate of bounded total degree."""

    degree: int = 0
    indices: np.ndarray = None  # type: ignore[assignment]
    coeffs: np.ndarray = None  # type: ignore[assignment]

    def _xag_profile(self, x, a, g) -> np.ndarray:
        """Coefficient profile against the y-basis at given (x, a, g) points:
        shape points + (degree + 1,)."""
        bx = _legendre_values(x, self.degree)
        ba = _legendre_values(a, self.degree)
        bg = _legendre_values(g, self.degree)
        i, j, k, l = (self.indices[:, c] for c in range(4))
        prod = bx[..., i] * ba[..., j] * bg[..., k]  # points + (M,)
        out = np.zeros(prod.shape[:-1] + (self.degree + 1,))
        for deg in range(self.degree + 1):
            sel = l == deg
            if np.any(sel):
                out[..., deg] = prod[..., sel] @ self.coeffs[sel]
        return out

    def grid_values(self, t: Trajectory, quad: Quadrature) -> np.ndarray:
        prof = self._xag_profile(t.x, t.a, t.g)  # (n, degree+1)
        py = _legendre_values(quad.nodes, self.degree)  # (Q, degree+1)
        return np.clip(prof @ py.T, SPLINE_CLIP_FLOOR, 1.0)


def _spline_fn(indices: np.ndarray, coeffs: np.ndarray, degree: int):
    def fn(x, a, g, y):
        x, a, g, y = np.broadcast_arrays(
            np.asarray(x, float), np.asarray(a, float), np.asarray(g, float), np.asarray(y, float)
        )
        shape = x.shape
        flat = [v.reshape(-1) for v in (x, a, g, y)]
        out = np.empty(flat[0].shape[0])
        # Chunked to keep the (points x basis) workspace bounded.
        step = max(1, (1 << 22) // max(len(indices), 1))
        bases_cols = [indices[:, c] for c in range(4)]
        for start in range(0, out.shape[0], step):
            sl = slice(start, start + step)
            vals = np.ones((flat[0][sl].shape[0], len(indices)))
            for coord, cols in zip(flat, bases_cols):
                vals *= _legendre_values(coord[sl], degree)[:, cols]
            out[sl] = vals @ coeffs
        return out.reshape(shape)

    return fn


def fit_spline(
    t: Trajectory,
    degree: int,
    axis_caps: tuple[int, int, int, int] | None = None,
    degree_budget: int = DEFAULT_DEGREE_BUDGET,
    kernel_halfwidth: float = SPLINE_KERNEL_HALFWIDTH,
) -> SplineDensity:
    """Empirical projection onto the tensor shifted-Legendre basis of total
    degree <= degree, with the observed next state smoothed by a narrow
    triangular kernel so the y-side projection is a proper integral."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if degree > degree_budget:
        raise ValueError(f"degree {degree} exceeds budget {degree_budget}")
    indices = _total_degree_indices(degree, axis_caps)

    # Triangular-kernel quadrature around each observed next state; nodes are
    # clipped into [0,1], lumping boundary mass at the edge.
    offsets = np.linspace(-1.0, 1.0, 17)[1:-1:2]  # 8 interior nodes
    kw = np.maximum(1.0 - np.abs(np.linspace(-1.0, 1.0, 17)[1:-1:2]), 0.0)
    kw = kw / kw.sum()
    ynodes = np.clip(t.y[:, None] + kernel_halfwidth * offsets[None, :], 0.0, 1.0)

    bx = _legendre_values(t.x, degree)
    ba = _legendre_values(t.a, degree)
    bg = _legendre_values(t.g, degree)
    by = _legendre_values(ynodes, degree)  # (n, K, deg+1)
    by_smoothed = np.einsum("nkd,k->nd", by, kw)  # (n, deg+1)

    i, j, k, l = (indices[:, c] for c in range(4))
    contrib = bx[:, i] * ba[:, j] * bg[:, k] * by_smoothed[:, l]
    coeffs = contrib.mean(axis=0)

    fn = _spline_fn(indices, coeffs, degree)
    clipped = lambda x, a, g, y: np.clip(fn(x, a, g, y), SPLINE_CLIP_FLOOR, 1.0)
    return SplineDensity(
        fn=clipped,
        dim=len(indices),
        penalty=degree + SPLINE_PENALTY_OFFSET,
        label=f"spline-deg{degree}",
        degree=degree,
        indices=indices,
        coeffs=coeffs,
    )


@dataclass(frozen=True)
class ClassConfig:
    """Finite candidate enumeration: one histogram per depth vector, one
    polynomial candidate per degree."""

    histogram_depths: tuple[tuple[int, int, int, int], ...] = ()
    spline_degrees: tuple[int, ...] = ()
    spline_axis_caps: tuple[int, int, int, int] | None = None
    cell_budget: int = DEFAULT_CELL_BUDGET
    degree_budget: int = DEFAULT_DEGREE_BUDGET

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "histogram_depths", tuple(tuple(d) for d in self.histogram_depths)
        )
        object.__setattr__(self, "spline_degrees", tuple(self.spline_degrees))

    @classmethod
    def table1_histograms(
        cls, y_depths: Sequence[int] = range(1, 11), coarse: tuple[int, int, int] = (1, 0, 1)
    ) -> "ClassConfig":
        """Next-state depth sweep with a fixed coarse (x, a, g) grid."""
        return cls(histogram_depths=tuple((*coarse, d) for d in y_depths))

    @classmethod
    def table1_splines(
        cls,
        degrees: Sequence[int] = range(1, 11),
        axis_caps: tuple[int, int, int, int] | None = (2, 0, 2, 10),
    ) -> "ClassConfig":
        return cls(spline_degrees=tuple(degrees), spline_axis_caps=axis_caps)


def enumerate_candidates(t: Trajectory, config: ClassConfig) -> list[CandidateDensity]:
    """Fit one candidate per configured model and attach its penalty."""
    if not config.histogram_depths and not config.spline_degrees:
        raise ValueError("class config enumerates no candidates")
    out: list[CandidateDensity] = []
    for depths in config.histogram_depths:
        out.append(fit_histogram(t, DyadicPartition(depths), config.cell_budget))
    for degree in config.spline_degrees:
        out.append(
            fit_spline(
                t,
                degree,
                axis_caps=config.spline_axis_caps,
                degree_budget=config.degree_budget,
            )
        )
    return out


def check_penalty_summability(
    candidates: str | Sequence[CandidateDensity], horizon: int = 20
) -> np.ndarray:
    """Monotone partial sums of exp(-penalty) over a candidate family.

    Pass a list of fitted candidates for a concrete enumeration, or a class
    name for the full theoretical family: "histogram" counts the recursive
    all-axes dyadic refinements (cell counts 1 + 15j, refinement sequences as
    a safe overcount), "spline" charges 2^degree models per degree.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if isinstance(candidates, str):
        if candidates == "spline":
            degrees = np.arange(1, horizon + 1)
            terms = np.exp2(degrees) * np.exp(-(degrees + SPLINE_PENALTY_OFFSET))
        elif candidates == "histogram":
            terms = []
            count = 1.0
            for j in range(horizon):
                cells = 1 + 15 * j
                terms.append(count * math.exp(-(cells - HISTOGRAM_PENALTY_SHIFT)))
                count *= 1 + 15 * j  # refinement-sequence overcount
            terms = np.asarray(terms)
        else:
            raise ValueError(f"unknown class name {candidates!r}")
    else:
        penalties = np.asarray([c.penalty for c in candidates][:horizon])
        terms = np.exp(-penalties)
    return np.cumsum(terms)
