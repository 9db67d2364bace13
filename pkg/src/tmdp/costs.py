"""Plug-in empirical cost estimation, grid-search control selection, and
regret evaluation against a reference density."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from tmdp.losses import CandidateDensity
from tmdp.measures import (
    EmpiricalMeasure,
    EmptyConditional,
    Integrand,
    conditional_measure_weights,
)

DEFAULT_CONTROL_POINTS = 64
COST_TIE_TOL = 1e-12
REGRET_FLOOR = -1e-12


def default_control_grid(count: int = DEFAULT_CONTROL_POINTS) -> tuple[float, ...]:
    """Uniform cell-midpoint control grid on [0, 1]."""
    return tuple((np.arange(count) + 0.5) / count)


@dataclass(frozen=True)
class CostSpec:
    """A bounded nonnegative stage cost over (x, a, g, y) with a declared
    sup-norm and a finite grid of admissible controls."""

    cost_fn: Integrand
    sup_norm: float
    control_grid: tuple[float, ...] = field(default_factory=default_control_grid)
    label: str = "custom"

    def __post_init__(self) -> None:
        if not self.sup_norm > 0:
            raise ValueError("sup_norm must be positive")
        grid = tuple(float(a) for a in self.control_grid)
        if not grid:
            raise ValueError("control grid must be nonempty")
        if any(not 0.0 <= a <= 1.0 for a in grid):
            raise ValueError("controls must lie in [0, 1]")
        object.__setattr__(self, "control_grid", grid)

    def eval(self, x, a, g, y) -> np.ndarray:
        vals = np.asarray(self.cost_fn(x, a, g, y), dtype=float)
        if np.any(vals < -COST_TIE_TOL) or np.any(vals > self.sup_norm + 1e-9):
            raise ValueError(
                f"cost {self.label!r} left its declared range [0, {self.sup_norm}]"
            )
        return np.clip(vals, 0.0, self.sup_norm)

    def scaled(self, c: float) -> "CostSpec":
        if not c > 0:
            raise ValueError("scale must be positive")
        fn = self.cost_fn
        return CostSpec(
            lambda x, a, g, y: c * np.asarray(fn(x, a, g, y), dtype=float),
            sup_norm=c * self.sup_norm,
            control_grid=self.control_grid,
            label=f"{self.label}*{c:g}",
        )


def constant_cost(level: float = 1.0, control_grid=None) -> CostSpec:
    grid = tuple(control_grid) if control_grid is not None else default_control_grid()
    return CostSpec(
        lambda x, a, g, y: np.broadcast_to(
            float(level), np.broadcast_shapes(np.shape(x), np.shape(y))
        ).copy(),
        sup_norm=max(level, 1e-12),
        control_grid=grid,
        label="constant",
    )


def threshold_cost(cut: float = 0.5, control_grid=None) -> CostSpec:
    """Unit cost whenever the next state exceeds the cut."""
    grid = tuple(control_grid) if control_grid is not None else default_control_grid()
    return CostSpec(
        lambda x, a, g, y: (np.asarray(y, float) > cut).astype(float)
        + 0.0 * np.asarray(x, float),
        sup_norm=1.0,
        control_grid=grid,
        label="threshold",
    )


def quadratic_cost(target: float = 0.0, control_grid=None) -> CostSpec:
    """Squared distance of the next state from a target level."""
    grid = tuple(control_grid) if control_grid is not None else default_control_grid()
    return CostSpec(
        lambda x, a, g, y: (np.asarray(y, float) - target) ** 2
        + 0.0 * np.asarray(x, float),
        sup_norm=max((1.0 - target) ** 2, target**2),
        control_grid=grid,
        label="quadratic",
    )


def chain_indicator_cost(d: int, control_grid=None) -> CostSpec:
    """Unit cost for leaving the last cell of a (d + 1)-cell encoded chain.
    The optimal control maximizes the chance of staying put, which is how
    the hard-instance family scores control mistakes."""
    cut = d / (d + 1)
    grid = tuple(control_grid) if control_grid is not None else (0.25, 0.75)
    return CostSpec(
        lambda x, a, g, y: (np.asarray(x, float) > cut).astype(float)
        * (np.asarray(y, float) <= cut).astype(float),
        sup_norm=1.0,
        control_grid=grid,
        label="chain-indicator",
    )


BUILTIN_COSTS = {
    "constant": constant_cost,
    "threshold": threshold_cost,
    "quadratic": quadratic_cost,
    "chain-indicator": chain_indicator_cost,
}


def table_cost(path: str | Path, sup_norm: float | None = None, control_grid=None) -> CostSpec:
    """Cost from a CSV of grid values with multilinear interpolation.

    The file holds columns ``x, a, g, y, cost`` where the first four columns
    enumerate a full rectangular grid (any row order).
    """
    from scipy.interpolate import RegularGridInterpolator

    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header = [c.strip().lower() for c in rows[0]]
    if header != ["x", "a", "g", "y", "cost"]:
        raise ValueError(f"{path}: expected header x,a,g,y,cost, got {rows[0]}")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    axes = [np.unique(data[:, k]) for k in range(4)]
    shape = tuple(ax.size for ax in axes)
    if int(np.prod(shape)) != data.shape[0]:
        raise ValueError(f"{path}: rows do not form a full rectangular grid")
    values = np.full(shape, np.nan)
    idx = tuple(
        np.searchsorted(axes[k], data[:, k]) for k in range(4)
    )
    values[idx] = data[:, 4]
    if np.any(np.isnan(values)):
        raise ValueError(f"{path}: grid has missing cells")
    interp = RegularGridInterpolator(
        axes, values, bounds_error=False, fill_value=None
    )

    def fn(x, a, g, y):
        b = np.broadcast_arrays(
            np.asarray(x, float), np.asarray(a, float), np.asarray(g, float), np.asarray(y, float)
        )
        pts = np.stack([bi.ravel() for bi in b], axis=-1)
        return interp(pts).reshape(b[0].shape)

    bound = float(sup_norm) if sup_norm is not None else float(values.max())
    grid = tuple(control_grid) if control_grid is not None else default_control_grid()
    return CostSpec(fn, sup_norm=max(bound, 1e-12), control_grid=grid, label=f"table:{path.name}")


def empirical_cost(
    density: Integrand,
    cost: CostSpec,
    a: float,
    g: float,
    m: EmpiricalMeasure,
    fallback: bool = False,
) -> float:
    """Plug-in cost of allocating control ``a`` in context ``g``: the
    cost-weighted density integrated over next states, averaged over the
    observed states conditioned on matching (control, context) pairs.

    With ``fallback`` on, an empty conditional falls back to averaging over
    every observed state instead of raising.
    """
    t, q = m.base, m.quadrature
    try:
        pairs = conditional_measure_weights(t, a, g, m.match_tol)
        idx = np.array([i for i, _ in pairs])
        w = np.array([wi for _, wi in pairs])
    except EmptyConditional:
        if not fallback:
            raise
        idx = np.arange(t.n)
        w = np.full(t.n, 1.0 / t.n)
    x = t.x[idx][:, None]
    nodes = q.nodes[None, :]
    dens = np.asarray(density(x, a, g, nodes), dtype=float)
    if isinstance(density, CandidateDensity):
        dens = np.clip(dens, 0.0, 1.0)
    lv = cost.eval(x, a, g, nodes)
    inner = np.broadcast_to(dens * lv, (idx.size, q.nodes.size)) @ q.weights
    return float(inner @ w)


def select_control(
    density: Integrand,
    cost: CostSpec,
    g: float,
    m: EmpiricalMeasure,
    fallback: bool = False,
) -> tuple[float, float, list[float]]:
    """Grid argmin of the plug-in empirical cost at context g. Returns the
    chosen control, its value, and every control tied within tolerance."""
    values = np.array(
        [empirical_cost(density, cost, a, g, m, fallback) for a in cost.control_grid]
    )
    best = values.min()
    ties = [a for a, v in zip(cost.control_grid, values) if v <= best + COST_TIE_TOL]
    k = int(np.argmin(values))
    return cost.control_grid[k], float(values[k]), ties


def regret(
    true_density: Integrand,
    est_density: Integrand,
    cost: CostSpec,
    m: EmpiricalMeasure,
    fallback: bool = False,
) -> float:
    """Average excess true cost of the plug-in control rule over the true
    optimum, across the observed (control, context) marginal. Nonnegative up
    to tie tolerance since both arms are scored under the true density."""
    t = m.base
    # One context weight per observed pair; duplicate contexts contribute
    # proportionally to their multiplicity.
    total = 0.0
    seen: dict[float, tuple[float, int]] = {}
    for g in t.g:
        key = round(float(g) / max(m.match_tol, 1e-15))
        if key in seen:
            excess, count = seen[key]
            seen[key] = (excess, count + 1)
            continue
        a_hat, _, _ = select_control(est_density, cost, g, m, fallback)
        a_star, c_star, _ = select_control(true_density, cost, g, m, fallback)
        c_hat = empirical_cost(true_density, cost, a_hat, g, m, fallback)
        seen[key] = (c_hat - c_star, 1)
    total = sum(excess * count for excess, count in seen.values()) / t.n
    if total < REGRET_FLOOR:
        raise AssertionError(f"regret {total} fell below the tie floor")
    return max(total, 0.0)
