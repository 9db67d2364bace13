"""Offline policy evaluation through plug-in transition operators, plus
distribution-shift diagnostics for train/test pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from tmdp.losses import SQRT2, _PairCache, hellinger_sq
from tmdp.measures import EmpiricalMeasure, Integrand, Quadrature, Trajectory
from tmdp.selector import SelectorConfig, oracle_gap_report, select

DEFAULT_GRID_NODES = 64
OPE_SLACK = 1e-8


def state_grid(count: int = DEFAULT_GRID_NODES) -> np.ndarray:
    """Uniform cell-midpoint state discretization of [0, 1]."""
    return (np.arange(count) + 0.5) / count


@dataclass(frozen=True)
class PolicySpec:
    """Stationary policy with discount and reward for value computation.

    ``policy`` maps broadcastable (x, g) arrays to controls in [0, 1]. A
    stochastic policy is given as a list of (weight, deterministic-policy)
    pairs via ``mixture``.
    """

    policy: Callable[[np.ndarray, np.ndarray], np.ndarray]
    beta: float
    reward: Callable[[np.ndarray], np.ndarray]
    reward_sup: float
    mixture: tuple[tuple[float, Callable], ...] = ()
    label: str = "policy"

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if not self.reward_sup > 0:
            raise ValueError("reward sup-norm must be positive and declared")
        if self.mixture:
            w = sum(p for p, _ in self.mixture)
            if abs(w - 1.0) > 1e-12 or any(p < 0 for p, _ in self.mixture):
                raise ValueError("mixture weights must form a probability vector")

    def branches(self) -> tuple[tuple[float, Callable], ...]:
        return self.mixture if self.mixture else ((1.0, self.policy),)


@dataclass(frozen=True)
class ValueSolution:
    grid: np.ndarray
    values: np.ndarray
    residual: float
    renorm_spread: float = 0.0


def transition_operator(
    density: Integrand,
    policy: PolicySpec,
    t: Trajectory,
    grid: np.ndarray | None = None,
    quad: Quadrature | None = None,
    renormalize: bool = True,
) -> tuple[np.ndarray, float]:
    """Matrix of the policy-averaged transition kernel on the state grid.

    Row i holds the distribution over next-grid-cells from state grid[i],
    with the context averaged over its observed empirical marginal and the
    next state integrated by quadrature. Rows are renormalized to sum to 1;
    the returned spread is the largest |row-sum - 1| before renormalization
    (a proxy for how improper the plugged density is).
    """
    grid = state_grid() if grid is None else np.asarray(grid, dtype=float)
    quad = quad or Quadrature.midpoint(grid.size)
    if grid.size == 0:
        raise ValueError("state grid must be nonempty")
    rows = np.zeros((grid.size, quad.nodes.size))
    gs = t.g
    for weight, branch in policy.branches():
        a = np.asarray(branch(grid[:, None], gs[None, :]), dtype=float)
        a = np.broadcast_to(a, (grid.size, gs.size))
        # Average over observed contexts: accumulate per-context kernels.
        for j in range(gs.size):
            vals = np.asarray(
                density(grid[:, None], a[:, j][:, None], gs[j], quad.nodes[None, :]),
                dtype=float,
            )
            rows += weight / gs.size * np.broadcast_to(vals, rows.shape)
    mass = rows @ quad.weights
    spread = float(np.max(np.abs(mass - 1.0)))
    kernel = rows * quad.weights[None, :]
    if renormalize:
        safe = np.where(mass > 0, mass, 1.0)
        kernel = kernel / safe[:, None]
        kernel[mass <= 0] = quad.weights
    return kernel, spread


def solve_value(
    operator: np.ndarray,
    reward: np.ndarray,
    beta: float,
    tolerance: float = 1e-10,
) -> ValueSolution:
    """Direct solve of the discounted fixed-point system (I - beta P) V = r,
    with the Bellman residual reported for verification."""
    p = np.asarray(operator, dtype=float)
    r = np.asarray(reward, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] != r.shape[0]:
        raise ValueError("operator must be square and conform with the reward")
    if not 0.0 <= beta < 1.0:
        raise ValueError("discount must lie in [0, 1)")
    v = np.linalg.solve(np.eye(p.shape[0]) - beta * p, r)
    residual = float(np.max(np.abs(v - (r + beta * p @ v))))
    if residual > max(tolerance, 1e-8 * (1.0 + np.max(np.abs(v)))):
        raise RuntimeError(f"fixed-point residual {residual} exceeds tolerance")
    return ValueSolution(grid=np.arange(p.shape[0]), values=v, residual=residual)


def policy_value(
    density: Integrand,
    policy: PolicySpec,
    t: Trajectory,
    grid: np.ndarray | None = None,
    tolerance: float = 1e-10,
) -> ValueSolution:
    """Value function of the policy under the plugged transition density."""
    grid = state_grid() if grid is None else np.asarray(grid, dtype=float)
    kernel, spread = transition_operator(density, policy, t, grid)
    r = np.asarray(policy.reward(grid), dtype=float)
    r = np.broadcast_to(r, grid.shape).astype(float)
    if np.max(np.abs(r)) > policy.reward_sup + 1e-9:
        raise ValueError("reward exceeded its declared sup-norm on the grid")
    sol = solve_value(kernel, r, policy.beta, tolerance)
    bound = policy.reward_sup / (1.0 - policy.beta)
    if np.max(np.abs(sol.values)) > bound + max(tolerance, 1e-8 * bound):
        raise RuntimeError("value solution violated its sup-norm bound")
    return ValueSolution(grid=grid, values=sol.values, residual=sol.residual, renorm_spread=spread)


def ope_error_bound_check(
    true_density: Integrand,
    est_density: Integrand,
    policy: PolicySpec,
    t: Trajectory,
    grid: np.ndarray | None = None,
    m: EmpiricalMeasure | None = None,
    slack: float = OPE_SLACK,
) -> tuple[float, float, bool]:
    """Evaluation-error certificate: the empirical L2 distance between the
    two value functions (interpolated at the observed states) against the
    discount-amplified Hellinger bound."""
    grid = state_grid() if grid is None else np.asarray(grid, dtype=float)
    m = m or EmpiricalMeasure(t)
    true_v = policy_value(true_density, policy, t, grid)
    est_v = policy_value(est_density, policy, t, grid)
    diff = np.interp(t.x, grid, true_v.values - est_v.values)
    lhs = math.sqrt(float(np.mean(diff * diff)))
    beta = policy.beta
    h2 = hellinger_sq(true_density, est_density, m)
    rhs = (2.0 * SQRT2 * beta / (1.0 - beta) ** 2) * policy.reward_sup * h2
    return lhs, rhs, bool(lhs <= rhs + slack)


def hellinger_shift_gap(
    s0: Integrand,
    s_star: Integrand,
    stationary_weights: np.ndarray,
    quads: Sequence[Quadrature] | None = None,
) -> float:
    """Squared root-density gap between the nominal and shifted laws, with
    the conditioning state weighted by a stationary proxy on the x-grid and
    the remaining axes integrated uniformly. Values lie in [0, 2]."""
    w = np.asarray(stationary_weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("stationary weights must be nonnegative")
    total = w.sum()
    if not total > 0:
        raise ValueError("stationary weights must have positive mass")
    w = w / total
    if quads is None:
        qa = qg = Quadrature.midpoint(16)
        qy = Quadrature.midpoint(256)
    else:
        qa, qg, qy = quads
    qx = Quadrature(state_grid(w.size), w, scheme="stationary-proxy")
    x = qx.nodes[:, None, None, None]
    a = qa.nodes[None, :, None, None]
    g = qg.nodes[None, None, :, None]
    y = qy.nodes[None, None, None, :]
    shape = (qx.nodes.size, qa.nodes.size, qg.nodes.size, qy.nodes.size)
    v0 = np.broadcast_to(np.asarray(s0(x, a, g, y), dtype=float), shape)
    v1 = np.broadcast_to(np.asarray(s_star(x, a, g, y), dtype=float), shape)
    diff = np.sqrt(np.clip(v0, 0.0, None)) - np.sqrt(np.clip(v1, 0.0, None))
    wts = (
        qx.weights[:, None, None, None]
        * qa.weights[None, :, None, None]
        * qg.weights[None, None, :, None]
        * qy.weights[None, None, None, :]
    )
    return float(np.sum(diff * diff * wts))


def occupation_histogram(t: Trajectory, bins: int = 32) -> np.ndarray:
    """Empirical state-occupation histogram (probability vector over uniform
    cells), used as a stationary-measure proxy."""
    counts, _ = np.histogram(t.x, bins=bins, range=(0.0, 1.0))
    return counts / counts.sum()


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("histograms must share a shape")
    return float(0.5 * np.sum(np.abs(p - q)))


@dataclass(frozen=True)
class ShiftReport:
    test_risk: float
    oracle_risk: float
    shift_gap: float
    tv_term: float
    bound: float
    holds: bool
    selected_label: str


def shift_risk_report(
    train: Trajectory,
    test: Trajectory,
    candidates,
    cfg: SelectorConfig,
    s0: Integrand,
    s_star: Integrand,
    bins: int = 32,
    slack: float = 0.5,
) -> ShiftReport:
    """Select on the training log, score on the shifted test log, and check
    the risk decomposition: test risk is controlled by the training oracle
    plus the shift gap plus a total-variation occupancy mismatch, up to a
    documented constant slack."""
    m_train = EmpiricalMeasure(train)
    m_test = EmpiricalMeasure(test)
    result = select(candidates, m_train, cfg)
    test_risk = hellinger_sq(s_star, result.selected, m_test)
    n = train.n
    oracle = min(
        hellinger_sq(s0, c, m_train) + cfg.penalty_weight * c.penalty / n
        for c in candidates
    )
    occ_train = occupation_histogram(train, bins)
    occ_test = occupation_histogram(test, bins)
    gap = hellinger_shift_gap(s0, s_star, occ_test)
    tv = tv_distance(occ_train, occ_test)
    bound = oracle + gap + tv + slack
    return ShiftReport(
        test_risk=float(test_risk),
        oracle_risk=float(oracle),
        shift_gap=float(gap),
        tv_term=float(tv),
        bound=float(bound),
        holds=bool(test_risk <= bound),
        selected_label=result.selected.label,
    )
