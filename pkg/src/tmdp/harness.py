"""Replication sweeps: fixed-complexity risk tables, sample-size rate
studies, regret curves, and policy-evaluation bound checks.

Every sweep derives per-replication seeds from (seed, replication index), so
results are reproducible and independent of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from tmdp.costs import CostSpec, empirical_cost, regret, select_control
from tmdp.losses import CandidateDensity, _PairCache, hellinger_sq
from tmdp.measures import EmpiricalMeasure, Trajectory
from tmdp.models import ClassConfig, enumerate_candidates
from tmdp.ope import PolicySpec, ope_error_bound_check
from tmdp.selector import SelectorConfig, select
from tmdp.simulate import SimModel, TransitionDensity, simulate, true_density

TABLE1_LEVELS = tuple(range(1, 11))


def replication_seed(seed: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(rep)])


def _map_reps(worker: Callable[[int], object], reps: int, jobs: int) -> list:
    if jobs > 1:
        from joblib import Parallel, delayed

        return Parallel(n_jobs=jobs)(delayed(worker)(r) for r in range(reps))
    return [worker(r) for r in range(reps)]


@dataclass(frozen=True)
class Table1Result:
    """Mean fixed-complexity errors per model, mirroring a risk-curve table:
    one histogram row and one polynomial row per model, levels 1..10."""

    models: tuple[str, ...]
    levels: tuple[int, ...]
    hist_mean: np.ndarray  # (models, levels)
    hist_std: np.ndarray
    spline_mean: np.ndarray
    spline_std: np.ndarray
    hist_choice: dict[str, list[int]]
    spline_choice: dict[str, list[int]]
    replications: int
    n: int
    seed: int

    def rows(self) -> list[dict]:
        out = []
        for mi, kind in enumerate(self.models):
            for li, level in enumerate(self.levels):
                out.append(
                    {
                        "model": kind,
                        "family": "histogram",
                        "level": level,
                        "mean_risk": float(self.hist_mean[mi, li]),
                        "std_risk": float(self.hist_std[mi, li]),
                    }
                )
            for li, level in enumerate(self.levels):
                out.append(
                    {
                        "model": kind,
                        "family": "spline",
                        "level": level,
                        "mean_risk": float(self.spline_mean[mi, li]),
                        "std_risk": float(self.spline_std[mi, li]),
                    }
                )
        return out


def _table1_rep(kind: str, n: int, seed: int, rep: int, cfg: SelectorConfig):
    model = SimModel(kind=kind)
    t = simulate(model, n, replication_seed(seed, rep))
    m = EmpiricalMeasure(t)
    truth = true_density(model)
    cache = _PairCache(m)

    hists = enumerate_candidates(t, ClassConfig.table1_histograms())
    splines = enumerate_candidates(t, ClassConfig.table1_splines())
    hist_risk = [hellinger_sq(truth, c, m, cache) for c in hists]
    spline_risk = [hellinger_sq(truth, c, m, cache) for c in splines]
    hist_pick = select(hists, m, cfg).selected
    spline_pick = select(splines, m, cfg).selected
    return (
        hist_risk,
        spline_risk,
        hists.index(hist_pick) + 1,
        splines.index(spline_pick) + 1,
    )


def run_table1(
    kinds: Sequence[str] = ("I", "II", "III"),
    n: int = 1000,
    reps: int = 50,
    seed: int = 0,
    jobs: int = 1,
    cfg: SelectorConfig = SelectorConfig(),
) -> Table1Result:
    """Fixed-complexity mean errors over replications for each model, with
    the selector's chosen level recorded per replication."""
    levels = TABLE1_LEVELS
    hist_mean = np.zeros((len(kinds), len(levels)))
    hist_std = np.zeros_like(hist_mean)
    spl_mean = np.zeros_like(hist_mean)
    spl_std = np.zeros_like(hist_mean)
    hist_choice: dict[str, list[int]] = {}
    spl_choice: dict[str, list[int]] = {}
    for mi, kind in enumerate(kinds):
        results = _map_reps(
            lambda r: _table1_rep(kind, n, seed, r, cfg), reps, jobs
        )
        hr = np.array([res[0] for res in results])
        sr = np.array([res[1] for res in results])
        hist_mean[mi] = hr.mean(axis=0)
        hist_std[mi] = hr.std(axis=0)
        spl_mean[mi] = sr.mean(axis=0)
        spl_std[mi] = sr.std(axis=0)
        hist_choice[kind] = [res[2] for res in results]
        spl_choice[kind] = [res[3] for res in results]
    return Table1Result(
        models=tuple(kinds),
        levels=levels,
        hist_mean=hist_mean,
        hist_std=hist_std,
        spline_mean=spl_mean,
        spline_std=spl_std,
        hist_choice=hist_choice,
        spline_choice=spl_choice,
        replications=reps,
        n=n,
        seed=seed,
    )


@dataclass(frozen=True)
class RiskSweepResult:
    ns: tuple[int, ...]
    mean_risk: np.ndarray
    mean_oracle: np.ndarray
    max_ratio: float
    slope: float


def log_log_slope(ns: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(ns)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.maximum(np.asarray(values, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def _risk_rep(
    model: SimModel,
    class_config: ClassConfig,
    n: int,
    seed: int,
    rep: int,
    cfg: SelectorConfig,
):
    t = simulate(model, n, replication_seed(seed, rep))
    m = EmpiricalMeasure(t)
    candidates = enumerate_candidates(t, class_config)
    truth = true_density(model)
    result = select(candidates, m, cfg)
    cache = _PairCache(m)
    risk = hellinger_sq(truth, result.selected, m, cache)
    oracle = min(
        hellinger_sq(truth, c, m, cache) + cfg.penalty_weight * c.penalty / n
        for c in candidates
    )
    return risk, oracle


def risk_sweep(
    model: SimModel,
    ns: Sequence[int],
    reps: int = 50,
    class_config: ClassConfig | None = None,
    seed: int = 0,
    jobs: int = 1,
    cfg: SelectorConfig = SelectorConfig(),
) -> RiskSweepResult:
    """Mean selected-estimator risk and penalized-oracle risk per sample
    size, with the largest risk/oracle ratio and the log-log risk slope."""
    class_config = class_config or ClassConfig.table1_histograms()
    mean_risk, mean_oracle = [], []
    for ni, n in enumerate(ns):
        results = _map_reps(
            lambda r: _risk_rep(model, class_config, n, seed + 7919 * ni, r, cfg),
            reps,
            jobs,
        )
        risks = np.array([a for a, _ in results])
        oracles = np.array([b for _, b in results])
        mean_risk.append(float(risks.mean()))
        mean_oracle.append(float(oracles.mean()))
    ratios = np.array(mean_risk) / np.array(mean_oracle)
    return RiskSweepResult(
        ns=tuple(int(n) for n in ns),
        mean_risk=np.array(mean_risk),
        mean_oracle=np.array(mean_oracle),
        max_ratio=float(ratios.max()),
        slope=log_log_slope(ns, mean_risk),
    )


def lipschitz_model(halfwidth: float = 0.8) -> SimModel:
    """Triangular-noise chain whose clipped transition density is Lipschitz
    in every coordinate, used for rate studies."""
    return SimModel(kind="tent", tent_halfwidth=halfwidth)


def lipschitz_rate_config() -> ClassConfig:
    """All-axes refinement ladder for the smooth-density rate study."""
    depths = (
        (0, 0, 0, 1),
        (1, 0, 1, 1),
        (1, 0, 1, 2),
        (2, 0, 2, 2),
        (2, 0, 2, 3),
        (3, 0, 3, 3),
    )
    return ClassConfig(histogram_depths=depths)


def regret_model(curvature: float = 0.6, floor: float = 0.2, controls: int = 32) -> tuple[SimModel, CostSpec]:
    """Control-augmented variant of the linear benchmark chain for regret
    studies: the logged control is exogenous on a dyadic grid and tilts the
    mass that the next state puts below 1/2.

    The mass below 1/2 is floor + curvature*(a - 1/2)^2, so the true cost of
    the matching threshold objective is a smooth quadratic in the control
    with an interior optimum and no argmin gap on a fine grid.
    """
    if controls & (controls - 1):
        raise ValueError("control count must be a power of two")
    grid = tuple((np.arange(controls) + 0.5) / controls)

    def q_of(a):
        return floor + curvature * (np.asarray(a, float) - 0.5) ** 2

    def density_fn(x, a, g, y):
        q = q_of(a)
        lo = 2.0 * q
        hi = 2.0 * (1.0 - q)
        return np.where(np.asarray(y, float) < 0.5, lo, hi) + 0.0 * np.asarray(x, float)

    def sampler_fn(rng, x, g):
        # The control for this step is drawn by the caller; the sampler only
        # sees (x, g), so the chain itself mixes over controls uniformly.
        a = rng.choice(grid)
        q = q_of(a)
        if rng.uniform() < q:
            return rng.uniform(0.0, 0.5)
        return rng.uniform(0.5, 1.0)

    model = SimModel(
        kind="custom",
        control_role="exogenous",
        control_grid=grid,
        context_grid=(0.5,),
        density_fn=density_fn,
        sampler_fn=sampler_fn,
    )
    cost = CostSpec(
        lambda x, a, g, y: (np.asarray(y, float) < 0.5).astype(float)
        + 0.0 * np.asarray(x, float),
        sup_norm=1.0,
        control_grid=grid,
        label="below-half",
    )
    return model, cost


def _simulate_regret_log(
    model: SimModel, n: int, seed_seq
) -> Trajectory:
    """Regret-study log: controls drawn first, next states drawn from the
    control-tilted two-cell law."""
    rng = np.random.default_rng(seed_seq)
    grid = np.asarray(model.control_grid, float)
    a = rng.choice(grid, size=n)
    g = np.full(n, model.context_grid[0])
    truth = TransitionDensity(model)
    q = truth.pdf(np.zeros(n), a, g, np.full(n, 0.25)) / 2.0
    below = rng.uniform(size=n) < q
    y = np.where(below, rng.uniform(0.0, 0.5, n), rng.uniform(0.5, 1.0, n))
    x = np.empty(n)
    x[0] = 0.5
    x[1:] = y[:-1]
    return Trajectory(x, a, g, y, contiguous=True)


def regret_class(controls: int = 16, y_depths: Sequence[int] = (1, 2, 3)) -> ClassConfig:
    depth_a = int(math.log2(controls))
    return ClassConfig(
        histogram_depths=tuple((0, depth_a, 0, d) for d in y_depths)
    )


@dataclass(frozen=True)
class RegretSweepResult:
    ns: tuple[int, ...]
    mean_regret: np.ndarray
    slope: float


def _regret_rep(
    model: SimModel,
    cost: CostSpec,
    class_config: ClassConfig,
    n: int,
    seed: int,
    rep: int,
    cfg: SelectorConfig,
) -> float:
    t = _simulate_regret_log(model, n, replication_seed(seed, rep))
    m = EmpiricalMeasure(t)
    candidates = enumerate_candidates(t, class_config)
    selected = select(candidates, m, cfg).selected
    truth = TransitionDensity(model)
    return regret(truth, selected, cost, m)


def regret_sweep(
    ns: Sequence[int] = (250, 354, 500, 707, 1000, 1414, 2000, 2828, 4000),
    reps: int = 50,
    seed: int = 0,
    jobs: int = 1,
    cfg: SelectorConfig = SelectorConfig(),
    controls: int = 32,
) -> RegretSweepResult:
    """Mean plug-in control regret per sample size with its log-log slope."""
    model, cost = regret_model(controls=controls)
    class_config = regret_class(controls=controls)
    means = []
    for ni, n in enumerate(ns):
        vals = _map_reps(
            lambda r: _regret_rep(
                model, cost, class_config, n, seed + 104729 * ni, r, cfg
            ),
            reps,
            jobs,
        )
        means.append(float(np.mean(vals)))
    return RegretSweepResult(
        ns=tuple(int(n) for n in ns),
        mean_regret=np.array(means),
        slope=log_log_slope(ns, means),
    )


@dataclass(frozen=True)
class OpeSweepResult:
    lhs: np.ndarray
    rhs: np.ndarray
    holds: np.ndarray
    all_hold: bool


def default_ope_policy(beta: float = 0.9) -> PolicySpec:
    return PolicySpec(
        policy=lambda x, g: 0.5 + 0.0 * np.asarray(x, float),
        beta=beta,
        reward=lambda x: np.asarray(x, float),
        reward_sup=1.0,
        label="midpoint-control",
    )


def _ope_rep(
    kind: str,
    n: int,
    beta: float,
    seed: int,
    rep: int,
    cfg: SelectorConfig,
    grid_nodes: int,
):
    model = SimModel(kind=kind)
    t = simulate(model, n, replication_seed(seed, rep))
    m = EmpiricalMeasure(t)
    candidates = enumerate_candidates(t, ClassConfig.table1_histograms())
    selected = select(candidates, m, cfg).selected
    truth = true_density(model)
    policy = default_ope_policy(beta)
    grid = (np.arange(grid_nodes) + 0.5) / grid_nodes
    return ope_error_bound_check(truth, selected, policy, t, grid, m)


def ope_sweep(
    kind: str = "I",
    n: int = 1000,
    beta: float = 0.9,
    reps: int = 50,
    seed: int = 0,
    jobs: int = 1,
    cfg: SelectorConfig = SelectorConfig(),
    grid_nodes: int = 64,
) -> OpeSweepResult:
    """Replication check of the policy-evaluation error certificate."""
    results = _map_reps(
        lambda r: _ope_rep(kind, n, beta, seed, r, cfg, grid_nodes), reps, jobs
    )
    lhs = np.array([a for a, _, _ in results])
    rhs = np.array([b for _, b, _ in results])
    holds = np.array([h for _, _, h in results])
    return OpeSweepResult(lhs=lhs, rhs=rhs, holds=holds, all_hold=bool(holds.all()))
