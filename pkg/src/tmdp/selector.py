"""Penalized pairwise-contrast selection over a finite candidate list."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from tmdp.losses import CandidateDensity, _PairCache, hellinger_sq, t_functional
from tmdp.measures import EmpiricalMeasure, Integrand

DEFAULT_ALPHA = (math.sqrt(2.0) - 1.0) / (2.0 * math.sqrt(2.0))
TIE_TOL = 1e-12


@dataclass(frozen=True)
class SelectorConfig:
    alpha: float = DEFAULT_ALPHA
    penalty_weight: float = 1.0  # the L knob; theory wants L >= some L0
    sup_tolerance: float = 0.0  # reserved for approximate sup search

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.penalty_weight < 0:
            raise ValueError("penalty weight must be nonnegative")


@dataclass(frozen=True)
class SelectionResult:
    selected: CandidateDensity
    contrast_values: np.ndarray
    t_matrix: np.ndarray
    ties: tuple[str, ...]
    labels: tuple[str, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "selected": self.selected.label,
                "labels": list(self.labels),
                "contrast_values": [float(v) for v in self.contrast_values],
                "ties": list(self.ties),
            },
            indent=2,
        )


def _pair_matrices(
    candidates: Sequence[CandidateDensity],
    m: EmpiricalMeasure,
    cache: _PairCache | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise squared-Hellinger and comparison matrices; the comparison
    matrix is filled by antisymmetry from the upper triangle."""
    cache = cache or _PairCache(m)
    k = len(candidates)
    h2 = np.zeros((k, k))
    tm = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            h2[i, j] = h2[j, i] = hellinger_sq(candidates[i], candidates[j], m, cache)
            tm[i, j] = t_functional(candidates[i], candidates[j], m, cache)
            tm[j, i] = -tm[i, j]
    return h2, tm


def _contrast_from_matrices(
    h2: np.ndarray, tm: np.ndarray, penalties: np.ndarray, n: int, cfg: SelectorConfig
) -> np.ndarray:
    pen = cfg.penalty_weight * penalties / n
    inner = cfg.alpha * h2 + tm - pen[None, :]
    return inner.max(axis=1) + pen


def contrast(
    f: CandidateDensity,
    candidates: Sequence[CandidateDensity],
    m: EmpiricalMeasure,
    cfg: SelectorConfig = SelectorConfig(),
) -> float:
    """Penalized sup-comparison of f against every candidate in the list."""
    if not candidates:
        raise ValueError("candidate list is empty")
    if not any(c is f for c in candidates):
        raise ValueError("f must be a member of the candidate list")
    cache = _PairCache(m)
    n = m.base.n
    pen = np.array([cfg.penalty_weight * c.penalty / n for c in candidates])
    inner = [
        cfg.alpha * hellinger_sq(f, c, m, cache)
        + t_functional(f, c, m, cache)
        - pen[i]
        for i, c in enumerate(candidates)
    ]
    return float(max(inner) + cfg.penalty_weight * f.penalty / n)


def select(
    candidates: Sequence[CandidateDensity],
    m: EmpiricalMeasure,
    cfg: SelectorConfig = SelectorConfig(),
) -> SelectionResult:
    """Minimize the penalized contrast; ties broken by smaller penalty, then
    lexicographic label, with all co-minimizers reported."""
    if not candidates:
        raise ValueError("candidate list is empty")
    h2, tm = _pair_matrices(candidates, m)
    penalties = np.array([c.penalty for c in candidates])
    values = _contrast_from_matrices(h2, tm, penalties, m.base.n, cfg)
    best = values.min()
    tie_idx = np.flatnonzero(values <= best + TIE_TOL)
    order = sorted(tie_idx, key=lambda i: (candidates[i].penalty, candidates[i].label))
    labels = tuple(c.label for c in candidates)
    return SelectionResult(
        selected=candidates[order[0]],
        contrast_values=values,
        t_matrix=tm,
        ties=tuple(candidates[i].label for i in order),
        labels=labels,
    )


def oracle_gap_report(
    candidates: Sequence[CandidateDensity],
    m: EmpiricalMeasure,
    cfg: SelectorConfig,
    true_s: Integrand,
) -> tuple[float, float, float]:
    """Simulation-mode diagnostic: achieved risk, best penalized candidate
    risk, and their ratio."""
    result = select(candidates, m, cfg)
    cache = _PairCache(m)
    risk = hellinger_sq(true_s, result.selected, m, cache)
    n = m.base.n
    oracle = min(
        hellinger_sq(true_s, c, m, cache) + cfg.penalty_weight * c.penalty / n
        for c in candidates
    )
    return risk, oracle, risk / oracle
