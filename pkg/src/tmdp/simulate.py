"""Seeded trajectory generators: the three Gaussian-type benchmark models,
a Lipschitz tent-noise model for rate checks, the finite-chain hard-instance
family, and shifted train/test pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from tmdp.measures import Trajectory

MODEL_KINDS = ("I", "II", "III", "tent", "custom")


def sigmoid(v):
    return 1.0 / (1.0 + np.exp(-np.asarray(v, dtype=float)))


@dataclass(frozen=True)
class NoiseSpec:
    """Sigmoid state-dependent noise variance: scale * sigmoid(slope * (x -
    center)) + offset. The defaults keep the standard deviation in roughly
    [0.045, 0.15]."""

    scale: float = 0.02
    slope: float = 4.0
    center: float = 0.5
    offset: float = 0.002

    def variance(self, x) -> np.ndarray:
        lam = self.scale * sigmoid(self.slope * (np.asarray(x, float) - self.center))
        lam = lam + self.offset
        if np.any(lam < 0):
            raise ValueError("noise variance must be nonnegative")
        return lam


def _mean_model1(x, g):
    return 0.5 * x + (1.0 + g) / 4.0


def _mean_model2(x, g):
    return 0.5 * (x + g)


def _mean_model3(x, g):
    return x / (50.0 * x + 1.0) + x * g


_MEANS = {"I": _mean_model1, "II": _mean_model2, "III": _mean_model3}


@dataclass(frozen=True)
class SimModel:
    """Transition-model spec for the simulation harness.

    ``control_role`` picks how the logged control column is filled: "noise"
    records the realized additive disturbance (clipped into [0,1]), while
    "exogenous" draws an independent control from ``control_grid`` (uniform
    on [0,1] if the grid is empty) that does not enter the dynamics.
    """

    kind: str = "I"
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    context_grid: tuple[float, ...] = ()  # empty = Uniform[0,1] contexts
    clip: bool = True
    control_role: str = "noise"
    control_grid: tuple[float, ...] = ()
    x0: float | None = None
    tent_halfwidth: float = 0.8
    mean_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    density_fn: Callable[..., np.ndarray] | None = None
    sampler_fn: Callable[..., np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.control_role not in ("noise", "exogenous"):
            raise ValueError(f"unknown control role {self.control_role!r}")
        if self.kind == "custom" and self.mean_fn is None and self.sampler_fn is None:
            raise ValueError("custom model needs a mean function or sampler")

    def mean(self, x, g) -> np.ndarray:
        if self.kind == "tent":
            return _mean_model2(x, g)
        if self.kind == "custom":
            if self.mean_fn is None:
                raise ValueError("custom model has no mean function")
            return self.mean_fn(np.asarray(x, float), np.asarray(g, float))
        return _MEANS[self.kind](np.asarray(x, float), np.asarray(g, float))


def simulate(model: SimModel, n: int, seed) -> Trajectory:
    """Generate a contiguous length-n trajectory from the model, reproducibly
    in the seed (an int or a numpy SeedSequence)."""
    if n < 3:
        raise ValueError("need n >= 3")
    rng = np.random.default_rng(seed)
    contexts = _draw_contexts(model, rng, n)
    x = np.empty(n + 1)
    x[0] = rng.uniform() if model.x0 is None else float(model.x0)
    noise = np.empty(n)

    if model.kind == "tent":
        tri = rng.triangular(-1.0, 0.0, 1.0, size=n) * model.tent_halfwidth
        for k in range(n):
            noise[k] = tri[k]
            x[k + 1] = model.mean(x[k], contexts[k]) + tri[k]
            if model.clip:
                x[k + 1] = min(max(x[k + 1], 0.0), 1.0)
    elif model.kind == "custom" and model.sampler_fn is not None:
        for k in range(n):
            x[k + 1] = model.sampler_fn(rng, x[k], contexts[k])
            noise[k] = x[k + 1] - x[k]
            if model.clip:
                x[k + 1] = min(max(x[k + 1], 0.0), 1.0)
    else:
        eps = rng.standard_normal(n)
        for k in range(n):
            w = eps[k] * math.sqrt(model.noise.variance(x[k]))
            noise[k] = w
            x[k + 1] = model.mean(x[k], contexts[k]) + w
            if model.clip:
                x[k + 1] = min(max(x[k + 1], 0.0), 1.0)

    if model.control_role == "noise":
        controls = np.clip(noise, 0.0, 1.0)
    elif model.control_grid:
        controls = rng.choice(np.asarray(model.control_grid, float), size=n)
    else:
        controls = rng.uniform(size=n)
    return Trajectory(x[:-1], controls, contexts, x[1:], contiguous=True)


def _draw_contexts(model: SimModel, rng: np.random.Generator, n: int) -> np.ndarray:
    if model.context_grid:
        return rng.choice(np.asarray(model.context_grid, float), size=n)
    return rng.uniform(size=n)


class TransitionDensity:
    """Evaluable true transition law implied by a model.

    ``pdf`` is the raw conditional density of the pre-clipping next state;
    calling the object clips values into [0, 1] for candidate comparisons.
    With ``clip`` on, the mass that the raw law puts outside [0, 1] sits in
    boundary atoms reported by :meth:`boundary_atoms`.
    """

    def __init__(self, model: SimModel):
        if model.kind == "custom" and model.density_fn is None:
            raise ValueError("custom model has no density evaluator")
        self.model = model
        self.label = f"true-{model.kind}"

    def pdf(self, x, a, g, y) -> np.ndarray:
        model = self.model
        if model.kind == "custom":
            return np.asarray(model.density_fn(x, a, g, y), dtype=float)
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        mean = model.mean(x, np.asarray(g, float))
        if model.kind == "tent":
            w = model.tent_halfwidth
            return np.maximum(0.0, 1.0 - np.abs(y - mean) / w) / w
        var = model.noise.variance(x)
        return np.exp(-((y - mean) ** 2) / (2.0 * var)) / np.sqrt(2.0 * math.pi * var)

    def __call__(self, x, a, g, y) -> np.ndarray:
        return np.clip(self.pdf(x, a, g, y), 0.0, 1.0)

    def boundary_atoms(self, x, a, g) -> tuple[np.ndarray, np.ndarray]:
        """Mass clipped onto the endpoints 0 and 1 for given conditions."""
        model = self.model
        if not model.clip:
            z = np.zeros(np.shape(np.asarray(x, float)))
            return z, z.copy()
        if model.kind == "tent":
            w = model.tent_halfwidth
            mean = model.mean(x, g)
            lo = np.clip((1.0 - (0.0 - (mean - w)) / w), 0.0, 1.0)
            # Integrate the tent outside [0,1] explicitly.
            return _tent_tail(mean, w, below=True), _tent_tail(mean, w, below=False)
        mean = model.mean(np.asarray(x, float), np.asarray(g, float))
        sd = np.sqrt(model.noise.variance(x))
        lo = _norm_cdf((0.0 - mean) / sd)
        hi = 1.0 - _norm_cdf((1.0 - mean) / sd)
        return lo, hi


def _norm_cdf(z):
    return 0.5 * (1.0 + np.vectorize(math.erf)(np.asarray(z, float) / math.sqrt(2.0)))


def _tent_tail(mean, w, below: bool):
    mean = np.asarray(mean, float)
    if below:
        edge = np.clip((0.0 - (mean - w)) / w, 0.0, 1.0)
    else:
        edge = np.clip(((mean + w) - 1.0) / w, 0.0, 1.0)
    return 0.5 * edge**2


def true_density(model: SimModel) -> TransitionDensity:
    return TransitionDensity(model)


def simulate_shifted(
    model: SimModel, shift: SimModel, n: int, m: int, seed
) -> tuple[Trajectory, Trajectory]:
    """Independent train/test pair: train from ``model``, test from ``shift``,
    with deterministically split seed streams."""
    train_seed, test_seed = np.random.SeedSequence(seed).spawn(2)
    return simulate(model, n, train_seed), simulate(shift, m, test_seed)


@dataclass(frozen=True)
class MinimaxInstance:
    """Finite-chain hard-instance family on d + 1 states with a perturbed
    last row under control 1 and a uniform last row under control 2."""

    d: int
    p_star1: float
    epsilon: float
    sigma: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.d < 2 or self.d % 2:
            raise ValueError("d must be an even integer >= 2")
        if len(self.sigma) != self.d // 2 or any(s not in (-1, 1) for s in self.sigma):
            raise ValueError("sigma must be a vector in {-1,+1}^(d/2)")
        if not 0 < self.p_star1:
            raise ValueError("p_star1 must be positive")
        if not self.p_star2 < 1.0 / (self.d + 2):
            raise ValueError("p_star2 must be below 1/(d+2)")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        eta = self._eta(1)
        if np.any(eta < 0):
            raise ValueError("epsilon too large: perturbed row leaves the simplex")

    @property
    def p_star2(self) -> float:
        return self.p_star1 + 15.0 * self.epsilon / self.d

    @property
    def mistake_cost(self) -> float:
        """Designed regret of choosing control 1 over control 2."""
        return 16.0 * self.epsilon / self.d**2

    def p_star(self, control: int) -> float:
        if control == 1:
            return self.p_star1
        if control == 2:
            return self.p_star2
        raise ValueError("control must be 1 or 2")

    def _eta(self, control: int) -> np.ndarray:
        p = self.p_star(control)
        base = (1.0 - p) / self.d
        eta = np.full(self.d, base)
        if control == 1:
            for j, s in enumerate(self.sigma):
                eta[2 * j] += 16.0 * s * self.epsilon / self.d
                eta[2 * j + 1] -= 16.0 * s * self.epsilon / self.d
        return eta


def minimax_instance(inst: MinimaxInstance, control: int) -> np.ndarray:
    """Transition matrix over the d + 1 states for the given control: rows
    1..d share the unperturbed law, row d + 1 carries the eta row."""
    p = inst.p_star(control)
    d = inst.d
    base_row = np.concatenate([np.full(d, (1.0 - p) / d), [p]])
    mat = np.tile(base_row, (d + 1, 1))
    mat[d, :d] = inst._eta(control)
    mat[d, d] = p
    return mat


def minimax_stationary(inst: MinimaxInstance, control: int) -> np.ndarray:
    """Closed-form stationary vector of the instance chain."""
    p = inst.p_star(control)
    eta = inst._eta(control)
    pi = np.empty(inst.d + 1)
    pi[: inst.d] = (1.0 - p) ** 2 / inst.d + eta * p
    pi[inst.d] = p
    return pi


def simulate_chain(
    inst: MinimaxInstance, control: int, length: int, seed
) -> np.ndarray:
    """Sample a state path (1-based labels) from the instance chain, started
    from the unperturbed row distribution."""
    rng = np.random.default_rng(seed)
    mat = minimax_instance(inst, control)
    p0 = mat[0]
    states = np.empty(length + 1, dtype=np.int64)
    states[0] = rng.choice(inst.d + 1, p=p0)
    for k in range(length):
        states[k + 1] = rng.choice(inst.d + 1, p=mat[states[k]])
    return states + 1


def encode_chain_state(state, d: int) -> np.ndarray:
    """Map 1-based chain states into cell midpoints of [0, 1]."""
    return (np.asarray(state, dtype=float) - 0.5) / (d + 1)


def decode_chain_state(x, d: int) -> np.ndarray:
    idx = np.floor(np.asarray(x, dtype=float) * (d + 1)).astype(np.int64)
    return np.clip(idx, 0, d) + 1


def chain_density(inst: MinimaxInstance, matrices: dict[int, np.ndarray] | None = None):
    """Continuous embedding of the instance transition matrices: a density
    with respect to Lebesgue measure that is constant on the (d+1)-cell grid,
    dispatching on the encoded control (1 or 2)."""
    d = inst.d
    mats = matrices or {1: minimax_instance(inst, 1), 2: minimax_instance(inst, 2)}

    def fn(x, a, g, y):
        ix = decode_chain_state(x, d) - 1
        iy = decode_chain_state(y, d) - 1
        ctrl = np.where(np.asarray(a, float) < 0.5, 1, 2)
        m1, m2 = mats[1], mats[2]
        out = np.where(ctrl == 1, m1[ix, iy], m2[ix, iy])
        return out * (d + 1)

    return fn


def encode_chain_control(control) -> np.ndarray:
    """Controls 1 and 2 map to the two cell midpoints of [0, 1]."""
    return (np.asarray(control, dtype=float) - 0.5) / 2.0


def chain_trajectory(
    inst: MinimaxInstance,
    controls: Sequence[int],
    seed,
    g0: float = 0.5,
) -> Trajectory:
    """Offline log for the instance: at each step the logged control draws
    the matching chain; states are encoded into [0, 1] cell midpoints."""
    rng = np.random.default_rng(seed)
    mats = {1: minimax_instance(inst, 1), 2: minimax_instance(inst, 2)}
    n = len(controls)
    states = np.empty(n + 1, dtype=np.int64)
    states[0] = rng.choice(inst.d + 1, p=mats[int(controls[0])][0])
    for k in range(n):
        states[k + 1] = rng.choice(inst.d + 1, p=mats[int(controls[k])][states[k]])
    x = encode_chain_state(states[:-1] + 1, inst.d)
    y = encode_chain_state(states[1:] + 1, inst.d)
    a = encode_chain_control(np.asarray(controls, dtype=float))
    g = np.full(n, g0)
    return Trajectory(x, a, g, y, contiguous=True)
