"""Loss kernel, Hellinger distance, comparison functional, and the
inequality checkers."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tmdp.losses import (
    CandidateDensity,
    check_bernstein_var_bound,
    check_mb_eb_bound,
    hellinger_sq,
    l2_sqrt_distance_sq,
    phi,
    psi,
    t_functional,
)
from tmdp.measures import EmpiricalMeasure, Quadrature, Trajectory
from tmdp.models import DyadicPartition, fit_histogram

SQRT2 = math.sqrt(2.0)


def const_candidate(c, label="const"):
    return CandidateDensity(
        fn=lambda x, a, g, y, c=c: c + 0.0 * np.asarray(y, float),
        dim=1,
        penalty=1.0,
        label=label,
    )


def step_density(lo, hi):
    """Raw two-level function of the next state (no clipping applied)."""
    return lambda x, a, g, y: np.where(np.asarray(y, float) < 0.5, lo, hi) + 0.0 * np.asarray(x, float)


def fixture_measure():
    t = Trajectory.from_samples(
        [
            (0.12, 0.40, 0.55, 0.31),
            (0.31, 0.40, 0.55, 0.62),
            (0.62, 0.15, 0.80, 0.07),
            (0.07, 0.15, 0.80, 0.93),
            (0.93, 0.70, 0.25, 0.48),
        ]
    )
    return EmpiricalMeasure(t, Quadrature.exact_piecewise(1024))


class TestPsi:
    def test_frozen_values(self):
        assert psi(1.0, 4.0) == pytest.approx(1.0 / math.sqrt(10.0), abs=1e-15)
        assert psi(0.0, 1.0) == pytest.approx(1.0 / SQRT2, abs=1e-15)
        assert psi(1.0, 0.0) == pytest.approx(-1.0 / SQRT2, abs=1e-15)
        assert psi(0.0, 0.0) == 0.0
        assert psi(3.0, 3.0) == 0.0

    def test_rejects_negative_levels(self):
        with pytest.raises(ValueError):
            psi(-1.0, 2.0)

    @given(st.floats(0, 50), st.floats(0, 50))
    def test_antisymmetric_and_bounded(self, c1, c2):
        v = psi(c1, c2)
        assert v == pytest.approx(-psi(c2, c1), abs=1e-15)
        assert abs(v) <= 1.0 / SQRT2 + 1e-15

    @given(st.floats(1e-6, 50), st.floats(0, 50), st.floats(0, 50))
    def test_scale_invariant(self, s, c1, c2):
        assert psi(s * c1, s * c2) == pytest.approx(psi(c1, c2), abs=1e-10)

    def test_phi_is_half_psi(self):
        grid = np.linspace(0.0, 3.0, 7)
        np.testing.assert_allclose(
            phi(grid[:, None], grid[None, :]),
            np.asarray(psi(grid[:, None], grid[None, :])) / 2.0,
            atol=1e-15,
        )


class TestCandidateDensity:
    def test_requires_positive_penalty_and_dim(self):
        with pytest.raises(ValueError):
            const_candidate(0.5).__class__(fn=lambda *v: v[-1], dim=0, penalty=1.0, label="z")
        with pytest.raises(ValueError):
            CandidateDensity(fn=lambda *v: v[-1], dim=1, penalty=0.0, label="z")

    def test_eval_clips_into_unit_range(self):
        c = CandidateDensity(
            fn=lambda x, a, g, y: 3.0 * np.asarray(y, float) - 1.0,
            dim=1,
            penalty=1.0,
            label="ramp",
        )
        vals = c(0.0, 0.0, 0.0, np.array([0.0, 0.5, 1.0]))
        np.testing.assert_allclose(vals, [0.0, 0.5, 1.0])


class TestHellinger:
    def test_two_cell_closed_form(self):
        m = fixture_measure()
        f1 = step_density(1.6, 0.4)
        f2 = step_density(1.0, 1.0)
        expected = 0.5 * (
            0.5 * (math.sqrt(1.6) - 1.0) ** 2 + 0.5 * (math.sqrt(0.4) - 1.0) ** 2
        )
        assert hellinger_sq(f1, f2, m) == pytest.approx(expected, abs=1e-12)

    def test_constants_closed_form(self):
        m = fixture_measure()
        f1, f2 = const_candidate(1.0, "one"), const_candidate(0.25, "quarter")
        assert hellinger_sq(f1, f2, m) == pytest.approx(0.5 * 0.25, abs=1e-12)

    def test_metric_axioms_on_fits(self):
        m = fixture_measure()
        t = m.base
        f1 = fit_histogram(t, DyadicPartition((0, 0, 0, 1)))
        f2 = fit_histogram(t, DyadicPartition((1, 0, 0, 1)))
        f3 = fit_histogram(t, DyadicPartition((0, 0, 0, 2)))
        h12, h21 = hellinger_sq(f1, f2, m), hellinger_sq(f2, f1, m)
        assert h12 == pytest.approx(h21, abs=1e-15)
        assert hellinger_sq(f1, f1, m) == 0.0
        d12, d13, d23 = (math.sqrt(hellinger_sq(a, b, m)) for a, b in
                         ((f1, f2), (f1, f3), (f2, f3)))
        assert d12 <= d13 + d23 + 1e-12


class TestComparisonFunctional:
    def test_constant_closed_form(self):
        m = fixture_measure()
        c1, c2 = 0.36, 0.81
        f1, f2 = const_candidate(c1, "f1"), const_candidate(c2, "f2")
        expected = (
            psi(c1, c2)
            + math.sqrt((c1 + c2) / 2.0) * (math.sqrt(c2) - math.sqrt(c1))
            + (c1 - c2)
        )
        assert t_functional(f1, f2, m) == pytest.approx(expected, abs=1e-12)

    def test_brute_force_oracle(self):
        m = fixture_measure()
        t, q = m.base, m.quadrature
        f1 = fit_histogram(t, DyadicPartition((1, 0, 0, 1)))
        f2 = fit_histogram(t, DyadicPartition((0, 0, 0, 2)))
        # Independent recomputation with explicit loops.
        a_sum = b_sum = c_sum = 0.0
        for i in range(t.n):
            v1 = float(f1(t.x[i], t.a[i], t.g[i], t.y[i]))
            v2 = float(f2(t.x[i], t.a[i], t.g[i], t.y[i]))
            if v1 + v2 > 0:
                a_sum += (math.sqrt(v2) - math.sqrt(v1)) / (SQRT2 * math.sqrt(v1 + v2))
            for node, w in zip(q.nodes, q.weights):
                u1 = float(f1(t.x[i], t.a[i], t.g[i], node))
                u2 = float(f2(t.x[i], t.a[i], t.g[i], node))
                b_sum += w * math.sqrt((u1 + u2) / 2.0) * (math.sqrt(u2) - math.sqrt(u1))
                c_sum += w * (u1 - u2)
        expected = (a_sum + b_sum + c_sum) / t.n
        assert t_functional(f1, f2, m) == pytest.approx(expected, abs=1e-10)

    def test_exactly_antisymmetric(self):
        m = fixture_measure()
        t = m.base
        f1 = fit_histogram(t, DyadicPartition((1, 0, 1, 2)))
        f2 = fit_histogram(t, DyadicPartition((0, 1, 0, 1)))
        assert t_functional(f1, f2, m) == -t_functional(f2, f1, m)
        assert t_functional(f1, f1, m) == 0.0


class TestRootDensityDistance:
    def test_constants_closed_form(self):
        q = Quadrature.midpoint(32)
        f1 = lambda x, a, g, y: 1.0 + 0.0 * y
        f2 = lambda x, a, g, y: 0.25 + 0.0 * y
        assert l2_sqrt_distance_sq(f1, f2, q) == pytest.approx(0.25, abs=1e-12)

    def test_needs_four_axes(self):
        q = Quadrature.midpoint(4)
        with pytest.raises(ValueError):
            l2_sqrt_distance_sq(lambda *v: v[-1], lambda *v: v[-1], [q, q, q])


def _random_fit_triple(seed):
    rng = np.random.default_rng(seed)
    n = 40
    t = Trajectory(rng.uniform(size=n), rng.uniform(size=n),
                   rng.uniform(size=n), rng.uniform(size=n))
    m = EmpiricalMeasure(t)
    depths = [(0, 0, 0, 1), (1, 0, 0, 2), (0, 1, 1, 1), (1, 0, 1, 2), (0, 0, 0, 3)]
    picks = rng.choice(len(depths), size=3, replace=False)
    s, f1, f2 = (fit_histogram(t, DyadicPartition(depths[p])) for p in picks)
    return s, f1, f2, m


class TestInequalityCheckers:
    @pytest.mark.parametrize("seed", range(8))
    def test_variance_bound_holds(self, seed):
        s, f1, f2, m = _random_fit_triple(seed)
        lhs, rhs, ok = check_bernstein_var_bound(s, f1, f2, m)
        assert ok and lhs <= rhs + 1e-10

    @pytest.mark.parametrize("seed", range(8))
    def test_comparison_bound_holds(self, seed):
        s, f1, f2, m = _random_fit_triple(seed)
        lhs, rhs, ok = check_mb_eb_bound(s, f1, f2, m, true_s=s)
        assert ok and lhs <= rhs + 1e-10

    def test_comparison_bound_tight_at_vanishing_pair(self):
        m = fixture_measure()
        zero = lambda x, a, g, y: 0.0 * np.asarray(y, float)
        f2 = const_candidate(0.49, "f2")
        lhs, rhs, ok = check_mb_eb_bound(zero, zero, f2, m, true_s=zero)
        assert ok
        assert lhs == pytest.approx(rhs, abs=1e-12)
