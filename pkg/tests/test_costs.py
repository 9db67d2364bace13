"""Plug-in cost estimation, control selection, and regret."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tmdp.costs import (
    CostSpec,
    chain_indicator_cost,
    constant_cost,
    default_control_grid,
    empirical_cost,
    quadratic_cost,
    regret,
    select_control,
    table_cost,
    threshold_cost,
)
from tmdp.measures import EmptyConditional, EmpiricalMeasure, Quadrature, Trajectory
from tmdp.simulate import MinimaxInstance, chain_density, chain_trajectory, minimax_instance

UNIFORM = lambda x, a, g, y: 1.0 + 0.0 * np.asarray(x, float) + 0.0 * np.asarray(y, float)


def fixture_measure():
    t = Trajectory.from_samples(
        [
            (0.20, 0.30, 0.50, 0.10),
            (0.60, 0.30, 0.50, 0.80),
            (0.40, 0.70, 0.50, 0.55),
        ]
    )
    return EmpiricalMeasure(t)


class TestCostSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            CostSpec(UNIFORM, sup_norm=0.0)
        with pytest.raises(ValueError):
            CostSpec(UNIFORM, sup_norm=1.0, control_grid=())
        with pytest.raises(ValueError):
            CostSpec(UNIFORM, sup_norm=1.0, control_grid=(0.5, 1.5))

    def test_range_enforced_at_evaluation(self):
        bad = CostSpec(lambda x, a, g, y: 2.0 * np.asarray(y, float) + 0.0 * x,
                       sup_norm=1.0, label="leaky")
        with pytest.raises(ValueError):
            bad.eval(0.0, 0.0, 0.0, np.array([0.9]))

    def test_scaled(self):
        base = threshold_cost()
        doubled = base.scaled(2.0)
        assert doubled.sup_norm == 2.0
        assert float(doubled.eval(0.0, 0.0, 0.0, 0.9)) == 2.0
        with pytest.raises(ValueError):
            base.scaled(-1.0)

    def test_default_grid(self):
        grid = default_control_grid(4)
        np.testing.assert_allclose(grid, [0.125, 0.375, 0.625, 0.875])


class TestEmpiricalCost:
    def test_constant_cost_under_uniform_density(self):
        m = fixture_measure()
        cost = constant_cost(level=0.7)
        assert empirical_cost(UNIFORM, cost, 0.3, 0.5, m) == pytest.approx(0.7, abs=1e-12)

    def test_threshold_cost_under_uniform_density(self):
        m = fixture_measure()
        cost = threshold_cost(cut=0.5)
        assert empirical_cost(UNIFORM, cost, 0.3, 0.5, m) == pytest.approx(0.5, abs=1e-12)

    def test_hand_assembled_conditional_oracle(self):
        # Density lo = 2x below 1/2, hi = 2(1 - x) above; the below-half cost
        # therefore equals x, so the conditional value is the mean state of
        # the samples matching (a, g).
        m = fixture_measure()
        dens = lambda x, a, g, y: np.where(
            np.asarray(y, float) < 0.5,
            2.0 * np.asarray(x, float),
            2.0 * (1.0 - np.asarray(x, float)),
        )
        cost = CostSpec(lambda x, a, g, y: (np.asarray(y, float) < 0.5).astype(float)
                        + 0.0 * np.asarray(x, float), sup_norm=1.0)
        got = empirical_cost(dens, cost, 0.3, 0.5, m)
        assert got == pytest.approx((0.20 + 0.60) / 2.0, abs=1e-10)

    def test_empty_conditional_raises_without_fallback(self):
        m = fixture_measure()
        with pytest.raises(EmptyConditional):
            empirical_cost(UNIFORM, constant_cost(), 0.99, 0.99, m)

    def test_fallback_averages_all_states(self):
        m = fixture_measure()
        dens = lambda x, a, g, y: np.where(
            np.asarray(y, float) < 0.5,
            2.0 * np.asarray(x, float),
            2.0 * (1.0 - np.asarray(x, float)),
        )
        cost = CostSpec(lambda x, a, g, y: (np.asarray(y, float) < 0.5).astype(float)
                        + 0.0 * np.asarray(x, float), sup_norm=1.0)
        got = empirical_cost(dens, cost, 0.99, 0.99, m, fallback=True)
        assert got == pytest.approx(np.mean([0.20, 0.60, 0.40]), abs=1e-10)

    @given(st.floats(0.1, 5.0))
    def test_linear_in_cost_scale(self, c):
        m = fixture_measure()
        base = threshold_cost()
        v1 = empirical_cost(UNIFORM, base, 0.3, 0.5, m)
        v2 = empirical_cost(UNIFORM, base.scaled(c), 0.3, 0.5, m)
        assert v2 == pytest.approx(c * v1, rel=1e-10)


class TestSelectControl:
    def test_picks_cheapest_control(self):
        m = fixture_measure()
        cost = CostSpec(
            lambda x, a, g, y: np.asarray(a, float) + 0.0 * np.asarray(y, float),
            sup_norm=1.0,
            control_grid=(0.9, 0.4, 0.1),
        )
        a_hat, value, ties = select_control(UNIFORM, cost, 0.5, m, fallback=True)
        assert a_hat == 0.1
        assert value == pytest.approx(0.1, abs=1e-12)
        assert ties == [0.1]

    def test_flat_objective_reports_all_ties(self):
        m = fixture_measure()
        cost = constant_cost(level=0.3, control_grid=(0.2, 0.8))
        _, _, ties = select_control(UNIFORM, cost, 0.5, m, fallback=True)
        assert ties == [0.2, 0.8]


def chain_setup():
    """Balanced log: one sample per (control, state) pair, so the plug-in
    conditional weights are uniform over the three states and the chain cost
    comparisons are deterministic."""
    inst = MinimaxInstance(d=2, p_star1=0.05, epsilon=0.02, sigma=(1,))
    from tmdp.simulate import encode_chain_control, encode_chain_state

    x, a = [], []
    for control in (1, 2):
        for state in range(1, inst.d + 2):
            x.append(float(encode_chain_state(state, inst.d)))
            a.append(float(encode_chain_control(control)))
    t = Trajectory(np.array(x), np.array(a), np.full(6, 0.5), np.array(x))
    m = EmpiricalMeasure(t, Quadrature.cell_midpoints(inst.d + 1))
    return inst, t, m


class TestChainCost:
    def test_exact_density_prefers_sticky_control(self):
        inst, _, m = chain_setup()
        dens = chain_density(inst)
        cost = chain_indicator_cost(inst.d)
        a_hat, _, ties = select_control(dens, cost, 0.5, m)
        assert a_hat == 0.75 and ties == [0.75]

    def test_regret_of_truth_is_zero(self):
        inst, _, m = chain_setup()
        dens = chain_density(inst)
        cost = chain_indicator_cost(inst.d)
        assert regret(dens, dens, cost, m) == 0.0

    def test_swapped_estimate_pays_positive_regret(self):
        inst, _, m = chain_setup()
        dens = chain_density(inst)
        swapped = chain_density(
            inst, {1: minimax_instance(inst, 2), 2: minimax_instance(inst, 1)}
        )
        cost = chain_indicator_cost(inst.d)
        expected = (inst.p_star2 - inst.p_star1) / 3.0
        assert regret(dens, swapped, cost, m) == pytest.approx(expected, abs=1e-12)


class TestTableCost:
    def grid_csv(self, tmp_path):
        rows = ["x,a,g,y,cost"]
        for x in (0.0, 1.0):
            for a in (0.0, 1.0):
                for g in (0.0, 1.0):
                    for y in (0.0, 1.0):
                        rows.append(f"{x},{a},{g},{y},{x + y}")
        path = tmp_path / "cost.csv"
        path.write_text("\n".join(rows) + "\n")
        return path

    def test_interpolates_separable_cost(self, tmp_path):
        cost = table_cost(self.grid_csv(tmp_path))
        assert float(cost.eval(1.0, 0.0, 0.0, 1.0)) == pytest.approx(2.0)
        assert float(cost.eval(0.5, 0.3, 0.7, 0.25)) == pytest.approx(0.75, abs=1e-12)

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,a,g,z,cost\n0,0,0,0,1\n")
        with pytest.raises(ValueError):
            table_cost(path)

    def test_rejects_incomplete_grid(self, tmp_path):
        path = tmp_path / "partial.csv"
        path.write_text("x,a,g,y,cost\n0,0,0,0,1\n1,1,1,1,2\n")
        with pytest.raises(ValueError):
            table_cost(path)


class TestQuadraticCost:
    def test_sup_norm_covers_unit_interval(self):
        cost = quadratic_cost(target=0.25)
        assert cost.sup_norm == pytest.approx(0.5625)
        assert float(cost.eval(0.0, 0.0, 0.0, 1.0)) == pytest.approx(0.5625)
