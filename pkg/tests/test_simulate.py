"""Trajectory generators, true densities, and the finite-chain hard
instances."""

import numpy as np
import pytest

from tmdp.measures import Quadrature
from tmdp.simulate import (
    MinimaxInstance,
    NoiseSpec,
    SimModel,
    chain_density,
    chain_trajectory,
    decode_chain_state,
    encode_chain_control,
    encode_chain_state,
    minimax_instance,
    minimax_stationary,
    simulate,
    simulate_chain,
    simulate_shifted,
    true_density,
)


class TestNoiseSpec:
    def test_default_deviation_band(self):
        spec = NoiseSpec()
        sd = np.sqrt(spec.variance(np.linspace(0.0, 1.0, 21)))
        assert sd.min() > 0.04 and sd.max() < 0.16

    def test_variance_monotone_in_state(self):
        spec = NoiseSpec()
        var = spec.variance(np.linspace(0.0, 1.0, 21))
        assert np.all(np.diff(var) > 0)


class TestSimulate:
    def test_deterministic_in_seed(self):
        model = SimModel(kind="II")
        t1 = simulate(model, 50, 42)
        t2 = simulate(model, 50, 42)
        t3 = simulate(model, 50, 43)
        np.testing.assert_array_equal(t1.y, t2.y)
        assert not np.array_equal(t1.y, t3.y)

    def test_chain_is_contiguous(self):
        t = simulate(SimModel(kind="I"), 30, 0)
        assert t.contiguous
        np.testing.assert_array_equal(t.x[1:], t.y[:-1])

    def test_context_grid_respected(self):
        t = simulate(SimModel(kind="I", context_grid=(0.25, 0.75)), 40, 0)
        assert set(np.unique(t.g)) <= {0.25, 0.75}

    def test_exogenous_controls_come_from_grid(self):
        model = SimModel(kind="II", control_role="exogenous", control_grid=(0.2, 0.8))
        t = simulate(model, 40, 0)
        assert set(np.unique(t.a)) <= {0.2, 0.8}

    def test_rejects_tiny_runs(self):
        with pytest.raises(ValueError):
            simulate(SimModel(kind="I"), 2, 0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            SimModel(kind="IV")

    def test_custom_needs_dynamics(self):
        with pytest.raises(ValueError):
            SimModel(kind="custom")

    def test_shifted_pair_reproducible(self):
        a1, b1 = simulate_shifted(SimModel(kind="I"), SimModel(kind="II"), 20, 30, 9)
        a2, b2 = simulate_shifted(SimModel(kind="I"), SimModel(kind="II"), 20, 30, 9)
        np.testing.assert_array_equal(a1.y, a2.y)
        np.testing.assert_array_equal(b1.y, b2.y)
        assert b1.n == 30


class TestTrueDensity:
    @pytest.mark.parametrize("kind", ["I", "II", "III"])
    def test_mass_splits_between_interior_and_atoms(self, kind):
        density = true_density(SimModel(kind=kind))
        q = Quadrature.midpoint(4096)
        for x, g in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.8)]:
            interior = float(q.integrate(density.pdf(x, 0.0, g, q.nodes)))
            lo, hi = density.boundary_atoms(x, 0.0, g)
            assert interior + float(lo) + float(hi) == pytest.approx(1.0, abs=1e-6)

    def test_tent_mass_conserved(self):
        density = true_density(SimModel(kind="tent", tent_halfwidth=0.8))
        q = Quadrature.midpoint(8192)
        for x, g in [(0.2, 0.3), (0.7, 0.9)]:
            interior = float(q.integrate(density.pdf(x, 0.0, g, q.nodes)))
            lo, hi = density.boundary_atoms(x, 0.0, g)
            assert interior + float(lo) + float(hi) == pytest.approx(1.0, abs=1e-6)

    def test_call_clips_to_unit_ceiling(self):
        density = true_density(SimModel(kind="I"))
        mean = density.model.mean(0.1, 0.5)
        assert float(density(0.1, 0.0, 0.5, mean)) == 1.0

    def test_custom_without_density_rejected(self):
        model = SimModel(kind="custom", sampler_fn=lambda rng, x, g: rng.uniform())
        with pytest.raises(ValueError):
            true_density(model)


def example_instance(d=4, epsilon=0.02):
    return MinimaxInstance(
        d=d, p_star1=0.05, epsilon=epsilon, sigma=tuple([1, -1] * (d // 4)) or (1,)
    )


class TestMinimaxInstance:
    def test_validation(self):
        with pytest.raises(ValueError):
            MinimaxInstance(d=3, p_star1=0.05, epsilon=0.01, sigma=(1,))
        with pytest.raises(ValueError):
            MinimaxInstance(d=2, p_star1=0.05, epsilon=0.01, sigma=(1, 1))
        with pytest.raises(ValueError):
            MinimaxInstance(d=2, p_star1=0.3, epsilon=0.0, sigma=(1,))  # above 1/(d+2)
        with pytest.raises(ValueError):
            MinimaxInstance(d=2, p_star1=0.01, epsilon=0.2, sigma=(1,))  # leaves simplex

    def test_mistake_cost_formula(self):
        inst = example_instance(d=4, epsilon=0.02)
        assert inst.mistake_cost == pytest.approx(16.0 * 0.02 / 16.0, abs=1e-15)
        assert inst.p_star2 == pytest.approx(0.05 + 15.0 * 0.02 / 4.0, abs=1e-15)

    @pytest.mark.parametrize("control", [1, 2])
    def test_rows_are_distributions(self, control):
        mat = minimax_instance(example_instance(), control)
        assert mat.shape == (5, 5)
        assert np.all(mat >= 0)
        np.testing.assert_allclose(mat.sum(axis=1), np.ones(5), atol=1e-14)

    @pytest.mark.parametrize("control", [1, 2])
    def test_stationary_identity(self, control):
        inst = example_instance()
        mat = minimax_instance(inst, control)
        pi = minimax_stationary(inst, control)
        assert pi.sum() == pytest.approx(1.0, abs=1e-13)
        np.testing.assert_allclose(pi @ mat, pi, atol=1e-14)

    def test_perturbation_only_touches_last_row(self):
        inst = example_instance()
        m1 = minimax_instance(inst, 1)
        base = np.concatenate([np.full(4, (1.0 - 0.05) / 4.0), [0.05]])
        for row in range(4):
            np.testing.assert_allclose(m1[row], base, atol=1e-15)
        assert not np.allclose(m1[4], base)


class TestChainEmbedding:
    def test_state_codec_round_trip(self):
        d = 4
        states = np.arange(1, d + 2)
        np.testing.assert_array_equal(decode_chain_state(encode_chain_state(states, d), d), states)

    def test_control_encoding(self):
        np.testing.assert_allclose(encode_chain_control(np.array([1, 2])), [0.25, 0.75])

    def test_density_rows_integrate_to_one(self):
        inst = example_instance()
        dens = chain_density(inst)
        q = Quadrature.cell_midpoints(inst.d + 1)
        xs = encode_chain_state(np.arange(1, inst.d + 2), inst.d)
        for a in (0.25, 0.75):
            vals = dens(xs[:, None], a, 0.5, q.nodes[None, :])
            np.testing.assert_allclose(vals @ q.weights, np.ones(inst.d + 1), atol=1e-12)

    def test_density_matches_matrices(self):
        inst = example_instance()
        dens = chain_density(inst)
        m2 = minimax_instance(inst, 2)
        x = encode_chain_state(5, inst.d)
        y = encode_chain_state(1, inst.d)
        assert float(dens(x, 0.75, 0.5, y)) == pytest.approx(m2[4, 0] * (inst.d + 1))

    def test_simulate_chain_labels(self):
        inst = example_instance()
        path = simulate_chain(inst, 1, 200, 0)
        assert path.min() >= 1 and path.max() <= inst.d + 1

    def test_chain_trajectory_on_midpoints(self):
        inst = example_instance()
        controls = [1, 2] * 10
        t = chain_trajectory(inst, controls, seed=3)
        grid = set(encode_chain_state(np.arange(1, inst.d + 2), inst.d))
        assert set(np.unique(t.x)) <= grid
        assert set(np.unique(t.a)) == {0.25, 0.75}
        assert t.contiguous
