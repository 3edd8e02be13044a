import numpy as np
import pytest

from plm import network as nw
from plm.cramming import CramParams, cram, find_cram_params, separation_floor
from plm.errors import DegenerateInstanceError, InvalidStateError, SamplingFailureError
from plm.network import Batch, TwoLayerNet

from .conftest import net_from


def zero_net(m):
    return net_from([[0.0] * (m + 1)], [0.0, 0.0])


class TestParams:
    def test_axis_direction_separates(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0]])
        for zeta in (0.1, 0.5, 0.999):
            assert CramParams(np.array([1.0, 0.0]), zeta).satisfies(X, 0)
        assert not CramParams(np.array([1.0, 0.0]), 1.0).satisfies(X, 0)
        # orthogonal direction projects the other point onto the target
        assert not CramParams(np.array([0.0, 1.0]), 0.1).satisfies(X, 0)

    def test_duplicate_input(self, rng):
        batch = Batch.from_arrays([[0.0, 1.0], [2.0, 2.0], [0.0, 1.0]], [0, 0, 1])
        with pytest.raises(DegenerateInstanceError) as info:
            find_cram_params(batch, 2, rng)
        assert info.value.pair == (2, 0)

    def test_random_points_many_seeds(self):
        X = np.random.default_rng(99).normal(size=(20, 3))
        batch = Batch.from_arrays(X, np.zeros(20))
        for seed in range(100):
            rng = np.random.default_rng(seed)
            t = seed % 20
            params = find_cram_params(batch, t, rng)
            assert abs(np.linalg.norm(params.gamma) - 1) <= 1e-12
            proj = np.delete(X - X[t], t, axis=0) @ params.gamma
            assert np.all(proj != 0)
            assert np.all((params.zeta + proj) * (params.zeta - proj) < 0)
            assert params.zeta == pytest.approx(0.5 * np.min(np.abs(proj)), rel=1e-15)

    def test_near_duplicates_exhaust_attempts(self, rng):
        X = np.array([[1.0, 1.0], [1.0 + 1e-13, 1.0]])
        with pytest.raises(SamplingFailureError):
            find_cram_params(Batch.from_arrays(X, [0, 1]), 0, rng)

    def test_separation_floor_scales(self):
        assert separation_floor(np.array([[0.5]])) == 1e-9
        assert separation_floor(np.array([[-300.0]])) == pytest.approx(3e-7)

    def test_singleton_batch(self, rng):
        params = find_cram_params(Batch.from_arrays([[1.0, 2.0]], [0.0]), 0, rng)
        assert params.zeta > 0 and abs(np.linalg.norm(params.gamma) - 1) <= 1e-12


class TestCram:
    def test_worked_example(self):
        batch = Batch.from_arrays([[0.0, 0.0], [1.0, 0.0]], [1.0, 0.0])
        net = cram(zero_net(2), batch, 0, CramParams(np.array([1.0, 0.0]), 0.1))
        np.testing.assert_allclose(net.output[2:], [10.0, -20.0, 10.0])
        np.testing.assert_allclose(nw.hidden_activations(net, [0.0, 0.0])[1:], [0.1, 0.0, 0.0])
        assert net([0.0, 0.0]) == pytest.approx(1.0, abs=1e-15)
        assert net([1.0, 0.0]) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("t", [0.1000001, 0.7, 5.0])
    def test_bump_cancels_beyond_zeta(self, t):
        batch = Batch.from_arrays([[0.0], [t]], [1.0, 0.0])
        net = cram(zero_net(1), batch, 0, CramParams(np.array([1.0]), 0.1))
        a = nw.hidden_activations(net, [t])[1:]
        np.testing.assert_allclose(a, [0.1 + t, t, t - 0.1])
        assert net([t]) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("t", [-0.1000001, -0.7, -5.0])
    def test_bump_silent_below_minus_zeta(self, t):
        batch = Batch.from_arrays([[0.0], [t]], [1.0, 0.0])
        net = cram(zero_net(1), batch, 0, CramParams(np.array([1.0]), 0.1))
        np.testing.assert_array_equal(nw.hidden_activations(net, [t])[1:], 0.0)

    def test_second_unacceptable_instance(self, rng):
        batch = Batch.from_arrays([[0.0], [1.0], [2.0]], [1.0, 1.0, 0.0])
        params = find_cram_params(batch, 0, rng)
        with pytest.raises(InvalidStateError):
            cram(zero_net(1), batch, 0, params, epsilon=0.04)

    def test_random_exactness_and_non_interference(self):
        rng = np.random.default_rng(2024)
        for trial in range(1000):
            m = int(rng.integers(1, 6))
            n = int(rng.integers(1, 25))
            net = TwoLayerNet.random(m, int(rng.integers(1, 6)), rng, scale=1.0)
            X = rng.uniform(-1, 1, size=(n, m))
            before = net(X)
            eps = 0.05
            y = before + rng.uniform(-eps, eps, size=n)
            t = int(rng.integers(n))
            y[t] = before[t] + rng.choice([-1, 1]) * rng.uniform(2 * eps, 3.0)
            batch = Batch.from_arrays(X, y)
            after = cram(net, batch, t, find_cram_params(batch, t, rng), epsilon=eps)
            f = after(X)

            assert abs(f[t] - y[t]) <= 1e-9 * max(1.0, abs(y[t])), trial
            others = np.arange(n) != t
            tol = 1e-9 * np.maximum(1.0, np.abs(before[others]))
            assert np.all(np.abs(f[others] - before[others]) <= tol), trial
            assert after.p == net.p + 3
            assert np.array_equal(after.hidden[: net.p], net.hidden)
            assert np.array_equal(after.output[: net.p + 1], net.output)
            assert np.max(np.abs(f - y)) <= eps
