import math
from fractions import Fraction as Fr

import numpy as np
import pytest

from haargp.errors import DomainError, SingularKernelError
from haargp.exact_weingarten import exact_covariance
from haargp.gp_inference import (
    GPModel,
    fidelity_kernel,
    loss_moments,
    predictive,
    squared_output_distribution,
    triviality_report,
)
from haargp.sampler import PauliObservable, make_dataset, sample_outputs


class TestKernel:
    def test_values(self):
        assert fidelity_kernel(1, 64, "unitary") == Fr(1, 64)
        assert fidelity_kernel(0, 64, "unitary") == 0
        assert fidelity_kernel(1, 64, "orthogonal") == Fr(2, 64)
        assert fidelity_kernel(0.5, 64, "unitary") == pytest.approx(1 / 128)

    def test_exact_mode(self):
        assert fidelity_kernel(Fr(1, 2), 8, "unitary", "exact") == exact_covariance(Fr(1, 2), 8, "unitary")

    def test_range(self):
        with pytest.raises(DomainError):
            fidelity_kernel(1.5, 8, "unitary")
        with pytest.raises(ValueError):
            fidelity_kernel(0.5, 8, "unitary", "nope")


class TestPredictive:
    def test_empty(self):
        gp = GPModel(np.zeros((0, 0)), 0.01, 16, "unitary")
        r = predictive(gp, [], [], 0.25)
        assert r.mean == 0 and r.variance == 0.25

    def test_noiseless_interpolation(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((4, 4))
        K = A @ A.T + np.eye(4)
        gp = GPModel(K, 0.0, 16, "unitary")
        y = rng.standard_normal(4)
        r = predictive(gp, y, K[2], K[2, 2])
        assert r.mean == pytest.approx(y[2], rel=1e-8)
        assert abs(r.variance) < 1e-10

    def test_matches_dense_formula(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((5, 5))
        K = A @ A.T
        gp = GPModel(K, 0.3, 16, "unitary")
        y, m = rng.standard_normal(5), rng.standard_normal(5)
        inv = np.linalg.inv(K + 0.3 * np.eye(5))
        r = predictive(gp, y, m, 10.0)
        assert r.mean == pytest.approx(m @ inv @ y, rel=1e-12)
        assert r.variance == pytest.approx(10 - m @ inv @ m, rel=1e-12)

    def test_singular_noiseless(self):
        K = np.ones((2, 2)) / 8  # duplicated state
        gp = GPModel(K, 0.0, 8, "unitary")
        with pytest.raises(SingularKernelError):
            predictive(gp, [0.1, 0.1], [1 / 8, 1 / 8], 1 / 8)
        r = predictive(gp, [0.1, 0.1], [1 / 8, 1 / 8], 1 / 8, pinv=True)
        assert r.mean == pytest.approx(0.1) and abs(r.variance) < 1e-12

    def test_variance_never_increases(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            states, G = make_dataset("haar_random", n=3, m=5, rng=rng)
            T = G.overlaps().astype(float)
            gp = GPModel.from_overlaps(T[:4, :4], 8, "unitary", n_shots=float(rng.integers(1, 1000)), mode="exact")
            m = [gp.kernel(t) for t in T[4, :4]]
            r = predictive(gp, rng.uniform(-1, 1, 4), m, gp.kernel(1))
            assert r.variance <= r.prior_variance + 1e-12

    def test_dimension_mismatch(self):
        gp = GPModel(np.eye(2), 0.1, 4, "unitary")
        with pytest.raises(ValueError):
            predictive(gp, [1.0], [1.0, 2.0], 1.0)

    def test_negative_noise(self):
        with pytest.raises(DomainError):
            GPModel(np.eye(2), -0.1, 4, "unitary")


class TestTriviality:
    def _report(self, d, N, y=1.0):
        _, G = make_dataset("common_overlap", d=d, m=4, overlap=0.5)
        gp = GPModel.from_overlaps(G, d, "unitary", n_shots=N)
        return triviality_report(gp, [y] * 4, [gp.kernel(0.5)] * 4, gp.kernel(1))

    def test_bounds_hold(self):
        r = self._report(2**18, 100)
        assert r.bounds_hold and r.polylog_ok and not r.flags
        assert abs(r.result.mean) <= 1e-3

    def test_linear_in_n(self):
        bounds = [self._report(2**16, N).mean_shift_bound for N in (10, 100, 1000)]
        assert bounds[1] / bounds[0] == pytest.approx(10) and bounds[2] / bounds[1] == pytest.approx(10)

    def test_decay_in_d(self):
        a, b = self._report(2**14, 50), self._report(2**16, 50)
        assert a.mean_shift_bound / b.mean_shift_bound == pytest.approx(4)
        assert a.variance_shift_bound / b.variance_shift_bound == pytest.approx(16)
        assert a.mean_shift / b.mean_shift == pytest.approx(4, rel=0.01)

    def test_out_of_regime_flag(self):
        r = self._report(2**16, 2**16)
        assert not r.polylog_ok and r.flags

    def test_needs_noise(self):
        gp = GPModel(np.eye(2), 0.0, 4, "unitary")
        with pytest.raises(DomainError):
            triviality_report(gp, [0, 0], [0, 0], 1)


class TestLossMoments:
    @pytest.mark.parametrize("group,c", [("unitary", 1), ("orthogonal", 2)])
    def test_k1(self, group, c):
        for y in (Fr(0), Fr(1, 2), Fr(-3, 4), Fr(1)):
            assert loss_moments(y, 1, 64, group) - (y * y + Fr(c, 64)) == 0

    def test_k2(self):
        d = 50
        for y in (Fr(0), Fr(1, 3), Fr(-1)):
            assert loss_moments(y, 2, d, "unitary") == y**4 + 6 * y**2 / d + Fr(3, d * d)

    def test_domain(self):
        with pytest.raises(DomainError):
            loss_moments(0.5, 0, 8, "unitary")

    def test_monte_carlo(self):
        d, y = 64, 0.5
        states, _ = make_dataset("computational", d=d, m=1)
        x = sample_outputs(states, PauliObservable("ZIIIII"), "unitary", 100_000, seed=3).values[:, 0]
        l1 = (x - y) ** 2
        l2 = l1**2
        assert abs(l1.mean() - loss_moments(y, 1, d, "unitary")) < 4 * l1.std() / math.sqrt(len(x))
        assert abs(l2.mean() - loss_moments(y, 2, d, "unitary")) < 4 * l2.std() / math.sqrt(len(x))


class TestGamma:
    def test_parameters(self):
        assert squared_output_distribution(64, "unitary") == (Fr(1, 2), Fr(2, 64))
        assert squared_output_distribution(64, "orthogonal") == (Fr(1, 2), Fr(4, 64))

    def test_mean(self):
        shape, scale = squared_output_distribution(128, "unitary")
        assert shape * scale == Fr(1, 128)
