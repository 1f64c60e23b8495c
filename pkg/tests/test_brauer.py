import math

import numpy as np
import pytest

from haargp.brauer import (
    PairPartition,
    brauer_character,
    brauer_compose,
    brauer_cycles,
    enumerate_brauer,
    identity_element,
    pi_element,
    swap_element,
    trace_obs_power,
    trace_state_product_brauer,
    transpose,
)
from haargp.errors import CapacityError, RealStatesRequiredError
from haargp.perm import InnerProductMatrix, Permutation, compose, enumerate_group, inverse

from oracles import dense_brauer, kron_all, projector, random_state, traceless_involution


def dense(s: PairPartition, d: int) -> np.ndarray:
    return dense_brauer(s.pairs, s.k, d)


def double_factorial(n):
    return math.prod(range(n, 0, -2))


class TestEnumerate:
    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_size(self, k):
        els = enumerate_brauer(k)
        assert len(els) == double_factorial(2 * k - 1) == math.factorial(2 * k) // (2**k * math.factorial(k))
        assert len(set(els)) == len(els)
        assert sum(e.is_permutation() for e in els) == math.factorial(k)

    def test_k2(self):
        assert set(enumerate_brauer(2)) == {identity_element(2), swap_element(), pi_element()}

    def test_capacity(self):
        with pytest.raises(CapacityError):
            enumerate_brauer(7)

    def test_embedding_matches_dense(self):
        for p in enumerate_group(3):
            s = PairPartition.from_permutation(p)
            assert s.as_permutation() == p
            from oracles import dense_perm

            assert np.array_equal(dense(s, 2), dense_perm(p.image, 2))


class TestTranspose:
    def test_identity(self):
        assert transpose(identity_element(3)) == identity_element(3)

    def test_pi(self):
        assert transpose(pi_element()) == pi_element()

    def test_seven_strand_example(self):
        # 1-based example diagram and its reflection, shifted to 0-based labels
        def from_one_based(pairs):
            return PairPartition(tuple((a - 1, b - 1) for a, b in pairs), 7)

        s = from_one_based([(1, 2), (8, 9), (3, 5), (4, 10), (11, 12), (6, 14), (7, 13)])
        st = from_one_based([(1, 2), (8, 9), (3, 11), (4, 5), (10, 12), (6, 14), (7, 13)])
        assert transpose(s) == st

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_involution_and_dense(self, k):
        for s in enumerate_brauer(k):
            assert transpose(transpose(s)) == s
            if k <= 3:
                assert np.array_equal(dense(transpose(s), 2), dense(s, 2).T)

    def test_inverse_on_permutations(self):
        for p in enumerate_group(4):
            s = PairPartition.from_permutation(p)
            assert transpose(s).as_permutation() == inverse(p)


class TestCompose:
    def test_pi_squared(self):
        assert brauer_compose(pi_element(), pi_element()) == (pi_element(), 1)

    def test_swap_squared(self):
        assert brauer_compose(swap_element(), swap_element()) == (identity_element(2), 0)

    def test_seven_strand_loops(self):
        s = PairPartition(((0, 1), (7, 8), (2, 4), (3, 9), (10, 11), (5, 13), (6, 12)), 7)
        res, loops = brauer_compose(s, transpose(s))
        assert loops == 2
        d = 2
        assert np.array_equal(dense(s, d) @ dense(transpose(s), d), d**loops * dense(res, d))

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("d", [2, 3])
    def test_dense_all_pairs(self, k, d):
        els = enumerate_brauer(k)
        D = {s: dense(s, d) for s in els}
        for a in els:
            for b in els:
                res, loops = brauer_compose(a, b)
                assert np.array_equal(D[a] @ D[b], d**loops * D[res])

    def test_permutations(self):
        for p in enumerate_group(3):
            for q in enumerate_group(3):
                res, loops = brauer_compose(PairPartition.from_permutation(p), PairPartition.from_permutation(q))
                assert loops == 0
                assert res.as_permutation() == compose(p, q)

    def test_transpose_antihomomorphism(self):
        els = enumerate_brauer(3)
        for a in els:
            for b in els:
                ab, l1 = brauer_compose(a, b)
                ba, l2 = brauer_compose(transpose(b), transpose(a))
                assert transpose(ab) == ba and l1 == l2


class TestCycles:
    def test_identity(self):
        cycles, ct = brauer_cycles(identity_element(3))
        assert ct.nu == (3, 0, 0)
        assert brauer_character(identity_element(3), 5) == 125

    def test_pi(self):
        cycles, ct = brauer_cycles(pi_element())
        assert len(cycles) == 1 and ct.nu == (0, 1)
        assert brauer_character(pi_element(), 7) == 7

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("d", [2, 3])
    def test_character_dense(self, k, d):
        for s in enumerate_brauer(k):
            cycles, ct = brauer_cycles(s)
            assert sorted(x for c in cycles for x in c) == list(range(2 * k))
            assert sum((j + 1) * n for j, n in enumerate(ct.nu)) == k
            assert brauer_character(s, d) == np.trace(dense(s, d))

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("d", [2, 3])
    def test_gram_bound(self, k, d):
        els = enumerate_brauer(k)
        for s in els:
            for p in els:
                tr = np.trace(dense(s, d) @ dense(p, d))
                if p == transpose(s):
                    assert tr == d**k
                else:
                    assert tr <= d ** (k - 1)


class TestTraceObsPower:
    def test_odd(self):
        assert all(trace_obs_power(s, 4) == 0 for s in enumerate_brauer(3))

    def test_swap(self):
        assert trace_obs_power(swap_element(), 6) == 6

    def test_two_two_cycles(self):
        s = PairPartition(((0, 5), (1, 4), (2, 7), (3, 6)), 4)
        assert brauer_cycles(s)[1].nu == (0, 2, 0, 0)
        Z = np.diag([1.0, -1.0])
        assert trace_obs_power(s, 2) == 4 == np.trace(dense(s, 2) @ kron_all([Z] * 4))

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("d", [2, 4])
    def test_dense(self, k, d):
        O = traceless_involution(d)
        Ok = kron_all([O] * k)
        for s in enumerate_brauer(k):
            assert trace_obs_power(s, d) == np.trace(dense(s, d) @ Ok)


class TestTraceStateProductBrauer:
    def test_identity(self):
        rng = np.random.default_rng(0)
        G = InnerProductMatrix.from_states([random_state(3, rng, real=True) for _ in range(2)])
        assert trace_state_product_brauer(identity_element(3), G, [0, 1, 0]) == pytest.approx(1)

    def test_pi_equals_swap(self):
        rng = np.random.default_rng(1)
        states = [random_state(4, rng, real=True) for _ in range(2)]
        G = InnerProductMatrix.from_states(states)
        Lam = kron_all([projector(s) for s in states])
        v = trace_state_product_brauer(pi_element(), G, [0, 1])
        assert v == pytest.approx(np.trace(Lam @ dense(pi_element(), 4)), rel=1e-12)
        assert v == pytest.approx(trace_state_product_brauer(swap_element(), G, [0, 1]), rel=1e-12)
        assert v == pytest.approx(abs(np.dot(states[0], states[1])) ** 2, rel=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("d", [2, 3])
    def test_dense(self, k, d):
        rng = np.random.default_rng(10 * k + d)
        states = [random_state(d, rng, real=True) for _ in range(3)]
        G = InnerProductMatrix.from_states(states)
        asg = [int(x) for x in rng.integers(0, 3, size=k)]
        Lam = kron_all([projector(states[a]) for a in asg])
        for s in enumerate_brauer(k):
            want = np.trace(Lam @ dense(s, d))
            got = trace_state_product_brauer(s, G, asg)
            assert abs(got - want) <= 1e-10 * max(1.0, abs(want))

    def test_complex_rejected(self):
        rng = np.random.default_rng(2)
        G = InnerProductMatrix.from_states([random_state(3, rng) for _ in range(2)])
        with pytest.raises(RealStatesRequiredError):
            trace_state_product_brauer(pi_element(), G, [0, 1])
