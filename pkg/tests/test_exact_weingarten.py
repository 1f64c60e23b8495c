from fractions import Fraction as Fr

import numpy as np
import pytest

from haargp import _rational as rat
from haargp.brauer import enumerate_brauer
from haargp.errors import CapacityError, DomainError, RealStatesRequiredError, SingularGramError
from haargp.exact_weingarten import (
    MomentSpec,
    commutant_basis,
    cross_observable_covariance,
    exact_covariance,
    exact_moment,
    gram_matrix,
    load_table,
    save_table,
    weingarten_matrix,
    weingarten_table,
)
from haargp.perm import InnerProductMatrix, enumerate_group

from oracles import dense_brauer, dense_perm, kron_all, projected_moment, projector, random_state, traceless_involution

DS = [2, 3, 5, 10]


def exact_G(entries):
    arr = np.empty((len(entries), len(entries)), dtype=object)
    for i, row in enumerate(entries):
        for j, x in enumerate(row):
            arr[i, j] = Fr(x)
    return InnerProductMatrix(arr)


class TestGram:
    @pytest.mark.parametrize("d", DS)
    def test_unitary_k2(self, d):
        assert gram_matrix(2, d, "unitary") == [[d * d, d], [d, d * d]]

    @pytest.mark.parametrize("d", DS)
    def test_orthogonal_k2(self, d):
        # basis order: identity, SWAP, Pi
        basis = commutant_basis(2, "orthogonal")
        assert [b.pairs for b in basis] == [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
        A = gram_matrix(2, d, "orthogonal")
        perm = [1, 2, 0]  # reorder to identity, SWAP, Pi
        A = [[A[i][j] for j in perm] for i in perm]
        assert A == [[d * d, d, d], [d, d * d, d], [d, d, d * d]]

    @pytest.mark.parametrize("group", ["unitary", "orthogonal"])
    @pytest.mark.parametrize("d", DS)
    def test_k1(self, group, d):
        assert gram_matrix(1, d, group) == [[d]]

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    @pytest.mark.parametrize("d", [2, 3])
    def test_unitary_dense(self, k, d):
        basis = enumerate_group(k)
        D = [dense_perm(p.image, d) for p in basis]
        A = gram_matrix(k, d, "unitary")
        for i in range(len(basis)):
            for j in range(len(basis)):
                assert A[i][j] == np.trace(D[i].T @ D[j])

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("d", [2, 3])
    def test_orthogonal_dense(self, k, d):
        basis = enumerate_brauer(k)
        D = [dense_brauer(s.pairs, k, d) for s in basis]
        A = gram_matrix(k, d, "orthogonal")
        for i in range(len(basis)):
            for j in range(len(basis)):
                assert A[i][j] == np.trace(D[i].T @ D[j])

    @pytest.mark.parametrize("group,k", [("unitary", 4), ("orthogonal", 3)])
    def test_symmetric_diag(self, group, k):
        A = gram_matrix(k, 7, group)
        n = len(A)
        assert all(A[i][j] == A[j][i] for i in range(n) for j in range(n))
        assert all(A[i][i] == 7**k for i in range(n))

    def test_capacity(self):
        with pytest.raises(CapacityError):
            gram_matrix(7, 3, "unitary")
        with pytest.raises(CapacityError):
            gram_matrix(5, 3, "orthogonal")


class TestWeingarten:
    @pytest.mark.parametrize("d", DS)
    def test_unitary_k2(self, d):
        c = Fr(1, d * d - 1)
        assert weingarten_matrix(2, d, "unitary") == [[c, -c / d], [-c / d, c]]

    @pytest.mark.parametrize("d", DS)
    def test_orthogonal_k2(self, d):
        W = weingarten_matrix(2, d, "orthogonal")
        perm = [1, 2, 0]
        W = [[W[i][j] for j in perm] for i in perm]
        c = Fr(1, d * (d + 2) * (d - 1))
        want = [[c * (d + 1), -c, -c], [-c, c * (d + 1), -c], [-c, -c, c * (d + 1)]]
        assert W == want

    @pytest.mark.parametrize("group", ["unitary", "orthogonal"])
    @pytest.mark.parametrize("d", DS)
    def test_k1(self, group, d):
        assert weingarten_matrix(1, d, group) == [[Fr(1, d)]]

    @pytest.mark.parametrize("group,k,d", [("unitary", 3, 3), ("unitary", 4, 4), ("unitary", 4, 9),
                                           ("orthogonal", 3, 3), ("orthogonal", 3, 5), ("orthogonal", 4, 4)])
    def test_exact_identity(self, group, k, d):
        t = weingarten_table(k, d, group)
        assert not t.singular
        assert t.check_identity()

    @pytest.mark.parametrize("k,d", [(2, 2), (3, 3), (4, 4), (4, 5)])
    def test_class_path_matches_elimination(self, k, d):
        t = weingarten_table(k, d, "unitary")
        assert t.class_function is not None
        assert t.wg == rat.inverse(t.gram)

    def test_singular(self):
        with pytest.raises(SingularGramError) as exc:
            weingarten_matrix(4, 2, "unitary")
        assert (exc.value.k, exc.value.d, exc.value.group) == (4, 2, "unitary")
        assert exc.value.rank == 14
        t = weingarten_table(4, 2, "unitary")
        assert t.singular and len(t.independent) == 14 and t.check_identity()
        o = weingarten_table(3, 2, "orthogonal")
        assert o.singular and o.check_identity()

    def test_cache_round_trip(self, tmp_path):
        t = weingarten_table(3, 4, "orthogonal", cache_dir=tmp_path)
        path = tmp_path / "wg_orthogonal_k3_d4.json"
        assert path.exists()
        t2 = load_table(path)
        assert t2.gram == t.gram and t2.wg == t.wg
        t3 = weingarten_table(3, 4, "orthogonal", cache_dir=tmp_path)
        assert t3.wg == t.wg
        s = weingarten_table(4, 2, "unitary")
        save_table(s, tmp_path / "s.json")
        s2 = load_table(tmp_path / "s.json")
        assert s2.independent == s.independent and s2.reduced_inverse == s.reduced_inverse


class TestExactMoment:
    @pytest.mark.parametrize("group", ["unitary", "orthogonal"])
    def test_first_moment(self, group):
        assert exact_moment(MomentSpec(group, 6, (0,), InnerProductMatrix.identity(1))) == 0

    @pytest.mark.parametrize("d", DS)
    def test_k2_unitary(self, d):
        G = InnerProductMatrix.identity(2)
        assert exact_moment(MomentSpec("unitary", d, (0, 0), G)) == Fr(1, d + 1)
        assert exact_moment(MomentSpec("unitary", d, (0, 1), G)) == Fr(-1, d * d - 1)

    @pytest.mark.parametrize("d", DS)
    def test_k2_orthogonal(self, d):
        G = InnerProductMatrix.identity(2)
        assert exact_moment(MomentSpec("orthogonal", d, (0, 0), G)) == Fr(2, d + 2)
        assert exact_moment(MomentSpec("orthogonal", d, (0, 1), G)) == Fr(-2, (d + 2) * (d - 1))

    @pytest.mark.parametrize("k,want", [(2, Fr(1, 3)), (4, Fr(1, 5)), (6, Fr(1, 7))])
    def test_bloch_sphere(self, k, want):
        # <Z> of a Haar-random qubit is uniform on [-1, 1]
        assert exact_moment(MomentSpec("unitary", 2, (0,) * k, InnerProductMatrix.identity(1))) == want

    @pytest.mark.parametrize("k,want", [(2, Fr(1, 2)), (4, Fr(3, 8))])
    def test_real_circle(self, k, want):
        # real qubit: C = cos(2 theta) with theta uniform
        assert exact_moment(MomentSpec("orthogonal", 2, (0,) * k, InnerProductMatrix.identity(1))) == want

    @pytest.mark.parametrize("group", ["unitary", "orthogonal"])
    def test_odd_zero(self, group):
        G = InnerProductMatrix.identity(3)
        assert exact_moment(MomentSpec(group, 4, (0, 1, 2), G)) == 0

    @pytest.mark.parametrize("group", ["unitary", "orthogonal"])
    @pytest.mark.parametrize("g", [Fr(0), Fr(1, 3), Fr(1, 2), Fr(-3, 5), Fr(1)])
    @pytest.mark.parametrize("d", [2, 3, 8])
    def test_k2_matches_covariance(self, group, g, d):
        G = exact_G([[1, g], [g, 1]])
        assert exact_moment(MomentSpec(group, d, (0, 1), G)) == exact_covariance(g * g, d, group)

    @pytest.mark.parametrize("k", [2, 3])
    @pytest.mark.parametrize("d", [2, 4])
    def test_unitary_dense_projection(self, k, d):
        rng = np.random.default_rng(k * 10 + d)
        states = [random_state(d, rng) for _ in range(3)]
        G = InnerProductMatrix.from_states(states)
        asg = tuple(int(x) for x in rng.integers(0, 3, size=k))
        ops = [dense_perm(p.image, d) for p in enumerate_group(k)]
        Lam = kron_all([projector(states[a]) for a in asg])
        Ok = kron_all([traceless_involution(d)] * k)
        want = projected_moment(ops, Lam, Ok).real
        got = exact_moment(MomentSpec("unitary", d, asg, G))
        assert got == pytest.approx(want, rel=1e-10, abs=1e-12)

    @pytest.mark.parametrize("k", [2, 3])
    @pytest.mark.parametrize("d", [2, 4])
    def test_orthogonal_dense_projection(self, k, d):
        rng = np.random.default_rng(k * 10 + d + 1)
        states = [random_state(d, rng, real=True) for _ in range(3)]
        G = InnerProductMatrix.from_states(states)
        asg = tuple(int(x) for x in rng.integers(0, 3, size=k))
        ops = [dense_brauer(s.pairs, k, d) for s in enumerate_brauer(k)]
        Lam = kron_all([projector(states[a]) for a in asg])
        Ok = kron_all([traceless_involution(d)] * k)
        want = projected_moment(ops, Lam, Ok).real
        got = exact_moment(MomentSpec("orthogonal", d, asg, G))
        assert got == pytest.approx(want, rel=1e-10, abs=1e-12)

    def test_singular_dense_projection(self):
        # d=2 < k=4: the Gram matrix is singular; the projection is still exact
        rng = np.random.default_rng(5)
        d, k = 2, 4
        states = [random_state(d, rng) for _ in range(2)]
        G = InnerProductMatrix.from_states(states)
        asg = (0, 1, 0, 1)
        ops = [dense_perm(p.image, d) for p in enumerate_group(k)]
        Lam = kron_all([projector(states[a]) for a in asg])
        Z = np.diag([1.0, -1.0])
        want = projected_moment(ops, Lam, kron_all([Z] * k)).real
        assert exact_moment(MomentSpec("unitary", d, asg, G)) == pytest.approx(want, rel=1e-10)

    def test_orthogonal_requires_real(self):
        rng = np.random.default_rng(0)
        G = InnerProductMatrix.from_states([random_state(3, rng) for _ in range(2)])
        with pytest.raises(RealStatesRequiredError):
            MomentSpec("orthogonal", 3, (0, 1), G)


class TestCovariance:
    @pytest.mark.parametrize("d", DS + [64])
    def test_values(self, d):
        assert exact_covariance(1, d, "unitary") == Fr(1, d + 1)
        assert exact_covariance(1, d, "orthogonal") == Fr(2, d + 2)
        assert exact_covariance(Fr(1, d), d, "unitary") == 0
        assert exact_covariance(Fr(1, d), d, "orthogonal") == 0
        assert exact_covariance(0, d, "orthogonal") == Fr(-2, (d + 2) * (d - 1))

    def test_literal_orthogonal_form(self):
        # 2(d+1)/((d+2)(d-1)) * (T(1 - 1/(d+1)) - 1/(d+1))
        for d in (3, 8, 17):
            for T in (Fr(0), Fr(1, 7), Fr(1, 2), Fr(1)):
                lit = Fr(2 * (d + 1), (d + 2) * (d - 1)) * (T * (1 - Fr(1, d + 1)) - Fr(1, d + 1))
                assert exact_covariance(T, d, "orthogonal") == lit

    @pytest.mark.parametrize("group", ["unitary", "orthogonal"])
    @pytest.mark.parametrize("d", [2, 4, 8, 16, 64])
    def test_completeness(self, group, d):
        total = d * exact_covariance(1, d, group) + d * (d - 1) * exact_covariance(0, d, group)
        assert total == 0 and isinstance(total, Fr)

    def test_domain(self):
        with pytest.raises(DomainError):
            exact_covariance(1.5, 4, "unitary")
        with pytest.raises(DomainError):
            exact_covariance(0.5, 1, "unitary")

    def test_cross_observable(self):
        assert cross_observable_covariance(0, 1) == 0
