"""Exact finite-d moments of Haar-random outputs via Weingarten calculus.

For ``G`` the unitary or orthogonal group the twirl of ``X`` lands in the
commutant spanned by the basis ``{F_mu}`` (permutations, or Brauer diagrams
for the orthogonal group):

    E[ V^{x k} X V^{dag x k} ] = sum_mu c_mu F_mu,    A c = b,
    A[nu][mu] = Tr[F_nu^dag F_mu],   b[nu] = Tr[F_nu^dag X].

The inverse ``Wg = A^{-1}`` is the Weingarten matrix. For a product state
``X = rho_{a_0} x ... x rho_{a_{k-1}}`` and a traceless Pauli-type observable
``O`` (``O^2 = 1``, ``Tr[O O'] = d delta``) the moment of the output
``C = Tr[V rho V^dag O]`` is ``sum_mu c_mu Tr[F_mu O^{x k}]``.

All arithmetic is exact (``fractions.Fraction``). When the Gram matrix is
singular (e.g. ``d < k`` for the unitary group) the twirl is still the
orthogonal projection onto the span of the basis, which is computed from a
maximal independent subset of basis elements.
"""

from __future__ import annotations

import functools
import json
import logging
import numbers
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from . import _rational as rat
from .brauer import (
    PairPartition,
    brauer_compose,
    enumerate_brauer,
    num_brauer_cycles,
    trace_obs_power,
    trace_state_product_brauer,
    transpose,
)
from .errors import CapacityError, DomainError, InvalidOrderError, RealStatesRequiredError, SingularGramError
from .perm import InnerProductMatrix, Permutation, enumerate_group, trace_state_product

log = logging.getLogger(__name__)

Group = Literal["unitary", "orthogonal"]
GROUPS: tuple[str, ...] = ("unitary", "orthogonal")
K_MAX = {"unitary": 6, "orthogonal": 4}


def check_group(group: str) -> str:
    g = str(group).lower()
    if g in ("u", "unitary"):
        return "unitary"
    if g in ("o", "orthogonal"):
        return "orthogonal"
    raise ValueError(f"unknown group {group!r}; expected 'unitary' or 'orthogonal'")


def _check_k(k: int, group: str, k_max: int | None) -> None:
    limit = K_MAX[group] if k_max is None else k_max
    if k < 1:
        raise InvalidOrderError(f"moment order must be >= 1, got {k}")
    if k > limit:
        raise CapacityError(f"{group} Weingarten table", k, limit)


# --- S_k multiplication tables --------------------------------------------


@dataclass(frozen=True)
class _SymTable:
    perms: list[Permutation]
    ncyc: np.ndarray  # number of cycles of each element
    cls: np.ndarray  # conjugacy-class index of each element
    ldiv: np.ndarray  # ldiv[i, j] = index of perms[i]^{-1} o perms[j]
    inv: np.ndarray  # index of the inverse
    class_reps: list[int]
    class_types: list[tuple[int, ...]]
    all_even: np.ndarray  # every cycle has even length


def _codes(arr: np.ndarray, k: int) -> np.ndarray:
    w = k ** np.arange(k - 1, -1, -1, dtype=np.int64)
    return arr.astype(np.int64) @ w


@functools.lru_cache(maxsize=None)
def _sym_table(k: int) -> _SymTable:
    perms = enumerate_group(k, k_max=max(k, 8))
    P = np.array([p.image for p in perms], dtype=np.int64).reshape(len(perms), k)
    codes = _codes(P, k)  # sorted, since lexicographic order
    invP = np.argsort(P, axis=1)
    inv = np.searchsorted(codes, _codes(invP, k))
    n = len(perms)
    # (nu^{-1} mu)(x) = nu^{-1}(mu(x))
    comp = invP[np.arange(n)[:, None, None], P[None, :, :]]
    ldiv = np.searchsorted(codes, _codes(comp.reshape(-1, k), k)).reshape(n, n)

    types = []
    ncyc = np.zeros(n, dtype=np.int64)
    even = np.zeros(n, dtype=bool)
    from .perm import cycle_type

    for i, p in enumerate(perms):
        ct = cycle_type(p)
        types.append(ct.partition())
        ncyc[i] = ct.num_cycles
        even[i] = ct.all_even()
    class_types = sorted(set(types), reverse=True)
    index = {t: c for c, t in enumerate(class_types)}
    cls = np.array([index[t] for t in types], dtype=np.int64)
    reps = [int(np.nonzero(cls == c)[0][0]) for c in range(len(class_types))]
    return _SymTable(perms, ncyc, cls, ldiv, inv, reps, class_types, even)


# --- tables ---------------------------------------------------------------


@dataclass
class WeingartenTable:
    """Exact Gram matrix over the commutant basis and its inverse.

    ``wg`` is ``None`` when the Gram matrix is singular; in that case
    ``independent`` lists a maximal independent set of basis indices and
    ``reduced_inverse`` is the exact inverse of the Gram matrix restricted to it.
    """

    group: str
    k: int
    d: int
    basis: list
    gram: list[list[int]]
    wg: list[list[Fraction]] | None
    independent: list[int] = field(default_factory=list)
    reduced_inverse: list[list[Fraction]] | None = None
    class_function: list[Fraction] | None = None  # unitary: Wg[nu][mu] = g(class(nu^-1 mu))

    @property
    def singular(self) -> bool:
        return self.wg is None

    @property
    def size(self) -> int:
        return len(self.basis)

    def check_identity(self) -> bool:
        """Exact check of ``A Wg = 1`` (or ``A_JJ A_JJ^{-1} = 1`` when singular)."""
        if self.wg is not None:
            return rat.matmul(self.gram, self.wg) == rat.identity(self.size)
        J = self.independent
        sub = [[self.gram[i][j] for j in J] for i in J]
        return rat.matmul(sub, self.reduced_inverse) == rat.identity(len(J))


def commutant_basis(k: int, group: str, k_max: int | None = None) -> list:
    group = check_group(group)
    _check_k(k, group, k_max)
    if group == "unitary":
        return list(_sym_table(k).perms)
    return enumerate_brauer(k, k_max=max(k, 6))


def _brauer_gram(k: int, d: int, basis: list[PairPartition]) -> list[list[int]]:
    n = len(basis)
    gram = [[0] * n for _ in range(n)]
    tbasis = [transpose(b) for b in basis]
    for i in range(n):
        for j in range(i, n):
            prod, loops = brauer_compose(tbasis[i], basis[j])
            v = int(d) ** (loops + num_brauer_cycles(prod))
            gram[i][j] = gram[j][i] = v
    return gram


def gram_matrix(k: int, d: int, group: str, k_max: int | None = None) -> list[list[int]]:
    """``A[nu][mu] = Tr[F_nu^dag F_mu]`` as exact integers."""
    group = check_group(group)
    _check_k(k, group, k_max)
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if group == "unitary":
        st = _sym_table(k)
        powers = [int(d) ** c for c in range(k + 1)]
        nc = st.ncyc[st.ldiv]
        return [[powers[c] for c in row] for row in nc.tolist()]
    return _brauer_gram(k, d, enumerate_brauer(k, k_max=max(k, 6)))


def _unitary_class_inverse(k: int, d: int) -> list[Fraction] | None:
    """Solve ``f * g = delta_e`` over class functions, ``f = d^{#cycles}``."""
    st = _sym_table(k)
    p = len(st.class_types)
    powers = [int(d) ** c for c in range(k + 1)]
    M = [[0] * p for _ in range(p)]
    for c, rep in enumerate(st.class_reps):
        # (f*g)(x) = sum_y f(y) g(y^{-1} x)
        classes = st.cls[st.ldiv[:, rep]]
        for y in range(len(st.perms)):
            M[c][int(classes[y])] += powers[st.ncyc[y]]
    rhs = [1 if st.class_types[c] == (1,) * k else 0 for c in range(p)]
    return rat.solve(M, rhs)


def _cache_path(cache_dir, group: str, k: int, d: int) -> Path:
    return Path(cache_dir) / f"wg_{group}_k{k}_d{d}.json"


def _frac_out(x: Fraction) -> list[str]:
    return [str(x.numerator), str(x.denominator)]


def _frac_in(x) -> Fraction:
    return Fraction(int(x[0]), int(x[1]))


def save_table(table: WeingartenTable, path) -> None:
    """Serialize as JSON; rationals are ``[numerator, denominator]`` decimal strings."""
    doc = {
        "group": table.group,
        "k": table.k,
        "d": table.d,
        "gram": [[str(x) for x in row] for row in table.gram],
        "wg": None if table.wg is None else [[_frac_out(x) for x in row] for row in table.wg],
        "independent": table.independent,
        "reduced_inverse": None
        if table.reduced_inverse is None
        else [[_frac_out(x) for x in row] for row in table.reduced_inverse],
        "class_function": None if table.class_function is None else [_frac_out(x) for x in table.class_function],
    }
    path = Path(path)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc))
    os.replace(tmp, path)


def load_table(path) -> WeingartenTable:
    doc = json.loads(Path(path).read_text())
    group, k, d = doc["group"], int(doc["k"]), int(doc["d"])
    basis = commutant_basis(k, group, k_max=k)
    return WeingartenTable(
        group=group,
        k=k,
        d=d,
        basis=basis,
        gram=[[int(x) for x in row] for row in doc["gram"]],
        wg=None if doc["wg"] is None else [[_frac_in(x) for x in row] for row in doc["wg"]],
        independent=[int(i) for i in doc["independent"]],
        reduced_inverse=None
        if doc["reduced_inverse"] is None
        else [[_frac_in(x) for x in row] for row in doc["reduced_inverse"]],
        class_function=None if doc["class_function"] is None else [_frac_in(x) for x in doc["class_function"]],
    )


@functools.lru_cache(maxsize=64)
def _build_table(group: str, k: int, d: int) -> WeingartenTable:
    basis = commutant_basis(k, group, k_max=k)
    gram = gram_matrix(k, d, group, k_max=k)
    n = len(basis)
    if group == "unitary":
        g = _unitary_class_inverse(k, d)
        if g is not None:
            st = _sym_table(k)
            wg = [[g[c] for c in row] for row in st.cls[st.ldiv].tolist()]
            return WeingartenTable(group, k, d, basis, gram, wg, list(range(n)), None, g)
    else:
        wg = rat.inverse(gram)
        if wg is not None:
            return WeingartenTable(group, k, d, basis, gram, wg, list(range(n)))
    J = rat.independent_columns(gram)
    sub = [[gram[i][j] for j in J] for i in J]
    red = rat.inverse(sub)
    if red is None:  # cannot happen for a Gram matrix of independent vectors
        raise SingularGramError(k, d, group, len(J), n)
    return WeingartenTable(group, k, d, basis, gram, None, J, red)


def weingarten_table(
    k: int, d: int, group: str, k_max: int | None = None, cache_dir=None
) -> WeingartenTable:
    """Build (or load from ``cache_dir``) the exact table for ``(group, k, d)``."""
    group = check_group(group)
    _check_k(k, group, k_max)
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if cache_dir is not None:
        path = _cache_path(cache_dir, group, k, d)
        if path.exists():
            return load_table(path)
    table = _build_table(group, k, int(d))
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        save_table(table, _cache_path(cache_dir, group, k, d))
    return table


def weingarten_matrix(k: int, d: int, group: str, k_max: int | None = None) -> list[list[Fraction]]:
    """Exact inverse of the Gram matrix; raises ``SingularGramError`` if singular."""
    table = weingarten_table(k, d, group, k_max=k_max)
    if table.wg is None:
        raise SingularGramError(k, d, table.group, len(table.independent), table.size)
    return table.wg


# --- moments --------------------------------------------------------------


@dataclass(frozen=True)
class MomentSpec:
    group: str
    d: int
    assignment: tuple[int, ...]
    G: InnerProductMatrix

    def __post_init__(self):
        object.__setattr__(self, "group", check_group(self.group))
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))
        if self.group == "orthogonal" and not self.G.real_flag:
            raise RealStatesRequiredError("orthogonal-group moments require real state vectors")

    @property
    def k(self) -> int:
        return len(self.assignment)


def _realify(x):
    if isinstance(x, (complex, np.complexfloating)):
        if abs(x.imag) <= 1e-12 * max(1.0, abs(x.real)):
            return float(x.real)
    return x


def exact_moment(spec: MomentSpec, k_max: int | None = None, cache_dir=None):
    """``E[prod_a C(rho_{assignment[a]})]`` over the Haar measure, exactly.

    Returns a ``Fraction`` when the entries of ``spec.G`` are rational,
    otherwise a float.
    """
    k, d, group = spec.k, spec.d, spec.group
    _check_k(k, group, k_max)
    if k % 2:
        return Fraction(0)
    table = weingarten_table(k, d, group, k_max=k_max, cache_dir=cache_dir)
    basis = table.basis
    asg = spec.assignment
    n = len(basis)

    if group == "unitary":
        st = _sym_table(k)
        obs = [int(d) ** int(st.ncyc[i]) if st.all_even[i] else 0 for i in range(n)]
        # b[nu] = Tr[P_nu^dag Lambda] = Tr[Lambda P_{nu^{-1}}]
        st_b = [trace_state_product(basis[int(st.inv[i])], spec.G, asg) for i in range(n)]
    else:
        obs = [trace_obs_power(s, d) for s in basis]
        st_b = [trace_state_product_brauer(transpose(s), spec.G, asg) for s in basis]

    total = Fraction(0)
    if table.wg is not None:
        if table.class_function is not None:
            st = _sym_table(k)
            g = table.class_function
            for mu in range(n):
                if obs[mu] == 0:
                    continue
                row = st.cls[st.ldiv[mu]]
                acc = 0
                for nu in range(n):
                    b = st_b[nu]
                    if b != 0:
                        acc = acc + g[row[nu]] * b
                total = total + obs[mu] * acc
        else:
            wg = table.wg
            for mu in range(n):
                if obs[mu] == 0:
                    continue
                acc = 0
                for nu in range(n):
                    if st_b[nu] != 0:
                        acc = acc + wg[mu][nu] * st_b[nu]
                total = total + obs[mu] * acc
    else:
        J = table.independent
        red = table.reduced_inverse
        for a, mu in enumerate(J):
            if obs[mu] == 0:
                continue
            acc = 0
            for b, nu in enumerate(J):
                if st_b[nu] != 0:
                    acc = acc + red[a][b] * st_b[nu]
            total = total + obs[mu] * acc
    return _realify(total)


def _as_exact(x):
    if isinstance(x, numbers.Rational):
        return Fraction(x)
    return float(x)


def exact_covariance(overlap, d: int, group: str):
    """Exact covariance of two outputs (same observable) for states with
    ``Tr[rho rho'] = overlap``.

    Unitary: ``(d T - 1) / (d^2 - 1)``. Orthogonal: ``2 (d T - 1) / ((d + 2)(d - 1))``.
    """
    group = check_group(group)
    if d < 2:
        raise DomainError(f"covariance formula needs d >= 2, got {d}")
    T = _as_exact(overlap)
    if not 0 <= T <= 1:
        raise DomainError(f"overlap must lie in [0, 1], got {overlap}")
    if group == "unitary":
        return (d * T - 1) / Fraction(d * d - 1)
    return 2 * (d * T - 1) / Fraction((d + 2) * (d - 1))


def cross_observable_covariance(*_args, **_kwargs) -> int:
    """Covariance of outputs for two distinct orthogonal observables: always 0."""
    return 0
