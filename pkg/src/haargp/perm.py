"""Symmetric group combinatorics.

Permutations are stored in one-line notation with 0-based labels: ``image[a]``
is the point that ``a`` is sent to. Products compose right to left, so
``compose(a, b)(x) = a(b(x))``.

The subsystem-permuting representation used throughout is

    P_d(s) |x_0, ..., x_{k-1}> = |y>,   y[s(a)] = x[a],

i.e. the content of tensor slot ``a`` is moved to slot ``s(a)``. With this
convention ``P_d(a) P_d(b) = P_d(compose(a, b))``.
"""

from __future__ import annotations

import itertools
import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, DomainError, InvalidOrderError, OrderMismatchError

K_MAX = 8


@dataclass(frozen=True)
class Permutation:
    image: tuple[int, ...]

    def __post_init__(self):
        image = tuple(int(x) for x in self.image)
        if sorted(image) != list(range(len(image))):
            raise ValueError(f"not a permutation of 0..{len(image) - 1}: {image}")
        object.__setattr__(self, "image", image)

    @property
    def k(self) -> int:
        return len(self.image)

    def __call__(self, a: int) -> int:
        return self.image[a]

    def __len__(self) -> int:
        return len(self.image)

    @classmethod
    def identity(cls, k: int) -> "Permutation":
        return cls(tuple(range(k)))

    @classmethod
    def from_cycles(cls, k: int, cycles: Sequence[Sequence[int]]) -> "Permutation":
        """Build from cycle notation; ``(0, 1, 2)`` sends 0->1->2->0."""
        image = list(range(k))
        seen: set[int] = set()
        for cyc in cycles:
            for pos, a in enumerate(cyc):
                if a in seen:
                    raise ValueError(f"point {a} appears in two cycles")
                seen.add(a)
                image[a] = cyc[(pos + 1) % len(cyc)]
        return cls(tuple(image))

    def is_identity(self) -> bool:
        return all(a == b for a, b in enumerate(self.image))

    def __repr__(self) -> str:
        cycles = [c for c in cycle_decomposition(self) if len(c) > 1]
        body = "".join("(" + " ".join(map(str, c)) + ")" for c in cycles) or "e"
        return f"Permutation[{self.k}]{body}"


@dataclass(frozen=True)
class CycleType:
    """``nu[j-1]`` counts the cycles of length ``j``."""

    nu: tuple[int, ...]

    @property
    def k(self) -> int:
        return sum((j + 1) * n for j, n in enumerate(self.nu))

    @property
    def num_cycles(self) -> int:
        return sum(self.nu)

    def partition(self) -> tuple[int, ...]:
        """Cycle lengths in non-increasing order."""
        parts: list[int] = []
        for j in range(len(self.nu), 0, -1):
            parts.extend([j] * self.nu[j - 1])
        return tuple(parts)

    def all_even(self) -> bool:
        return all(n == 0 for j, n in enumerate(self.nu) if (j + 1) % 2 == 1)


def _check_same_order(a: Permutation, b: Permutation) -> None:
    if a.k != b.k:
        raise OrderMismatchError(f"cannot combine elements of S_{a.k} and S_{b.k}")


def compose(a: Permutation, b: Permutation) -> Permutation:
    """Return ``a o b`` (apply ``b`` first)."""
    _check_same_order(a, b)
    return Permutation(tuple(a.image[x] for x in b.image))


def inverse(p: Permutation) -> Permutation:
    inv = [0] * p.k
    for a, b in enumerate(p.image):
        inv[b] = a
    return Permutation(tuple(inv))


def cycle_decomposition(p: Permutation) -> list[list[int]]:
    """Disjoint cycles including fixed points, each starting at its minimum,
    sorted by minimum."""
    seen = [False] * p.k
    cycles = []
    for start in range(p.k):
        if seen[start]:
            continue
        cyc = []
        a = start
        while not seen[a]:
            seen[a] = True
            cyc.append(a)
            a = p.image[a]
        cycles.append(cyc)
    return cycles


def cycle_type(p: Permutation) -> CycleType:
    nu = [0] * p.k
    for cyc in cycle_decomposition(p):
        nu[len(cyc) - 1] += 1
    return CycleType(tuple(nu))


def num_cycles(p: Permutation) -> int:
    return len(cycle_decomposition(p))


def sign(p: Permutation) -> int:
    return -1 if (p.k - num_cycles(p)) % 2 else 1


def character(p: Permutation, d: int) -> int:
    """Trace of ``P_d(p)``: ``d ** (number of cycles)``, as an exact integer."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    return int(d) ** num_cycles(p)


def _check_capacity(k: int, k_max: int | None, what: str) -> None:
    limit = K_MAX if k_max is None else k_max
    if k < 0:
        raise InvalidOrderError(f"order must be non-negative, got {k}")
    if k > limit:
        raise CapacityError(what, k, limit)


def enumerate_group(k: int, k_max: int | None = None) -> list[Permutation]:
    """All ``k!`` permutations in lexicographic one-line order."""
    _check_capacity(k, k_max, "enumerate_group")
    return [Permutation(t) for t in itertools.permutations(range(k))]


def _pairings(points: list[int]) -> Iterator[list[tuple[int, int]]]:
    if not points:
        yield []
        return
    first, rest = points[0], points[1:]
    for i, other in enumerate(rest):
        for tail in _pairings(rest[:i] + rest[i + 1:]):
            yield [(first, other)] + tail


def perfect_matchings(points: Sequence[int]) -> Iterator[list[tuple[int, int]]]:
    """All perfect matchings of ``points`` (in the order given)."""
    points = list(points)
    if len(points) % 2:
        raise InvalidOrderError(f"cannot pair an odd number of points ({len(points)})")
    return _pairings(points)


def num_pairings(k: int) -> int:
    """``k! / (2^(k/2) (k/2)!)``, the number of perfect matchings of k points."""
    if k % 2:
        return 0
    h = k // 2
    return math.factorial(k) // (2**h * math.factorial(h))


def enumerate_pairings(k: int, k_max: int | None = None) -> list[Permutation]:
    """Fixed-point-free involutions of ``S_k``."""
    if k % 2:
        raise InvalidOrderError(f"pairings need an even order, got k={k}")
    _check_capacity(k, k_max, "enumerate_pairings")
    out = []
    for matching in _pairings(list(range(k))):
        out.append(Permutation.from_cycles(k, matching))
    return out


# --- state overlaps -------------------------------------------------------


def _conj(x):
    if isinstance(x, numbers.Rational) or isinstance(x, (float, np.floating, np.integer)):
        return x
    return x.conjugate()


def _is_real(x) -> bool:
    if isinstance(x, (numbers.Rational, float, np.floating, np.integer)):
        return True
    return x.imag == 0


@dataclass(frozen=True)
class InnerProductMatrix:
    """Matrix ``G[i][j] = <psi_i|psi_j>`` of a finite set of pure states.

    Entries may be Python numbers (``Fraction`` for exact work) or numpy
    complex/floating values. ``real_flag`` records whether all entries are real.
    """

    entries: np.ndarray
    real_flag: bool = field(default=False)

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"inner-product matrix must be square, got shape {arr.shape}")
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "real_flag", all(_is_real(x) for x in arr.flat))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]

    def overlap(self, i: int, j: int):
        """``|<psi_i|psi_j>|^2 = Tr[rho_i rho_j]``; exact for rational entries."""
        g = self.entries[i, j]
        val = g * _conj(g)
        return val.real if isinstance(val, (complex, np.complexfloating)) else val

    def overlaps(self) -> np.ndarray:
        """Matrix of ``Tr[rho_i rho_j]`` values (object dtype if entries are exact)."""
        m = self.m
        out = np.empty((m, m), dtype=object if self.entries.dtype == object else float)
        for i in range(m):
            for j in range(m):
                out[i, j] = self.overlap(i, j)
        return out

    @classmethod
    def from_states(cls, states: Sequence[np.ndarray]) -> "InnerProductMatrix":
        mat = np.array([np.asarray(s) for s in states])
        return cls(mat.conj() @ mat.T)

    @classmethod
    def identity(cls, m: int) -> "InnerProductMatrix":
        ent = np.empty((m, m), dtype=object)
        for i in range(m):
            for j in range(m):
                ent[i, j] = Fraction(int(i == j))
        return cls(ent)

    def validate(self, tol: float = 1e-10) -> None:
        """Check Hermiticity, unit diagonal, entry bound and PSD-ness."""
        g = np.array(self.entries, dtype=complex)
        if not np.allclose(g, g.conj().T, atol=tol):
            raise ValueError("inner-product matrix is not Hermitian")
        if not np.allclose(np.diag(g), 1.0, atol=tol):
            raise ValueError("inner-product matrix must have unit diagonal")
        if np.any(np.abs(g) > 1 + tol):
            raise ValueError("inner-product entries must satisfy |G_ij| <= 1")
        if np.linalg.eigvalsh(g).min() < -tol:
            raise ValueError("inner-product matrix is not positive semidefinite")


def trace_state_product(p: Permutation, G: InnerProductMatrix, assignment: Sequence[int]):
    """``Tr[(rho_{a_0} x ... x rho_{a_{k-1}}) P_d(p)]`` without forming any d^k object.

    Each cycle ``(c_1 c_2 ... c_L)`` with ``p(c_i) = c_{i+1}`` contributes
    ``<psi_{c_2}|psi_{c_1}> <psi_{c_3}|psi_{c_2}> ... <psi_{c_1}|psi_{c_L}>``
    (labels pass through ``assignment``), a Bargmann invariant of the states.
    """
    if len(assignment) != p.k:
        raise OrderMismatchError(f"assignment has length {len(assignment)}, expected {p.k}")
    for a in assignment:
        if not 0 <= a < G.m:
            raise IndexError(f"state index {a} out of range for {G.m} states")
    result = 1
    for a in range(p.k):
        result = result * G.entries[assignment[p.image[a]], assignment[a]]
    return result
