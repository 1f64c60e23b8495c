"""Leading-order (Gaussian-process) moments and covariance matrices.

At large d the outputs ``C(rho_i)`` behave as a centred Gaussian vector whose
covariance is the fidelity kernel ``Tr[rho_i rho_j] / d`` (twice that for the
orthogonal group). Higher moments then follow from Isserlis' theorem: a sum
over pairings of products of covariances.

Exact arithmetic is preserved whenever the inputs are exact (integer ``d``
and rational overlaps), so algebraic identities can be checked with ``==``.
"""

from __future__ import annotations

import math
import numbers
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Sequence

import numpy as np

from .exact_weingarten import check_group, exact_covariance
from .perm import InnerProductMatrix, num_pairings, perfect_matchings

Provenance = Literal["exact-finite", "asymptotic-fidelity", "asymptotic-diagonal", "asymptotic-orthogonal"]
MODES: tuple[str, ...] = ("exact-finite", "asymptotic-fidelity", "asymptotic-diagonal", "asymptotic-orthogonal")
_MODE_ALIASES = {
    "exact": "exact-finite",
        "fidelity": "asymptotic-fidelity",
    "diagonal": "asymptotic-diagonal",
    "orthogonal": "asymptotic-orthogonal",
}


class RegimeWarning(UserWarning):
    """Overlaps do not match the regime a covariance formula assumes."""


def _group_factor(group: str) -> int:
    return 2 if check_group(group) == "orthogonal" else 1


def _exact(x) -> bool:
    return isinstance(x, numbers.Rational)


@dataclass(frozen=True)
class CovarianceMatrix:
    entries: np.ndarray
    provenance: str

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def as_float(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.as_float()).min())

    def is_psd(self, tol: float = 1e-10) -> bool:
        return self.min_eigenvalue() >= -tol

    def check(self, tol: float = 1e-10) -> list[str]:
        """Return a list of invariant violations (empty when all hold)."""
        problems = []
        a = self.as_float()
        if not np.allclose(a, a.T, rtol=0, atol=tol):
            problems.append("not symmetric")
        if np.any(np.diag(a) <= 0):
            problems.append("non-positive diagonal")
        if not self.is_psd(tol):
            problems.append(f"not PSD (min eigenvalue {self.min_eigenvalue():.3e})")
        return problems


def asymptotic_moment_pairings(G: InnerProductMatrix, assignment: Sequence[int], d: int, group: str):
    """``(c / d)^{k/2} sum_{pairings} prod Tr[rho_t rho_t']`` with ``c = 1`` (unitary)
    or ``c = 2`` (orthogonal); 0 for odd k."""
    k = len(assignment)
    if k % 2:
        return Fraction(0)
    total = 0
    for matching in perfect_matchings(range(k)):
        term = 1
        for a, b in matching:
            term = term * G.overlap(assignment[a], assignment[b])
        total = total + term
    h = k // 2
    return total * Fraction(_group_factor(group) ** h, int(d) ** h)


def isserlis_moment(cov, assignment: Sequence[int]):
    """``E[prod_a X_{assignment[a]}]`` for a centred Gaussian vector with covariance ``cov``."""
    entries = cov.entries if isinstance(cov, CovarianceMatrix) else np.asarray(cov, dtype=object)
    k = len(assignment)
    if k % 2:
        return Fraction(0)
    total = 0
    for matching in perfect_matchings(range(k)):
        term = 1
        for a, b in matching:
            term = term * entries[assignment[a], assignment[b]]
        total = total + term
    return total


def _polylog_threshold(d: int) -> float:
    return 1.0 / math.log2(d) ** 2 if d > 2 else 1.0


def covariance_matrix(G: InnerProductMatrix, d: int, group: str, mode: str = "exact-finite") -> CovarianceMatrix:
    """Covariance of the outputs over a dataset.

    Modes: ``exact-finite`` (exact finite-d form), ``asymptotic-fidelity`` (fidelity
    kernel), ``asymptotic-diagonal`` (diagonal ``c/d``), ``asymptotic-orthogonal``
    (orthogonal-state form with the 1/(d+1)-type diagonal). Asymptotic modes
    warn with ``RegimeWarning`` when the overlaps do not fit the regime.
    """
    group = check_group(group)
    mode = _MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"unknown covariance mode {mode!r}; expected one of {MODES}")
    T = G.overlaps()
    m = G.m
    c = _group_factor(group)
    off = [T[i, j] for i in range(m) for j in range(m) if i != j]
    thr = _polylog_threshold(d)
    if mode == "asymptotic-fidelity" and any(float(t) < thr for t in off):
        warnings.warn(f"fidelity-kernel form assumes overlaps >= 1/log2(d)^2 = {thr:.3g}", RegimeWarning, stacklevel=2)
    if mode == "asymptotic-diagonal" and any(float(t) >= thr for t in off):
        warnings.warn(f"diagonal form assumes overlaps of order 1/d, found some >= {thr:.3g}", RegimeWarning, stacklevel=2)
    if mode == "asymptotic-orthogonal" and any(float(t) > 1e-12 for t in off):
        warnings.warn("orthogonal-state form assumes mutually orthogonal states", RegimeWarning, stacklevel=2)

    out = np.empty((m, m), dtype=object)
    for i in range(m):
        for j in range(m):
            t = T[i, j]
            if mode == "exact-finite":
                v = exact_covariance(t if i != j else 1, d, group)
            elif mode == "asymptotic-fidelity":
                v = Fraction(c, d) * (t if i != j else 1)
            elif mode == "asymptotic-diagonal":
                v = Fraction(c, d) if i == j else Fraction(0)
            else:
                if group == "unitary":
                    v = Fraction(1, d + 1) if i == j else Fraction(-1, d * d - 1)
                else:
                    v = Fraction(2, d + 1) if i == j else Fraction(-1, (d + 2) * (d - 1))
            out[i, j] = v
    if not all(_exact(x) for x in out.flat):
        out = out.astype(float)
    return CovarianceMatrix(out, mode)


def gaussian_moment_count(k: int) -> int:
    """``k! / (2^{k/2} (k/2)!)`` for even k, 0 for odd k."""
    return num_pairings(k)


def orthogonal_states_moment(k: int, d: int, group: str, sign_mode: str = "isserlis"):
    """Moment ``E[C(rho_1) ... C(rho_k)]`` for k mutually orthogonal states.

    ``sign_mode="isserlis"`` (default) sums pairings of the exact covariance
    at zero overlap, which is negative and gives sign ``(-1)^{k/2}``.
    ``sign_mode="literal"`` returns the positive value
    ``|T_k| c^{k/2} / d^k``.
    """
    group = check_group(group)
    if k % 2:
        return Fraction(0)
    n = num_pairings(k)
    h = k // 2
    if sign_mode == "literal":
        return Fraction(n * _group_factor(group) ** h, int(d) ** k)
    if sign_mode != "isserlis":
        raise ValueError(f"unknown sign_mode {sign_mode!r}")
    return n * exact_covariance(0, d, group) ** h


@dataclass(frozen=True)
class RepeatedMoment:
    isserlis: object
    literal: object
    literal_product: object


def repeated_states_moment(multiplicities: Sequence[int], d: int, group: str) -> RepeatedMoment:
    """Moment of a product containing ``multiplicities[b]`` copies of state ``b``
    (states mutually orthogonal).

    ``isserlis`` is the Isserlis sum over the exact pairwise covariances. The
    two literal leading-order expressions (summed and multiplied over
    multiplicity classes) are returned for comparison; when every
    multiplicity is 1 they fall back to the orthogonal-state literal value.
    """
    group = check_group(group)
    mult = [int(x) for x in multiplicities]
    if any(x < 1 for x in mult):
        raise ValueError("multiplicities must be positive")
    assignment = [b for b, x in enumerate(mult) for _ in range(x)]
    k = len(assignment)
    q = len(mult)
    cov = np.empty((q, q), dtype=object)
    for i in range(q):
        for j in range(q):
            cov[i, j] = exact_covariance(1 if i == j else 0, d, group)
    iss = isserlis_moment(cov, assignment)

    if k % 2:
        return RepeatedMoment(iss, Fraction(0), Fraction(0))
    R = sum(x // 2 for x in mult if x >= 2)
    if R == 0:
        lit = orthogonal_states_moment(k, d, group, sign_mode="literal")
        return RepeatedMoment(iss, lit, lit)

    def odd_term(x):
        h = x // 2
        return x * math.factorial(2 * h) // (2**h * math.factorial(h))

    summed = sum(odd_term(x) for x in mult if x % 2) + sum(num_pairings(x) for x in mult if x % 2 == 0)
    prod = math.prod(odd_term(x) for x in mult if x % 2) * math.prod(num_pairings(x) for x in mult if x % 2 == 0)
    scale = Fraction(_group_factor(group) ** R * int(d) ** R, int(d) ** k)
    return RepeatedMoment(iss, scale * summed, scale * prod)


def dataset_average_overlap(G: InnerProductMatrix):
    """Mean of ``Tr[rho_i rho_j]`` over ordered pairs ``i != j``."""
    m = G.m
    if m < 2:
        raise ValueError("average overlap needs at least two states")
    T = G.overlaps()
    total = sum(T[i, j] for i in range(m) for j in range(m) if i != j)
    return total / (m * (m - 1)) if not _exact(total) else Fraction(total) / (m * (m - 1))
