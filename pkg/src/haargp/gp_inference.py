"""Bayesian prediction with the output Gaussian process.

Training outputs are observed with finite-shot noise of variance ``1/N``.
Because every kernel entry is of order ``1/d`` while the noise is of order
``1/N``, the posterior stays within ``O(N/d)`` of the prior when ``N`` grows
only polylogarithmically in ``d``: the prediction carries no information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import DomainError, SingularKernelError
from .exact_weingarten import check_group, exact_covariance
from .perm import InnerProductMatrix, num_pairings

JITTER = 1e-12
POLYLOG_POWER = 3


def fidelity_kernel(overlap, d: int, group: str, mode: str = "asymptotic"):
    """Covariance between outputs of two states with overlap ``Tr[rho rho']``.

    ``asymptotic``: ``c Tr[rho rho'] / d`` with ``c = 1`` (unitary) or 2
    (orthogonal). ``exact``: the finite-d covariance.
    """
    group = check_group(group)
    if not 0 <= overlap <= 1:
        raise DomainError(f"overlap must lie in [0, 1], got {overlap}")
    if mode == "exact":
        return exact_covariance(overlap, d, group)
    if mode != "asymptotic":
        raise ValueError(f"unknown kernel mode {mode!r}")
    c = 2 if group == "orthogonal" else 1
    if isinstance(overlap, (int, Fraction)):
        return Fraction(c, d) * overlap
    return c * overlap / d


@dataclass(frozen=True)
class GPModel:
    covariance: np.ndarray
    noise_variance: float
    d: int
    group: str
    mode: str = "asymptotic"

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T, rtol=0, atol=1e-15):
            raise ValueError("covariance must be a symmetric square matrix")
        if self.noise_variance < 0:
            raise DomainError("noise variance must be >= 0")
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "group", check_group(self.group))

    @property
    def m(self) -> int:
        return self.covariance.shape[0]

    @property
    def n_shots(self) -> float:
        return math.inf if self.noise_variance == 0 else 1.0 / self.noise_variance

    def kernel(self, overlap) -> float:
        return float(fidelity_kernel(overlap, self.d, self.group, self.mode))

    @classmethod
    def from_overlaps(
        cls, overlaps, d: int, group: str, n_shots: float | None = None, mode: str = "asymptotic"
    ) -> "GPModel":
        """Kernel matrix from training overlaps; ``n_shots=None`` is noiseless."""
        T = overlaps.overlaps() if isinstance(overlaps, InnerProductMatrix) else np.asarray(overlaps, dtype=object)
        m = T.shape[0]
        cov = np.array(
            [[float(fidelity_kernel(1 if i == j else T[i, j], d, group, mode)) for j in range(m)] for i in range(m)]
        )
        noise = 0.0 if n_shots is None else 1.0 / n_shots
        return cls(cov, noise, d, group, mode)


@dataclass(frozen=True)
class PredictiveResult:
    mean: float
    variance: float
    prior_variance: float

    @property
    def variance_reduction(self) -> float:
        return self.prior_variance - self.variance

    @property
    def relative_variance_reduction(self) -> float:
        return self.variance_reduction / self.prior_variance


def _solve(K: np.ndarray, rhs: np.ndarray, noiseless: bool, pinv: bool) -> np.ndarray:
    if noiseless:
        ev = np.linalg.eigvalsh(K)
        if ev[0] <= 1e-12 * max(ev[-1], 0.0):
            if not pinv:
                raise SingularKernelError("noiseless kernel matrix is singular; pass pinv=True to use the pseudo-inverse")
            return np.linalg.pinv(K, rcond=1e-12, hermitian=True) @ rhs
    try:
        return linalg.cho_solve(linalg.cho_factor(K), rhs)
    except linalg.LinAlgError:
        jitter = JITTER * max(1.0, float(np.trace(K)) / len(K))
        return linalg.cho_solve(linalg.cho_factor(K + jitter * np.eye(len(K))), rhs)


def predictive(
    gp: GPModel, observations: Sequence[float], cross_cov: Sequence[float], prior_var: float, pinv: bool = False
) -> PredictiveResult:
    """Posterior of the output at a new state given noisy training outputs.

    ``mean = m^T (Sigma + s^2 1)^-1 y``, ``variance = prior_var - m^T (Sigma + s^2 1)^-1 m``.
    In the noiseless case a singular ``Sigma`` needs ``pinv=True``
    (Moore-Penrose convention, e.g. for duplicated training states).
    """
    y = np.asarray(observations, dtype=float).ravel()
    mvec = np.asarray(cross_cov, dtype=float).ravel()
    if len(y) != gp.m or len(mvec) != gp.m:
        raise ValueError(f"expected {gp.m} observations and cross covariances, got {len(y)} and {len(mvec)}")
    if gp.m == 0:
        return PredictiveResult(0.0, float(prior_var), float(prior_var))
    K = gp.covariance + gp.noise_variance * np.eye(gp.m)
    sol = _solve(K, np.column_stack([y, mvec]), gp.noise_variance == 0, pinv)
    mean = float(mvec @ sol[:, 0])
    reduction = float(mvec @ sol[:, 1])
    return PredictiveResult(mean, float(prior_var) - reduction, float(prior_var))


@dataclass(frozen=True)
class TrivialityReport:
    result: PredictiveResult
    n_shots: float
    d: int
    mean_shift: float
    variance_shift: float
    mean_shift_bound: float
    variance_shift_bound: float
    mean_scaling: float
    variance_scaling: float
    polylog_ok: bool
    flags: list[str] = field(default_factory=list)

    @property
    def bounds_hold(self) -> bool:
        tol = 1e-12 * max(1.0, self.result.prior_variance)
        return abs(self.mean_shift) <= self.mean_shift_bound + tol and self.variance_shift <= self.variance_shift_bound + tol


def triviality_report(
    gp: GPModel,
    observations: Sequence[float],
    cross_cov: Sequence[float],
    prior_var: float,
    polylog_power: float = POLYLOG_POWER,
) -> TrivialityReport:
    """Compare posterior and prior for a noisy GP.

    Since ``||(Sigma + 1/N)^-1|| <= N`` for PSD ``Sigma``, the mean shift is
    at most ``N ||m|| ||y||`` and the variance shift at most ``N ||m||^2``;
    with ``m_i = O(1/d)`` these scale as ``N/d`` and ``N/d^2``. The regime
    flag requires ``N <= log2(d)^polylog_power``.
    """
    if gp.noise_variance <= 0:
        raise DomainError("the triviality comparison needs finite-shot noise (noise_variance > 0)")
    res = predictive(gp, observations, cross_cov, prior_var)
    y = np.asarray(observations, dtype=float)
    mvec = np.asarray(cross_cov, dtype=float)
    N = gp.n_shots
    mb = N * float(np.linalg.norm(mvec) * np.linalg.norm(y))
    vb = N * float(mvec @ mvec)
    limit = math.log2(gp.d) ** polylog_power
    flags = []
    polylog_ok = N <= limit
    if not polylog_ok:
        flags.append(f"shot count N={N:g} exceeds log2(d)^{polylog_power}={limit:.4g}; posterior may be informative")
    if np.any(np.abs(y) > 1):
        flags.append("observations outside [-1, 1]")
    return TrivialityReport(
        res, N, gp.d, res.mean, res.variance_reduction, mb, vb, N / gp.d, N / gp.d**2, polylog_ok, flags
    )


def loss_moments(y, k: int, d: int, group: str):
    """``E[(C - y)^{2k}]`` under the Gaussian output law (binomial expansion)."""
    group = check_group(group)
    if k < 1:
        raise DomainError("k must be >= 1")
    c = 2 if group == "orthogonal" else 1
    exact = isinstance(y, (int, Fraction))
    var = Fraction(c, d) if exact else c / d
    total = 0
    for r in range(0, 2 * k + 1, 2):
        total += math.comb(2 * k, r) * num_pairings(r) * var ** (r // 2) * (-y) ** (2 * k - r)
    return total


def squared_output_distribution(d: int, group: str) -> tuple[Fraction, Fraction]:
    """Shape and scale of the Gamma law of ``C^2`` for ``C ~ N(0, sigma^2)``."""
    c = 2 if check_group(group) == "orthogonal" else 1
    return Fraction(1, 2), 2 * Fraction(c, d)
