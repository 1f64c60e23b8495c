"""Statistics over Monte Carlo samples of QNN outputs.

Power sums are accumulated exactly: every float ``x**p`` is a dyadic
rational, so the sums are kept as ``Fraction`` and merging partial
accumulators reproduces the single-stream result bit for bit. Standard
errors use batch means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DomainError
from .perm import num_pairings

DEFAULT_K = 8
DEFAULT_BATCHES = 100


def exact_sum(values: np.ndarray) -> Fraction:
    """Exact sum of finite float64 values as a Fraction."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        return Fraction(0)
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot sum non-finite values exactly")
    mant, expo = np.frexp(v)
    ints = np.ldexp(mant, 53).astype(np.int64)  # exact: 53-bit signed mantissa
    expo = expo.astype(np.int64) - 53
    order = np.argsort(expo, kind="stable")
    ints, expo = ints[order], expo[order]
    starts = np.flatnonzero(np.r_[True, np.diff(expo) != 0])
    # split mantissas so per-exponent int64 sums cannot overflow
    hi = ints >> 26
    lo = ints & ((1 << 26) - 1)
    hs = np.add.reduceat(hi, starts)
    ls = np.add.reduceat(lo, starts)
    total = Fraction(0)
    for h, l, e in zip(hs.tolist(), ls.tolist(), expo[starts].tolist()):
        n = (h << 26) + l
        total += n * 2**e if e >= 0 else Fraction(n, 1 << -e)
    return total


@dataclass
class MomentAccumulator:
    """Count and exact raw power sums ``S_p = sum x^p`` for ``p = 1..K``."""

    K: int = DEFAULT_K
    count: int = 0
    sums: list = field(default_factory=list)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not self.sums:
            self.sums = [Fraction(0)] * self.K
        if len(self.sums) != self.K:
            raise ValueError("sums length must equal K")

    def update(self, x) -> "MomentAccumulator":
        x = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
        p = np.ones_like(x)
        for k in range(self.K):
            p = p * x
            self.sums[k] += exact_sum(p)
        self.count += int(x.size)
        return self

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.K != self.K:
            raise ValueError(f"cannot merge accumulators with K={self.K} and K={other.K}")
        return MomentAccumulator(self.K, self.count + other.count, [a + b for a, b in zip(self.sums, other.sums)])

    def raw_moment_exact(self, k: int) -> Fraction:
        if not 1 <= k <= self.K:
            raise ValueError(f"moment order {k} outside 1..{self.K}")
        if self.count == 0:
            raise DomainError("no samples accumulated")
        return self.sums[k - 1] / self.count

    def raw_moment(self, k: int) -> float:
        return float(self.raw_moment_exact(k))

    @property
    def mean(self) -> float:
        return self.raw_moment(1)

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        n = self.count
        if n < 2:
            raise DomainError("variance needs at least two samples")
        s1, s2 = self.sums[0], self.sums[1]
        return float((s2 - s1 * s1 / n) / (n - 1))


def accumulate(values, K: int = DEFAULT_K) -> MomentAccumulator:
    return MomentAccumulator(K).update(values)


def gaussian_reference(k: int) -> int:
    """``k! / (2^{k/2} (k/2)!)`` for even k."""
    if k % 2:
        raise ValueError("reference ratio is defined for even k")
    return num_pairings(k)


@dataclass(frozen=True)
class MomentRatio:
    k: int
    ratio: float
    reference: int
    se: float | None = None

    @property
    def z_score(self) -> float:
        return (self.ratio - self.reference) / self.se if self.se else math.inf


def _batches(values: np.ndarray, n_batches: int) -> list[np.ndarray]:
    n = len(values)
    if n < 2 * n_batches:
        n_batches = max(2, n // 2)
    if n < 4:
        raise DomainError("batch-means standard errors need at least 4 samples")
    return np.array_split(values, n_batches)


def moment_ratio(acc: MomentAccumulator, k: int, values: np.ndarray | None = None, n_batches: int = DEFAULT_BATCHES) -> MomentRatio:
    """``m_k / m_2^{k/2}`` from raw moments, with a batch-means SE if ``values`` is given.

    The SE uses the delta method on batch means of ``(x^k, x^2)``.
    """
    if k % 2 or k < 2:
        raise ValueError("moment ratios are taken for even k >= 2")
    m2 = acc.raw_moment(2)
    if m2 <= 0:
        raise DomainError("degenerate second moment")
    mk = acc.raw_moment(k)
    h = k // 2
    ratio = mk / m2**h
    se = None
    if values is not None:
        x = np.asarray(values, dtype=float)
        bm = np.array([[np.mean(b**k), np.mean(b**2)] for b in _batches(x, n_batches)])
        cov = np.cov(bm.T, ddof=1) / len(bm)
        grad = np.array([1 / m2**h, -h * mk / m2 ** (h + 1)])
        se = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    return MomentRatio(k, float(ratio), gaussian_reference(k), se)


@dataclass(frozen=True)
class GaussianityVerdict:
    ratios: tuple[MomentRatio, ...]
    ks_pvalue: float
    sigma: float
    moments_ok: bool
    ks_ok: bool

    @property
    def gaussian(self) -> bool:
        return self.moments_ok and self.ks_ok


def gaussianity(
    values: np.ndarray,
    sigma: float | None = None,
    orders: Sequence[int] = (4, 6),
    n_se: float = 5.0,
    ks_threshold: float = 1e-3,
    n_batches: int = DEFAULT_BATCHES,
) -> GaussianityVerdict:
    """Even moment ratios within ``n_se`` batch SEs of the Gaussian reference,
    plus a KS test against ``N(0, sigma^2)`` (sample RMS if ``sigma`` is None)."""
    x = np.asarray(values, dtype=float).ravel()
    acc = accumulate(x, max(orders))
    ratios = tuple(moment_ratio(acc, k, x, n_batches) for k in orders)
    s = float(sigma) if sigma is not None else math.sqrt(acc.raw_moment(2))
    p = float(stats.kstest(x, stats.norm(0, s).cdf).pvalue)
    ok = all(abs(r.ratio - r.reference) <= n_se * r.se for r in ratios)
    return GaussianityVerdict(ratios, p, s, ok, p > ks_threshold)


@dataclass(frozen=True)
class CovarianceEstimate:
    covariance: np.ndarray
    covariance_se: np.ndarray
    correlation: np.ndarray
    correlation_se: np.ndarray
    n_samples: int


def _as_matrix(batch) -> np.ndarray:
    x = batch.values if hasattr(batch, "values") else batch
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def _corr(c: np.ndarray) -> np.ndarray:
    s = np.sqrt(np.diag(c))
    with np.errstate(invalid="ignore", divide="ignore"):
        return c / np.outer(s, s)


def empirical_covariance(batch, n_batches: int = DEFAULT_BATCHES) -> CovarianceEstimate:
    """Unbiased sample covariance and correlation with batch-means SEs."""
    x = _as_matrix(batch)
    n = x.shape[0]
    if n < 2:
        raise DomainError("covariance needs at least two samples")
    cov = np.atleast_2d(np.cov(x.T, ddof=1))
    corr = _corr(cov)
    if n >= 4:
        parts = _batches(x, n_batches)
        bc = np.array([np.atleast_2d(np.cov(p.T, ddof=1)) for p in parts])
        br = np.array([_corr(c) for c in bc])
        nb = len(parts)
        cov_se = bc.std(axis=0, ddof=1) / math.sqrt(nb)
        corr_se = np.nanstd(br, axis=0, ddof=1) / math.sqrt(nb)
    else:
        cov_se = np.full_like(cov, np.nan)
        corr_se = np.full_like(cov, np.nan)
    return CovarianceEstimate(cov, cov_se, corr, corr_se, n)


@dataclass(frozen=True)
class TailFrequency:
    c: float
    count: int
    n: int
    frequency: float
    se: float
    ci_low: float
    ci_high: float


def tail_frequency(values, c: float, confidence: float = 0.95) -> TailFrequency:
    """Fraction of ``|x| >= c`` with binomial SE and Clopper-Pearson interval."""
    if c < 0:
        raise DomainError(f"threshold must be >= 0, got {c}")
    x = np.asarray(values.values if hasattr(values, "values") else values, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise DomainError("empty sample")
    k = int(np.count_nonzero(np.abs(x) >= c))
    p = k / n
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=confidence, method="exact")
    return TailFrequency(float(c), k, n, p, math.sqrt(p * (1 - p) / n), float(ci.low), float(ci.high))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    density: np.ndarray
    model: np.ndarray | None
    tv_distance: float | None

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))

    def rows(self):
        """(left, right, centre, density[, model]) rows for CSV export."""
        cols = [self.edges[:-1], self.edges[1:], self.centers, self.density]
        if self.model is not None:
            cols.append(self.model)
        return np.column_stack(cols)

    def header(self) -> list[str]:
        h = ["left", "right", "center", "density"]
        return h + ["gaussian"] if self.model is not None else h


def histogram(values, bins: int = 50, sigma: float | None = None, value_range: tuple[float, float] | None = None) -> Histogram:
    """Density histogram; with ``sigma`` also the ``N(0, sigma^2)`` density at
    bin centres and the total-variation distance between binned laws."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empty sample")
    counts, edges = np.histogram(x, bins=bins, range=value_range)
    probs = counts / x.size
    density = probs / np.diff(edges)
    model = tv = None
    if sigma is not None:
        dist = stats.norm(0, sigma)
        model = dist.pdf(0.5 * (edges[1:] + edges[:-1]))
        cdf = dist.cdf(edges)
        mp = np.diff(cdf)
        # mass outside the histogram range counts fully toward the distance
        tv = 0.5 * (np.abs(probs - mp).sum() + cdf[0] + 1 - cdf[-1])
    return Histogram(edges, density, model, None if tv is None else float(tv))


@dataclass(frozen=True)
class Histogram2D:
    xedges: np.ndarray
    yedges: np.ndarray
    density: np.ndarray
    independence_tv: float

    def rows(self):
        xc = 0.5 * (self.xedges[1:] + self.xedges[:-1])
        yc = 0.5 * (self.yedges[1:] + self.yedges[:-1])
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel(), self.density.ravel()])

    @staticmethod
    def header() -> list[str]:
        return ["x", "y", "density"]


def histogram2d(batch, col_i: int = 0, col_j: int = 1, bins: int = 30) -> Histogram2D:
    """Joint density of two columns; ``independence_tv`` is the TV distance
    between the binned joint law and the product of its marginals."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    x = _as_matrix(batch)
    if x.shape[0] == 0:
        raise DomainError("empty sample")
    counts, xe, ye = np.histogram2d(x[:, col_i], x[:, col_j], bins=bins)
    p = counts / counts.sum()
    area = np.outer(np.diff(xe), np.diff(ye))
    indep = 0.5 * np.abs(p - np.outer(p.sum(1), p.sum(0))).sum()
    return Histogram2D(xe, ye, p / area, float(indep))
