"""Tail probabilities and concentration bounds for QNN outputs and gradients.

All bounds model a single output as ``N(0, sigma^2)`` with ``sigma^2 = 1/d``
(unitary) or ``2/d`` (orthogonal) and are clamped to ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import special

from .errors import DomainError
from .exact_weingarten import check_group
from .perm import num_pairings

KINDS = ("gaussian-exact", "chebyshev", "tdesign", "gradient-union", "loss")


@dataclass(frozen=True)
class TailBound:
    kind: str
    value: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.value <= 1:
            raise DomainError(f"tail bound {self.value} outside [0, 1]")


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, float(p)))


def output_sigma(d: int, group: str = "unitary") -> float:
    c = 2 if check_group(group) == "orthogonal" else 1
    return math.sqrt(c / d)


def _check(c: float, sigma: float) -> None:
    if not c >= 0:
        raise DomainError(f"threshold must be >= 0, got {c}")
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")


def gaussian_tail(c: float, sigma: float) -> float:
    """``P(|X| >= c)`` for ``X ~ N(0, sigma^2)``: ``erfc(c / (sigma sqrt 2))``."""
    _check(c, sigma)
    return _clamp(special.erfc(c / (sigma * math.sqrt(2))))


def log_gaussian_tail(c: float, sigma: float) -> float:
    """Natural log of :func:`gaussian_tail`, finite far beyond float underflow."""
    _check(c, sigma)
    return min(0.0, math.log(2) + float(special.log_ndtr(-c / sigma)))


def gaussian_upper_tail(x: float, sigma: float) -> float:
    """One-sided ``P(X >= x)`` for ``X ~ N(0, sigma^2)``, any real x."""
    return _clamp(special.ndtr(-x / sigma))


def literal_constant_tail(c: float, d: int) -> float:
    """``erfc(c sqrt d) / sqrt 2``, kept for reporting only (not a valid tail)."""
    return float(special.erfc(c * math.sqrt(d)) / math.sqrt(2))


def chebyshev_bound(c: float, variance: float) -> float:
    if c <= 0:
        raise DomainError(f"Chebyshev bound needs c > 0, got {c}")
    return _clamp(variance / c**2)


def tdesign_bound(c: float, d: int, t: int, group: str = "unitary") -> float:
    """Markov bound on ``C^{2h}``, ``h = floor(t/2)``, using Gaussian moments:
    ``(2h)! / (2^h h!) * (sigma^2 / c^2)^h``; for the unitary group this is
    ``(2h)! / (2^h (d c^2)^h h!)``."""
    if t < 2:
        raise DomainError(f"t-design bound needs t >= 2, got {t}")
    if c <= 0:
        raise DomainError(f"t-design bound needs c > 0, got {c}")
    h = t // 2
    var = output_sigma(d, group) ** 2
    return _clamp(num_pairings(2 * h) * (var / c**2) ** h)


def gradient_tail_bound(c: float, d: int) -> float:
    """Union bound ``P(|C+ - C-| >= c) <= P(|C+| >= c/2) + P(|C-| >= c/2)``
    with Gaussian single-output tails (unitary group)."""
    if c <= 0:
        return 1.0
    return _clamp(2 * gaussian_tail(c / 2, output_sigma(d)))


def literal_constant_gradient_tail(c: float, d: int) -> float:
    """Union bound with the literal constants ``2 erfc(c sqrt(d/2)) / sqrt 2`` (reporting only)."""
    return float(2 * special.erfc(c * math.sqrt(d / 2)) / math.sqrt(2))


def loss_concentration_bound(c: float, y: float, d: int, group: str = "unitary") -> float:
    """Bound on ``P(|L - E L| >= c)`` for ``L = (C - y)^2``, ``E L = y^2 + sigma^2``.

    With ``m = y^2 + sigma^2`` the event splits into ``|C - y| >= sqrt(m + c)``
    (two one-sided Gaussian tails) and ``|C - y| <= sqrt(m - c)``. The latter
    interval is bounded by the one-sided tail beyond its endpoint nearest to
    zero when it excludes 0, and by 1 otherwise. For ``y = 0`` and
    ``c >= sigma^2`` this is the Gamma(1/2, 2 sigma^2) survival function of
    ``C^2`` at ``sigma^2 + c``.
    """
    if c <= 0:
        raise DomainError(f"loss bound needs c > 0, got {c}")
    if abs(y) > 1:
        raise DomainError(f"label must lie in [-1, 1], got {y}")
    sigma = output_sigma(d, group)
    m = y * y + sigma * sigma
    s = math.sqrt(m + c)
    p = gaussian_upper_tail(y + s, sigma) + gaussian_upper_tail(s - y, sigma)
    if c < m:
        u = math.sqrt(m - c)
        if u < abs(y):
            p += gaussian_upper_tail(abs(y) - u, sigma)
        else:
            p += 1.0
    return _clamp(p)


def tail_report(c: float, d: int, group: str = "unitary", y: float = 0.0, ts=(2, 4, 6)) -> list[TailBound]:
    """Every bound at ``(c, d)`` plus the literal-constant variants for comparison."""
    group = check_group(group)
    sigma = output_sigma(d, group)
    echo = {"c": c, "d": d, "group": group}
    out = [
        TailBound("gaussian-exact", gaussian_tail(c, sigma), {**echo, "sigma": sigma}),
        TailBound("chebyshev", chebyshev_bound(c, sigma**2), {**echo, "variance": sigma**2}),
    ]
    out += [TailBound("tdesign", tdesign_bound(c, d, t, group), {**echo, "t": t}) for t in ts]
    out.append(TailBound("loss", loss_concentration_bound(c, y, d, group), {**echo, "y": y}))
    if group == "unitary":
        out.append(TailBound("gradient-union", gradient_tail_bound(c, d), echo))
    literal = {
        "gaussian-literal": literal_constant_tail(c, d),
        "gradient-literal": literal_constant_gradient_tail(c, d),
    }
    out += [TailBound(k, _clamp(v), {**echo, "unclamped": v}) for k, v in literal.items()]
    return out
