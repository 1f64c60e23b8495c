"""Exact linear algebra over the rationals.

Matrices are lists of lists. Elimination runs on ``gmpy2.mpq`` for speed;
results are handed back as ``fractions.Fraction``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np

_mpq = gmpy2.mpq


def _q(x):
    if isinstance(x, Fraction):
        return _mpq(x.numerator, x.denominator)
    return _mpq(x)


def _f(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))

Matrix = list[list[Fraction]]


def to_fractions(a: Sequence[Sequence]) -> Matrix:
    return [[Fraction(x) for x in row] for row in a]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> Matrix:
    bt = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt] for row in a]


def row_echelon(a: Sequence[Sequence]) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = to_fractions(a)
    rows = len(m)
    cols = len(m[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                ri = m[i]
                m[i] = [x - f * y for x, y in zip(ri, m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def rank(a: Sequence[Sequence]) -> int:
    return len(row_echelon(a)[1])


def _gauss_jordan(aug: list, n: int) -> bool:
    for c in range(n):
        piv = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if piv is None:
            return False
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        pr = [x * inv for x in aug[c]]
        aug[c] = pr
        for i in range(n):
            if i != c:
                f = aug[i][c]
                if f != 0:
                    aug[i] = [x - f * y for x, y in zip(aug[i], pr)]
    return True


def inverse(a: Sequence[Sequence]) -> Matrix | None:
    """Gauss-Jordan inverse; ``None`` if the matrix is singular."""
    n = len(a)
    one, zero = _mpq(1), _mpq(0)
    aug = [[_q(x) for x in row] + [one if i == j else zero for j in range(n)] for i, row in enumerate(a)]
    if not _gauss_jordan(aug, n):
        return None
    return [[_f(x) for x in row[n:]] for row in aug]


def solve(a: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Solve ``a x = b`` for square nonsingular ``a``; ``None`` if singular."""
    n = len(a)
    aug = [[_q(x) for x in row] + [_q(b[i])] for i, row in enumerate(a)]
    if not _gauss_jordan(aug, n):
        return None
    return [_f(row[n]) for row in aug]


_PRIMES = (2147483629, 2147483587)


def _pivots_mod_p(a: np.ndarray, p: int) -> list[int]:
    m = np.array(a % p, dtype=np.int64)
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        m[[r, piv]] = m[[piv, r]]
        inv = pow(int(m[r, c]), p - 2, p)
        m[r] = (m[r] * inv) % p
        f = m[:, c].copy()
        f[r] = 0
        nzr = np.nonzero(f)[0]
        if nzr.size:
            # entries are below p < 2^31, so products fit in int64
            prod = (f[nzr][:, None] * m[r][None, :]) % p
            m[nzr] = (m[nzr] - prod) % p
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return pivots


def independent_columns(a: Sequence[Sequence[int]]) -> list[int]:
    """Pivot columns of an integer matrix, found by elimination modulo two
    large primes (the larger pivot set is kept; any set found this way is
    independent over the rationals)."""
    arr = np.array([[int(x) for x in row] for row in a], dtype=object)
    best: list[int] | None = None
    for p in _PRIMES:
        piv = _pivots_mod_p(np.array(arr % p, dtype=np.int64), p)
        if best is None or len(piv) > len(best):
            best = piv
    return best or []
