"""Brauer algebra combinatorics.

An element of the Brauer algebra on ``k`` strands is a perfect matching of
``2k`` points. Points ``0..k-1`` form the bottom (input, bra) row and points
``k..2k-1`` the top (output, ket) row. Its operator is

    F_d(s) = sum_i |i_k ... i_{2k-1}><i_0 ... i_{k-1}|  prod_{(p,q) in s} delta(i_p, i_q)

so a permutation ``s`` embeds as the pairs ``{a, k + s(a)}`` and agrees with
``perm``'s subsystem-permuting representation. The "bar" of a point is the
point directly across the diagram, ``a <-> a + k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import CapacityError, InvalidOrderError, OrderMismatchError, RealStatesRequiredError
from .perm import CycleType, InnerProductMatrix, Permutation, perfect_matchings

K_MAX = 6


@dataclass(frozen=True)
class PairPartition:
    pairs: tuple[tuple[int, int], ...]
    k: int

    def __post_init__(self):
        pairs = tuple(sorted(tuple(sorted((int(a), int(b)))) for a, b in self.pairs))
        pts = sorted(x for pr in pairs for x in pr)
        if pts != list(range(2 * self.k)):
            raise ValueError(f"pairs do not form a perfect matching of 0..{2 * self.k - 1}")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_permutation(cls, p: Permutation) -> "PairPartition":
        return cls(tuple((a, p.k + p.image[a]) for a in range(p.k)), p.k)

    @classmethod
    def identity(cls, k: int) -> "PairPartition":
        return cls(tuple((a, k + a) for a in range(k)), k)

    def partner(self) -> list[int]:
        out = [0] * (2 * self.k)
        for a, b in self.pairs:
            out[a] = b
            out[b] = a
        return out

    def is_permutation(self) -> bool:
        """True iff every pair joins the bottom row to the top row."""
        return all(a < self.k <= b for a, b in self.pairs)

    def as_permutation(self) -> Permutation:
        if not self.is_permutation():
            raise ValueError("element has horizontal pairs; not in the embedded S_k")
        image = [0] * self.k
        for a, b in self.pairs:
            image[a] = b - self.k
        return Permutation(tuple(image))

    def __repr__(self) -> str:
        return f"PairPartition[{self.k}]{list(self.pairs)}"


@dataclass(frozen=True)
class BrauerCycleType(CycleType):
    pass


def identity_element(k: int) -> PairPartition:
    return PairPartition.identity(k)


def swap_element() -> PairPartition:
    return PairPartition(((0, 3), (1, 2)), 2)


def pi_element() -> PairPartition:
    """The k=2 element pairing the two inputs and the two outputs."""
    return PairPartition(((0, 1), (2, 3)), 2)


def enumerate_brauer(k: int, k_max: int | None = None) -> list[PairPartition]:
    """All ``(2k-1)!!`` pair partitions in a fixed recursive order."""
    limit = K_MAX if k_max is None else k_max
    if k < 0:
        raise InvalidOrderError(f"order must be non-negative, got {k}")
    if k > limit:
        raise CapacityError("enumerate_brauer", k, limit)
    return [PairPartition(tuple(m), k) for m in perfect_matchings(range(2 * k))]


def transpose(s: PairPartition) -> PairPartition:
    """Reflect the diagram, exchanging the bottom and top rows."""
    k = s.k
    return PairPartition(tuple(((a + k) % (2 * k), (b + k) % (2 * k)) for a, b in s.pairs), k)


def brauer_compose(a: PairPartition, b: PairPartition) -> tuple[PairPartition, int]:
    """Diagram product: ``F_d(a) F_d(b) = d**loops * F_d(result)``.

    ``b`` is drawn below ``a``: the top row of ``b`` is glued to the bottom row
    of ``a``. Paths are followed from the outer points, and closed loops in
    the glued middle row are counted.
    """
    if a.k != b.k:
        raise OrderMismatchError(f"cannot compose elements of B_{a.k} and B_{b.k}")
    k = a.k
    pa, pb = a.partner(), b.partner()
    # middle point j is a's bottom point j and b's top point k + j
    used = [False] * k

    def walk(side: str, pt: int) -> int:
        # start on an outer point; return the outer point reached, in result labels
        while True:
            if side == "b":
                q = pb[pt]
                if q < k:
                    return q
                j = q - k
                used[j] = True
                side, pt = "a", j
            else:
                q = pa[pt]
                if q >= k:
                    return q
                used[q] = True
                side, pt = "b", k + q

    pairs = []
    done = [False] * (2 * k)
    for x in range(k):  # result bottom = b's bottom
        if done[x]:
            continue
        y = walk("b", x)
        done[x] = done[y] = True
        pairs.append((x, y))
    for x in range(k, 2 * k):  # result top = a's top
        if done[x]:
            continue
        y = walk("a", x)
        done[x] = done[y] = True
        pairs.append((x, y))

    loops = 0
    for j in range(k):
        if used[j]:
            continue
        loops += 1
        cur = j
        while not used[cur]:
            used[cur] = True
            cur = pa[cur]  # a's bottom partner, also on the bottom row (middle)
            used[cur] = True
            cur = pb[k + cur] - k  # across to b's top, follow b's top-top pair
    return PairPartition(tuple(pairs), k), loops


def brauer_cycles(s: PairPartition) -> tuple[list[list[int]], BrauerCycleType]:
    """Cycles closed under alternately taking the pair partner and the bar point.

    A cycle touching ``2L`` points has length ``L``; the trace of ``F_d(s)`` is
    ``d`` to the number of cycles.
    """
    k = s.k
    partner = s.partner()
    seen = [False] * (2 * k)
    cycles = []
    for start in range(2 * k):
        if seen[start]:
            continue
        cyc = []
        x = start
        while not seen[x]:
            seen[x] = True
            cyc.append(x)
            y = partner[x]
            seen[y] = True
            cyc.append(y)
            x = (y + k) % (2 * k)
        cycles.append(cyc)
    nu = [0] * k
    for cyc in cycles:
        nu[len(cyc) // 2 - 1] += 1
    return cycles, BrauerCycleType(tuple(nu))


def num_brauer_cycles(s: PairPartition) -> int:
    return len(brauer_cycles(s)[0])


def brauer_character(s: PairPartition, d: int) -> int:
    return int(d) ** num_brauer_cycles(s)


def trace_obs_power(s: PairPartition, d: int) -> int:
    """``Tr[F_d(s) O^{x k}]`` for a traceless symmetric ``O`` with ``O^2 = 1``.

    Every cycle of length L carries ``O^L``: trace ``d`` when L is even and 0
    when L is odd.
    """
    _, ct = brauer_cycles(s)
    if not ct.all_even():
        return 0
    return int(d) ** ct.num_cycles


def trace_state_product_brauer(s: PairPartition, G: InnerProductMatrix, assignment: Sequence[int]):
    """``Tr[(rho_{a_0} x ... x rho_{a_{k-1}}) F_d(s)]`` for real states.

    Bottom point ``a`` carries ``psi_{a}`` and top point ``k + a`` carries its
    conjugate, so a pair contributes one inner product; for real vectors all
    three pair kinds reduce to entries of ``G``.
    """
    if not G.real_flag:
        raise RealStatesRequiredError("Brauer traces require real-valued state vectors")
    k = s.k
    if len(assignment) != k:
        raise OrderMismatchError(f"assignment has length {len(assignment)}, expected {k}")
    for a in assignment:
        if not 0 <= a < G.m:
            raise IndexError(f"state index {a} out of range for {G.m} states")
    result = 1
    for p, q in s.pairs:
        result = result * G.entries[assignment[p % k], assignment[q % k]]
    return result
