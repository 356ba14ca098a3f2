"""Betti numbers, Kunneth products and the factor-splitting obstruction.

A *factor* is a commuting square ``pi f = h pi`` with ``pi: E -> F`` onto.
A *splitting* is a linear ``sigma: F -> E`` with ``pi sigma = id`` and
``f sigma = sigma h``; it exists iff ``ker(pi)`` has an f-invariant
complement. Homology of tori and complex Grassmannians is torsion free, so
the Betti numbers here do not depend on the coefficient field.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .exact import InconsistentSystem, RationalMatrix, one_like, rank, solve_exact

OBSTRUCTED = "obstructed"
INCONCLUSIVE = "inconclusive"
INAPPLICABLE = "inapplicable"


@dataclass(frozen=True)
class BettiTable:
    label: str
    betti: tuple[int, ...]
    field: str = "Q"

    @property
    def total(self) -> int:
        return sum(self.betti)

    def __getitem__(self, i: int) -> int:
        return self.betti[i] if 0 <= i < len(self.betti) else 0

    def as_dict(self) -> dict:
        return {"space": self.label, "betti": list(self.betti), "field": self.field}


def torus_betti(d: int, field: str = "Q") -> BettiTable:
    if d < 1:
        raise ValueError("d must be >= 1")
    return BettiTable(f"T^{d}", tuple(math.comb(d, i) for i in range(d + 1)), field)


def box_partitions(k: int, width: int):
    """Partitions with at most k parts, each part at most width (as k-tuples)."""
    for parts in itertools.combinations_with_replacement(range(width, -1, -1), k):
        yield parts


def grassmann_betti(k: int, m: int, field: str = "Q") -> BettiTable:
    """Betti numbers of Gr_k(C^m) from its Schubert cells.

    The cells are indexed by partitions in a k x (m - k) box; a partition of
    i gives a cell of real dimension 2i.
    """
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < m, got k={k}, m={m}")
    top = 2 * k * (m - k)
    betti = [0] * (top + 1)
    for lam in box_partitions(k, m - k):
        betti[2 * sum(lam)] += 1
    return BettiTable(f"Gr_{k}(C^{m})", tuple(betti), field)


def kunneth(bM: BettiTable, bX: BettiTable) -> BettiTable:
    n = len(bM.betti) + len(bX.betti) - 1
    out = [0] * n
    for i, a in enumerate(bM.betti):
        for j, b in enumerate(bX.betti):
            out[i + j] += a * b
    return BettiTable(f"{bM.label} x {bX.label}", tuple(out), bM.field)


class MalformedFactor(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FactorInstance:
    f: RationalMatrix
    pi: RationalMatrix
    h: RationalMatrix

    def __post_init__(self):
        e, fdim = self.f.rows, self.h.rows
        if self.f.shape != (e, e) or self.h.shape != (fdim, fdim) or self.pi.shape != (fdim, e):
            raise MalformedFactor(
                f"shapes do not fit: f {self.f.shape}, pi {self.pi.shape}, h {self.h.shape}"
            )
        if rank(self.pi) != fdim:
            raise MalformedFactor("pi is not surjective")
        if not (self.pi @ self.f - self.h @ self.pi).is_zero():
            raise MalformedFactor("pi f != h pi")


def _zero_one(M: RationalMatrix):
    x = M.entries[0][0]
    zero = x - x
    return zero, one_like(zero)


def splitting_system(F: FactorInstance) -> tuple[RationalMatrix, list]:
    """Linear system in the entries of sigma (row-major, E x F).

    Rows encode pi sigma = I and f sigma - sigma h = 0.
    """
    e, fd = F.f.rows, F.h.rows
    zero, one = _zero_one(F.pi)
    idx = lambda a, b: a * fd + b  # noqa: E731
    rows, rhs = [], []
    for i in range(fd):
        for j in range(fd):
            row = [zero] * (e * fd)
            for a in range(e):
                row[idx(a, j)] = F.pi[i, a]
            rows.append(row)
            rhs.append(one if i == j else zero)
    for i in range(e):
        for j in range(fd):
            row = [zero] * (e * fd)
            for a in range(e):
                row[idx(a, j)] = row[idx(a, j)] + F.f[i, a]
            for b in range(fd):
                row[idx(i, b)] = row[idx(i, b)] - F.h[b, j]
            rows.append(row)
            rhs.append(zero)
    return RationalMatrix(rows, len(rows), e * fd), rhs


def factor_splitting_exact(F: FactorInstance) -> RationalMatrix | None:
    """An exact splitting sigma of the factor, or None when none exists."""
    A, b = splitting_system(F)
    try:
        x, _ = solve_exact(A, b)
    except InconsistentSystem:
        return None
    e, fd = F.f.rows, F.h.rows
    return RationalMatrix([x[a * fd : (a + 1) * fd] for a in range(e)], e, fd)


def is_splitting(F: FactorInstance, sigma: RationalMatrix) -> bool:
    ident = RationalMatrix.identity(F.h.rows, *reversed(_zero_one(F.pi)))
    return F.pi @ sigma == ident and F.f @ sigma == sigma @ F.h


@dataclass(frozen=True)
class ObstructionQuery:
    d: int
    k: int
    m: int
    homology_nonzero: bool
    field: str = "Q"

    def __post_init__(self):
        if self.d < 1 or not 1 <= self.k < self.m:
            raise ValueError(f"need d >= 1 and 1 <= k < m, got d={self.d}, k={self.k}, m={self.m}")


def obstruction_check(q: ObstructionQuery) -> str:
    """Degree-2 homological obstruction to invariant sections in Gr_k(C^m).

    Conditions checked in homological dimension 2:
      (1) H_2(T^d) != 0, which needs d >= 2;
      (2) for i = 1, H_1(Gr_k(C^m)) = 0, so H_1(T^d) may be nonzero;
      (3) the induced map H_2(T^d) -> H_2(Gr_k(C^m)) is nonzero (asserted by
          the caller through ``homology_nonzero``).
    """
    base = torus_betti(q.d, q.field)
    fiber = grassmann_betti(q.k, q.m, q.field)
    if base[2] == 0:
        return INAPPLICABLE
    if not (base[1] == 0 or fiber[1] == 0):
        return INCONCLUSIVE
    return OBSTRUCTED if q.homology_nonzero else INCONCLUSIVE
