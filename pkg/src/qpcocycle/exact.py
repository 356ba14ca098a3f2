"""Exact linear algebra over Q, Q(i) and prime fields.

Elimination is written once against the field operations (+, -, *, /, ==)
so the same code runs on :class:`fractions.Fraction`,
:class:`GaussianRational` and :class:`ModP` entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class InconsistentSystem(ValueError):
    """Raised by :func:`solve_exact` when ``A x = b`` has no solution."""


@dataclass(frozen=True)
class GaussianRational:
    re: Fraction
    im: Fraction = Fraction(0)

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    @staticmethod
    def _lift(other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, complex):
            return GaussianRational(Fraction(other.real), Fraction(other.imag))
        return GaussianRational(other)

    def __add__(self, other):
        o = self._lift(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __truediv__(self, other):
        o = self._lift(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero")
        num = self * o.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __eq__(self, other):
        try:
            o = self._lift(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        return f"{self.re}+{self.im}i" if self.im > 0 else f"{self.re}-{-self.im}i"


@dataclass(frozen=True)
class ModP:
    value: int
    p: int

    def __init__(self, value, p):
        object.__setattr__(self, "p", int(p))
        object.__setattr__(self, "value", int(value) % int(p))

    def _lift(self, other):
        if isinstance(other, ModP):
            if other.p != self.p:
                raise ValueError("mixing different prime fields")
            return other
        return ModP(int(other), self.p)

    def __add__(self, other):
        return ModP(self.value + self._lift(other).value, self.p)

    __radd__ = __add__

    def __neg__(self):
        return ModP(-self.value, self.p)

    def __sub__(self, other):
        return ModP(self.value - self._lift(other).value, self.p)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        return ModP(self.value * self._lift(other).value, self.p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o.value == 0:
            raise ZeroDivisionError("division by zero")
        return ModP(self.value * pow(o.value, -1, self.p), self.p)

    def __eq__(self, other):
        if isinstance(other, ModP):
            return self.p == other.p and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __str__(self):
        return str(self.value)


def parse_rational(text) -> Fraction | GaussianRational:
    """Parse ``"p/q"``, integers, or Gaussian forms such as ``"1/2+3i"``."""
    if isinstance(text, (Fraction, GaussianRational, int)):
        return text if not isinstance(text, int) else Fraction(text)
    s = str(text).strip().replace(" ", "")
    if not s.endswith("i"):
        return Fraction(s)
    body = s[:-1]
    # split at the last sign that is not the leading one
    cut = max(body.rfind("+", 1), body.rfind("-", 1))
    if cut <= 0:
        im = body if body not in ("", "+", "-") else body + "1"
        return GaussianRational(0, Fraction(im))
    re, im = body[:cut], body[cut:]
    if im in ("+", "-"):
        im += "1"
    return GaussianRational(Fraction(re), Fraction(im))


def format_rational(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    if isinstance(x, GaussianRational):
        if x.im == 0:
            return format_rational(x.re)
        sign = "+" if x.im > 0 else "-"
        return f"{format_rational(x.re)}{sign}{format_rational(abs(x.im))}i"
    return str(x)


class RationalMatrix:
    """Dense matrix with exact entries (Fraction, GaussianRational or ModP)."""

    def __init__(self, entries: Sequence[Sequence], rows: int | None = None, cols: int | None = None):
        data = [list(r) for r in entries]
        if rows is None:
            rows = len(data)
        if cols is None:
            cols = len(data[0]) if data else 0
        if len(data) != rows or any(len(r) != cols for r in data):
            raise ValueError("ragged matrix data")
        self.rows = rows
        self.cols = cols
        self.entries = tuple(
            tuple(x if isinstance(x, (GaussianRational, ModP)) else parse_rational(x) for x in r)
            for r in data
        )

    @classmethod
    def identity(cls, n: int, one=Fraction(1), zero=Fraction(0)) -> "RationalMatrix":
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)], n, n)

    @classmethod
    def zeros(cls, rows: int, cols: int, zero=Fraction(0)) -> "RationalMatrix":
        return cls([[zero] * cols for _ in range(rows)], rows, cols)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = self.entries[i][0] * other.entries[0][j] if self.cols else Fraction(0)
                for t in range(1, self.cols):
                    acc = acc + self.entries[i][t] * other.entries[t][j]
                row.append(acc)
            out.append(row)
        return RationalMatrix(out, self.rows, other.cols)

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return RationalMatrix(
            [[a - b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)],
            self.rows,
            self.cols,
        )

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and all(
            a == b for r, s in zip(self.entries, other.entries) for a, b in zip(r, s)
        )

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.entries for x in r)

    def column(self, j: int) -> list:
        return [r[j] for r in self.entries]

    def to_strings(self) -> list[list[str]]:
        return [[format_rational(x) for x in r] for r in self.entries]

    def __repr__(self):
        return f"RationalMatrix({self.to_strings()})"


def rref(rows: list[list]) -> tuple[list[list], list[int]]:
    """Reduced row echelon form of a list-of-rows matrix; returns (R, pivots)."""
    M = [list(r) for r in rows]
    if not M:
        return M, []
    n_rows, n_cols = len(M), len(M[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if not M[i][c] == 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = M[r][c]
        M[r] = [x / inv for x in M[r]]
        for i in range(n_rows):
            if i != r and not M[i][c] == 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return M, pivots


def rank(A: RationalMatrix) -> int:
    return len(rref([list(r) for r in A.entries])[1])


def solve_exact(A: RationalMatrix, b: Sequence) -> tuple[list, list[list]]:
    """Solve ``A x = b`` exactly.

    Returns a particular solution (free variables set to zero) and a basis
    of the nullspace of ``A``. Raises :class:`InconsistentSystem` if there
    is no solution.
    """
    if len(b) != A.rows:
        raise ValueError(f"rhs has length {len(b)}, matrix has {A.rows} rows")
    if A.rows == 0:
        zero = Fraction(0)
        basis = [[Fraction(int(i == j)) for i in range(A.cols)] for j in range(A.cols)]
        return [zero] * A.cols, basis
    b = [x if isinstance(x, (GaussianRational, ModP)) else parse_rational(x) for x in b]
    aug = [list(r) + [bi] for r, bi in zip(A.entries, b)]
    R, pivots = rref(aug)
    n = A.cols
    if n in pivots:
        raise InconsistentSystem("inconsistent")
    sample = A.entries[0][0] if n else b[0]
    zero, one = sample - sample, one_like(sample)
    x = [zero] * n
    for i, c in enumerate(pivots):
        x[c] = R[i][n]
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [zero] * n
        v[fc] = one
        for i, c in enumerate(pivots):
            v[c] = -R[i][fc]
        basis.append(v)
    return x, basis


def one_like(x):
    if isinstance(x, ModP):
        return ModP(1, x.p)
    if isinstance(x, GaussianRational):
        return GaussianRational(1)
    return Fraction(1)
