"""Translations of the torus T^d = (R/Z)^d."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)

_TOKENS = {
    "sqrt2m1": math.sqrt(2.0) - 1.0,
    "sqrt3m1": math.sqrt(3.0) - 1.0,
}


def _reduce(values) -> tuple[float, ...]:
    out = []
    for v in values:
        r = float(v) % 1.0
        # x % 1.0 can round up to exactly 1.0 for tiny negative x
        if r >= 1.0:
            r = 0.0
        out.append(r)
    return tuple(out)


@dataclass(frozen=True)
class TorusPoint:
    coords: tuple[float, ...]

    def __init__(self, coords):
        coords = _reduce(np.atleast_1d(np.asarray(coords, dtype=float)))
        if len(coords) < 1:
            raise ValueError("torus dimension must be at least 1")
        object.__setattr__(self, "coords", coords)

    @property
    def d(self) -> int:
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __len__(self):
        return len(self.coords)


@dataclass(frozen=True)
class Translation:
    """The map x -> x + omega (mod 1)."""

    omega: tuple[float, ...]

    def __init__(self, omega):
        object.__setattr__(self, "omega", _reduce(np.atleast_1d(np.asarray(omega, dtype=float))))

    @property
    def d(self) -> int:
        return len(self.omega)

    def __call__(self, x: TorusPoint) -> TorusPoint:
        return TorusPoint([a + w for a, w in zip(x.coords, self.omega)])

    @classmethod
    def default(cls, d: int) -> "Translation":
        return cls(default_frequency(d))


def default_frequency(d: int) -> tuple[float, ...]:
    """Fractional parts of sqrt(p_j) over the first d primes.

    For d = 2 this is (sqrt2 - 1, sqrt3 - 1).
    """
    if not 1 <= d <= len(_PRIMES):
        raise ValueError(f"no default frequency for d={d}")
    return tuple(math.sqrt(p) - math.floor(math.sqrt(p)) for p in _PRIMES[:d])


def parse_frequency(tokens) -> tuple[float, ...]:
    """Parse decimal strings or the symbolic tokens ``sqrt2m1``/``sqrt3m1``.

    Accepts either a sequence of tokens or a single comma separated string.
    """
    if isinstance(tokens, str):
        tokens = [t for t in tokens.split(",") if t.strip()]
    out = []
    for tok in tokens:
        if isinstance(tok, (int, float)):
            out.append(float(tok))
            continue
        key = tok.strip().lower()
        if key in _TOKENS:
            out.append(_TOKENS[key])
        else:
            try:
                out.append(float(key))
            except ValueError:
                raise ValueError(f"bad frequency token {tok!r}") from None
    if not out:
        raise ValueError("empty frequency")
    return tuple(out)


def orbit_array(T: Translation, x0, n: int) -> np.ndarray:
    """Orbit x0, Tx0, ..., T^{n-1}x0 as an (n, d) array.

    Coordinates are reduced mod 1 after every step.
    """
    if n < 1:
        raise ValueError("orbit length must be >= 1")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != T.d:
        raise ValueError(f"point has dimension {x0.shape[0]}, translation has {T.d}")
    out = np.empty((n, T.d))
    for c, w in enumerate(T.omega):
        x = float(x0[c]) % 1.0
        col = out[:, c]
        for j in range(n):
            col[j] = x
            x += w
            if x >= 1.0:
                x -= 1.0
    return out


def orbit(T: Translation, x0: TorusPoint, n: int) -> list[TorusPoint]:
    return [TorusPoint(row) for row in orbit_array(T, x0, n)]


def diophantine_margin(omega, tau: float, N: int) -> float:
    """min over 0 < |n|_inf <= N of ||<n, omega>|| * |n|^tau.

    ``|n|`` is the sup norm and ``||.||`` the distance to the nearest integer.
    Only one of each pair +-n is scanned since both give the same value.
    """
    if N < 1 or tau <= 0:
        raise ValueError("need N >= 1 and tau > 0")
    omega = np.asarray(omega, dtype=float).reshape(-1)
    d = omega.shape[0]
    grid = np.indices((2 * N + 1,) * d).reshape(d, -1).T - N
    # keep one representative of each pair +-n (first nonzero entry positive)
    nz = grid != 0
    first = grid[np.arange(grid.shape[0]), np.argmax(nz, axis=1)]
    grid = grid[first > 0]
    size = np.abs(grid).max(axis=1).astype(float)
    t = grid @ omega
    dist = np.abs(t - np.round(t))
    return float(np.min(dist * size**tau))
