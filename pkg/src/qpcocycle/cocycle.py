"""Analytic quasi-periodic cocycles stored as matrix trigonometric polynomials.

A cocycle is ``A(x) = sum_n  A_n exp(2 pi i <n, x>)`` with finitely many
integer frequency vectors ``n``. Over a translation ``T`` its iterates are

    A^(n)(x) = A(T^{n-1} x) ... A(T x) A(x).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .linalg import qr
from .torus import Translation, orbit_array

GRID_SIZE = 64
DET_THRESHOLD = 1e-10
DIRECT_PRODUCT_MAX = 30


class CocycleError(ValueError):
    pass


class StripViolation(CocycleError):
    pass


class CommonZeroError(CocycleError):
    pass


class UnsatisfiableNormalization(CocycleError):
    pass


def _freq_key(n) -> tuple[int, ...]:
    return tuple(int(v) for v in n)


@dataclass(frozen=True, eq=False)
class FourierCocycle:
    d: int
    m: int
    coeffs: Mapping[tuple[int, ...], np.ndarray]
    r: float = 1.0
    _freqs: np.ndarray = field(init=False, repr=False)
    _mats: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d < 1 or self.m < 1:
            raise CocycleError("need d >= 1 and m >= 1")
        if not self.r > 0:
            raise CocycleError("strip radius must be positive")
        clean = {}
        for n, mat in self.coeffs.items():
            key = _freq_key(n)
            if len(key) != self.d:
                raise CocycleError(f"frequency {key} does not have length d={self.d}")
            mat = np.array(mat, dtype=complex)
            if mat.shape != (self.m, self.m):
                raise CocycleError(f"coefficient at {key} has shape {mat.shape}")
            if not np.all(np.isfinite(mat)):
                raise CocycleError(f"non-finite coefficient at {key}")
            mat.setflags(write=False)
            clean[key] = clean[key] + mat if key in clean else mat
        if not clean:
            clean[(0,) * self.d] = np.zeros((self.m, self.m), dtype=complex)
        keys = sorted(clean)
        object.__setattr__(self, "coeffs", {k: clean[k] for k in keys})
        object.__setattr__(self, "_freqs", np.array(keys, dtype=float).reshape(len(keys), self.d))
        object.__setattr__(self, "_mats", np.stack([clean[k] for k in keys]))

    @classmethod
    def constant(cls, M, d: int, r: float = 1.0) -> "FourierCocycle":
        M = np.asarray(M, dtype=complex)
        return cls(d, M.shape[0], {(0,) * d: M}, r)

    def evaluate_many(self, X) -> np.ndarray:
        """Evaluate at an array of points of shape (..., d)."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.d:
            raise ValueError(f"points have dimension {X.shape[-1]}, cocycle has d={self.d}")
        phases = np.exp(2j * np.pi * (X @ self._freqs.T))
        return np.tensordot(phases, self._mats, axes=([-1], [0]))

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)

    def __mul__(self, c) -> "FourierCocycle":
        c = complex(c)
        return FourierCocycle(self.d, self.m, {n: c * M for n, M in self.coeffs.items()}, self.r)

    __rmul__ = __mul__

    def __matmul__(self, other: "FourierCocycle") -> "FourierCocycle":
        """Pointwise matrix product, computed on Fourier data."""
        if (self.d, self.m) != (other.d, other.m):
            raise CocycleError("shape mismatch")
        out: dict[tuple[int, ...], np.ndarray] = {}
        for n, M in self.coeffs.items():
            for k, N in other.coeffs.items():
                key = tuple(a + b for a, b in zip(n, k))
                out[key] = out.get(key, 0) + M @ N
        return FourierCocycle(self.d, self.m, out, min(self.r, other.r))

    def grid_values(self, grid: int = GRID_SIZE) -> np.ndarray:
        axes = np.arange(grid) / grid
        pts = np.stack(np.meshgrid(*([axes] * self.d), indexing="ij"), axis=-1)
        return self.evaluate_many(pts.reshape(-1, self.d))

    def min_abs_det(self, grid: int = GRID_SIZE) -> float:
        return float(np.min(np.abs(np.linalg.det(self.grid_values(grid)))))

    def is_invertible(self, grid: int = GRID_SIZE, threshold: float = DET_THRESHOLD) -> bool:
        """Invertibility certificate: min |det A| over a grid^d sample."""
        return self.min_abs_det(grid) > threshold


def evaluate(C: FourierCocycle, x) -> np.ndarray:
    """A(x) = sum_n A_n exp(2 pi i <n, x>). Warns when |det A(x)| < 1e-10."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != C.d:
        raise ValueError(f"point has dimension {x.shape[0]}, cocycle has d={C.d}")
    A = C.evaluate_many(x)
    if abs(np.linalg.det(A)) < DET_THRESHOLD:
        warnings.warn(f"|det A(x)| below {DET_THRESHOLD} at x={tuple(x)}", RuntimeWarning, stacklevel=2)
    return A


@dataclass
class IterateResult:
    n: int
    Q: np.ndarray
    factors: np.ndarray
    matrix: np.ndarray | None

    def reassemble(self) -> np.ndarray:
        """Q R_n ... R_1; only meaningful while the entries stay finite."""
        P = self.Q.copy()
        for R in self.factors[::-1]:
            P = P @ R
        return P

    def log_diagonal_sums(self) -> np.ndarray:
        return np.sum(np.log(np.abs(np.diagonal(self.factors, axis1=-2, axis2=-1))), axis=0)


def qr_factors(C: FourierCocycle, T: Translation, X0, n: int, chunk: int = 2048):
    """QR-stabilized factors of A^(n) along the orbits of stacked phases.

    ``X0`` has shape (P, d). Returns ``(Q, R)`` with ``R`` of shape
    (P, n, m, m) such that ``A^(n)(x) = Q R[n-1] ... R[0]``.
    """
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    P = X0.shape[0]
    orbits = np.stack([orbit_array(T, x, n) for x in X0], axis=1)
    Q = np.broadcast_to(np.eye(C.m, dtype=complex), (P, C.m, C.m)).copy()
    R = np.empty((P, n, C.m, C.m), dtype=complex)
    for start in range(0, n, chunk):
        block = C.evaluate_many(orbits[start : start + chunk])
        for j, A in enumerate(block):
            Q, R[:, start + j] = qr(A @ Q)
    return Q, R


def iterate(C: FourierCocycle, T: Translation, x, n: int) -> IterateResult:
    """A^(n)(x), kept as ``Q R_n ... R_1`` plus the direct product when n <= 30."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    Q, R = qr_factors(C, T, x, n)
    matrix = None
    if n <= DIRECT_PRODUCT_MAX:
        pts = orbit_array(T, x[0], n)
        matrix = np.eye(C.m, dtype=complex)
        for A in C.evaluate_many(pts):
            matrix = A @ matrix
    return IterateResult(n=n, Q=Q[0], factors=R[0], matrix=matrix)


def complexify(C: FourierCocycle, y) -> FourierCocycle:
    """The cocycle x -> A(x + i y); coefficient n is scaled by exp(-2 pi <n, y>).

    The result carries the remaining strip radius r - max_j |y_j|.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != C.d:
        raise ValueError(f"shift has dimension {y.shape[0]}, cocycle has d={C.d}")
    if np.any(np.abs(y) >= C.r):
        raise StripViolation(f"|y| must stay below the strip radius {C.r}, got {tuple(y)}")
    coeffs = {n: M * math.exp(-2.0 * math.pi * float(np.dot(n, y))) for n, M in C.coeffs.items()}
    # x -> A(x + i y) extends holomorphically to |Im| < r - |y|
    return FourierCocycle(C.d, C.m, coeffs, C.r - float(np.max(np.abs(y))))


def scalar_series(data: Mapping, d: int | None = None) -> dict[tuple[int, ...], complex]:
    """Normalize scalar Fourier data ``{n: c}`` (n may be an int when d = 1)."""
    out: dict[tuple[int, ...], complex] = {}
    for n, c in data.items():
        key = (int(n),) if np.isscalar(n) else _freq_key(n)
        if d is not None and len(key) != d:
            raise CocycleError(f"frequency {key} does not have length {d}")
        out[key] = out.get(key, 0) + complex(c)
    return out


def conjugate_series(data: Mapping) -> dict[tuple[int, ...], complex]:
    """Fourier data of the pointwise complex conjugate (n -> -n, c -> conj c)."""
    return {tuple(-v for v in n): complex(c).conjugate() for n, c in data.items()}


def _eval_scalar(data: Mapping, X: np.ndarray) -> np.ndarray:
    out = np.zeros(X.shape[:-1], dtype=complex)
    for n, c in data.items():
        out += c * np.exp(2j * np.pi * (X @ np.asarray(n, dtype=float)))
    return out


def build_su_form(a: Mapping, b: Mapping, d: int = 2, r: float = 1.0,
                  grid: int = GRID_SIZE, threshold: float = DET_THRESHOLD) -> FourierCocycle:
    """The 2x2 cocycle [[a, -conj(b)], [b, conj(a)]] built from scalar Fourier data.

    Raises :class:`CommonZeroError` when |a|^2 + |b|^2 drops below
    ``threshold`` on the certification grid.
    """
    a = scalar_series(a, d)
    b = scalar_series(b, d)
    axes = np.arange(grid) / grid
    pts = np.stack(np.meshgrid(*([axes] * d), indexing="ij"), axis=-1)
    mod2 = np.abs(_eval_scalar(a, pts)) ** 2 + np.abs(_eval_scalar(b, pts)) ** 2
    if np.min(mod2) <= threshold:
        raise CommonZeroError(f"a and b nearly vanish together: min |a|^2+|b|^2 = {np.min(mod2):.3g}")
    coeffs: dict[tuple[int, ...], np.ndarray] = {}

    def put(series, i, j, sign=1.0):
        for n, c in series.items():
            M = coeffs.setdefault(n, np.zeros((2, 2), dtype=complex))
            M[i, j] += sign * c

    put(a, 0, 0)
    put(conjugate_series(b), 0, 1, -1.0)
    put(b, 1, 0)
    put(conjugate_series(a), 1, 1)
    return FourierCocycle(d, 2, coeffs, r)


def block_mu(lam: float, k: int, m: int) -> float | None:
    """Solve lam^(k-1) * mu^(m-k-1) = 1 for mu; None when the mu block is empty."""
    if m - k - 1 > 0:
        return lam ** (-(k - 1) / (m - k - 1))
    if k - 1 > 0 and lam != 1:
        raise UnsatisfiableNormalization(
            f"k={k}, m={m}: no mu block to balance lam^{k - 1} with lam={lam}"
        )
    return None


def build_block_cocycle(A2: FourierCocycle, d: int, k: int, m: int, lam: float,
                       det_tol: float = 1e-9) -> FourierCocycle:
    """blockdiag(lam I_{k-1}, A2(x1, x2), mu I_{m-k-1}) on T^d.

    ``A2`` must be a 2x2 cocycle on T^2 with determinant identically 1;
    ``mu`` is fixed by lam^(k-1) mu^(m-k-1) = 1.
    """
    if A2.d != 2 or A2.m != 2:
        raise CocycleError("A2 must be a 2x2 cocycle on T^2")
    if d < 2 or not 1 <= k < m:
        raise CocycleError(f"need d >= 2 and 1 <= k < m, got d={d}, k={k}, m={m}")
    dets = np.linalg.det(A2.grid_values(32))
    if np.max(np.abs(dets - 1)) > det_tol:
        raise CocycleError("A2 must have determinant identically 1")
    mu = block_mu(lam, k, m)
    coeffs: dict[tuple[int, ...], np.ndarray] = {}
    for n, M in A2.coeffs.items():
        big = np.zeros((m, m), dtype=complex)
        big[k - 1 : k + 1, k - 1 : k + 1] = M
        coeffs[tuple(n) + (0,) * (d - 2)] = big
    zero = (0,) * d
    const = coeffs.setdefault(zero, np.zeros((m, m), dtype=complex))
    for i in range(k - 1):
        const[i, i] += lam
    if mu is not None:
        for i in range(k + 1, m):
            const[i, i] += mu
    return FourierCocycle(d, m, coeffs, A2.r)


# -- JSON interchange -----------------------------------------------------


def to_json_dict(C: FourierCocycle) -> dict:
    return {
        "d": C.d,
        "m": C.m,
        "r": C.r,
        "coeffs": [
            {
                "n": list(n),
                "re": [[float(v) for v in row] for row in M.real],
                "im": [[float(v) for v in row] for row in M.imag],
            }
            for n, M in C.coeffs.items()
        ],
    }


def from_json_dict(obj: Mapping) -> FourierCocycle:
    try:
        d, m, r = int(obj["d"]), int(obj["m"]), float(obj["r"])
        coeffs = {}
        for entry in obj["coeffs"]:
            M = np.asarray(entry["re"], dtype=float) + 1j * np.asarray(entry["im"], dtype=float)
            key = _freq_key(entry["n"])
            coeffs[key] = coeffs.get(key, 0) + M
    except (KeyError, TypeError) as exc:
        raise CocycleError(f"malformed cocycle JSON: {exc}") from exc
    return FourierCocycle(d, m, coeffs, r)


def dumps(C: FourierCocycle) -> str:
    return json.dumps(to_json_dict(C), indent=1)


def loads(text: str) -> FourierCocycle:
    return from_json_dict(json.loads(text))


def save(C: FourierCocycle, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(C))
        fh.write("\n")


def load(path) -> FourierCocycle:
    with open(path) as fh:
        return loads(fh.read())
