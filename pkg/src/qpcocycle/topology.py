"""Degrees and winding numbers of sampled maps T^2 -> S^2 and T^1 -> C*.

Fields live on the offset grid ((i + 1/2)/N, (j + 1/2)/N); index ``i`` runs
along x and ``j`` along y. The degree of a map into the unit sphere is the
normalized integral of the pulled-back area form

    deg = (1/4 pi) * integral of  phi . (d_x phi  x  d_y phi)  dx dy

with periodic central differences.

The Riemann sphere is identified with S^2 by
    w -> (2 Re w, -2 Im w, |w|^2 - 1) / (|w|^2 + 1),
which sends 0 to the south pole, infinity to the north pole and is
orientation preserving, so a holomorphic map of degree k has degree +k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RESIDUAL_TOL = 0.1
MIN_N = 32


class UnresolvedDegree(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SphereField:
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 3 or s.shape[0] != s.shape[1] or s.shape[2] != 3:
            raise ValueError(f"expected an (N, N, 3) array, got {s.shape}")
        err = np.max(np.abs(np.linalg.norm(s, axis=-1) - 1.0))
        if err > 1e-12:
            raise ValueError(f"samples are not unit vectors (max deviation {err:.2e})")
        object.__setattr__(self, "samples", s)

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    def __neg__(self) -> "SphereField":
        return SphereField(-self.samples)


@dataclass(frozen=True)
class DegreeResult:
    degree: int
    raw: float
    residual: float

    @property
    def resolved(self) -> bool:
        return self.residual < RESIDUAL_TOL

    def as_dict(self) -> dict:
        return {"degree": self.degree, "raw": self.raw, "residual": self.residual,
                "resolved": self.resolved}


def offset_grid(N: int) -> tuple[np.ndarray, np.ndarray]:
    t = (np.arange(N) + 0.5) / N
    return np.meshgrid(t, t, indexing="ij")


def sphere_degree(phi: SphereField) -> DegreeResult:
    if phi.N < MIN_N:
        raise ValueError(f"need N >= {MIN_N}, got {phi.N}")
    s = phi.samples
    dx = np.roll(s, -1, axis=0) - np.roll(s, 1, axis=0)
    dy = np.roll(s, -1, axis=1) - np.roll(s, 1, axis=1)
    # (dx/2h) x (dy/2h) * h^2 with h = 1/N leaves a factor 1/4
    integrand = np.sum(s * np.cross(dx, dy), axis=-1)
    raw = float(np.sum(integrand)) / (16.0 * math.pi)
    degree = int(round(raw))
    return DegreeResult(degree, raw, abs(raw - degree))


def sphere_degree_checked(phi: SphereField) -> DegreeResult:
    res = sphere_degree(phi)
    if not res.resolved:
        raise UnresolvedDegree(f"residual {res.residual:.3f} >= {RESIDUAL_TOL}; refine the grid")
    return res


def stereo_inverse(w) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    m2 = np.abs(w) ** 2
    return np.stack([2 * w.real, -2 * w.imag, m2 - 1], axis=-1) / (m2 + 1)[..., None]


def projective_points(a, b) -> np.ndarray:
    """Unit vectors for [a : b] in P(C^2), for arrays of any shape.

    Uses the chart w = a / b, switching to w' = b / a where |b| < |a|.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("a and b must have the same shape")
    if np.min(np.abs(a) ** 2 + np.abs(b) ** 2) <= 1e-12:
        raise ValueError("a and b vanish together at some sample")
    swap = np.abs(b) < np.abs(a)
    w = np.where(swap, 0, a / np.where(swap, 1, b))
    v = np.where(swap, b / np.where(swap, a, 1), 0)
    out = stereo_inverse(w)
    m2 = np.abs(v) ** 2
    alt = np.stack([2 * v.real, 2 * v.imag, 1 - m2], axis=-1) / (1 + m2)[..., None]
    out = np.where(swap[..., None], alt, out)
    out /= np.linalg.norm(out, axis=-1, keepdims=True)
    return out


def projective_to_sphere(a, b) -> SphereField:
    """SphereField of an (N, N) grid of samples [a : b]."""
    return SphereField(projective_points(a, b))


def normalize_field(f) -> SphereField:
    f = np.asarray(f, dtype=float)
    norms = np.linalg.norm(f, axis=-1)
    if np.min(norms) <= 1e-10:
        raise ValueError("surface passes through the origin")
    return SphereField(f / norms[..., None])


def winding_number_surface(f) -> DegreeResult:
    """Winding number of a sampled surface T^2 -> R^3 minus the origin."""
    return sphere_degree(normalize_field(f))


def circle_winding(u) -> int:
    """Winding number about 0 of a closed sampled loop u: T^1 -> C*."""
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.shape[0] < 64:
        raise ValueError("need at least 64 samples")
    if np.min(np.abs(u)) <= 1e-10:
        raise ValueError("loop passes through 0")
    steps = np.angle(np.roll(u, -1) / u)
    return int(round(float(np.sum(steps)) / (2 * math.pi)))


def herman_obstruction(deg_T: int, deg_Ap: int) -> bool:
    """True (obstructed) when deg_T - 1 does not divide deg_Ap."""
    q = int(deg_T) - 1
    if q == 0:
        return int(deg_Ap) != 0
    return int(deg_Ap) % q != 0


def homotopic_to_constant(phi: SphereField) -> bool:
    """Hopf: a map of a closed orientable surface to S^2 is null-homotopic iff degree 0."""
    return sphere_degree_checked(phi).degree == 0


# -- Weierstrass p on the square lattice Z + iZ ---------------------------

_Q = math.exp(-2 * math.pi)


def weierstrass_p(z, terms: int = 12) -> np.ndarray:
    """p(z) for the lattice Z + iZ via its q-expansion (q = exp(-2 pi)).

    p(z) = (2 pi i)^2 [ sum_n q^n u / (1 - q^n u)^2 + 1/12 - 2 sum_{n>0} q^n / (1 - q^n)^2 ]
    with u = exp(2 pi i z). Converges like q^terms, so the default is at
    machine precision away from the poles.
    """
    z = np.asarray(z, dtype=complex)
    u = np.exp(2j * math.pi * z)
    s = np.zeros_like(u)
    for n in range(-terms, terms + 1):
        qu = _Q**n * u
        s += qu / (1 - qu) ** 2
    const = 1 / 12 - 2 * sum(_Q**n / (1 - _Q**n) ** 2 for n in range(1, terms + 1))
    return (2j * math.pi) ** 2 * (s + const)


def weierstrass_p_lattice(z, radius: float = 6.0) -> np.ndarray:
    """Truncated lattice sum 1/z^2 + sum' [1/(z - w)^2 - 1/w^2] over |w| <= radius."""
    z = np.asarray(z, dtype=complex)
    M = int(math.floor(radius))
    out = 1 / z**2
    for a in range(-M, M + 1):
        for b in range(-M, M + 1):
            w = complex(a, b)
            if w == 0 or abs(w) > radius:
                continue
            out = out + (1 / (z - w) ** 2 - 1 / w**2)
    return out


# -- built-in fields -------------------------------------------------------


def constant_field(N: int, point=(0.0, 0.0, 1.0)) -> SphereField:
    p = np.asarray(point, dtype=float)
    return SphereField(np.broadcast_to(p / np.linalg.norm(p), (N, N, 3)).copy())


def wrap_field(N: int) -> SphereField:
    """(sin 2 pi y cos 2 pi x, sin 2 pi y sin 2 pi x, cos 2 pi y): degree 0."""
    x, y = offset_grid(N)
    tx, ty = 2 * math.pi * x, 2 * math.pi * y
    f = np.stack([np.sin(ty) * np.cos(tx), np.sin(ty) * np.sin(tx), np.cos(ty)], axis=-1)
    return SphereField(f / np.linalg.norm(f, axis=-1, keepdims=True))


def weierstrass_field(N: int) -> SphereField:
    """[p(x + i y) : 1] on the Riemann sphere; p has order 2, so degree 2."""
    x, y = offset_grid(N)
    wp = weierstrass_p(x + 1j * y)
    return projective_to_sphere(wp, np.ones_like(wp))


def torus_of_revolution(N: int, R: float = 2.0, r: float = 0.5) -> np.ndarray:
    x, y = offset_grid(N)
    tx, ty = 2 * math.pi * x, 2 * math.pi * y
    rho = R + r * np.cos(ty)
    return np.stack([rho * np.cos(tx), rho * np.sin(tx), r * np.sin(ty)], axis=-1)


def weierstrass_surface(N: int) -> np.ndarray:
    """The p field pushed off the unit sphere by a positive radial profile."""
    x, y = offset_grid(N)
    rho = 1.5 + 0.5 * np.sin(2 * math.pi * x) * np.cos(2 * math.pi * y)
    return weierstrass_field(N).samples * rho[..., None]


BUILTIN_FIELDS = ("constant", "wrap", "weierstrass", "torus-rev")


def builtin_surface(name: str, N: int) -> np.ndarray:
    """Samples (N, N, 3) of a named built-in map into R^3 minus the origin."""
    if name == "constant":
        return constant_field(N).samples
    if name == "wrap":
        return wrap_field(N).samples
    if name == "weierstrass":
        return weierstrass_field(N).samples
    if name == "torus-rev":
        return torus_of_revolution(N)
    raise ValueError(f"unknown field {name!r}; choose from {', '.join(BUILTIN_FIELDS)}")
