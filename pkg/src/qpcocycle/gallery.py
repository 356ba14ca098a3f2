"""Named example cocycles with their analytically known diagnostics."""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .cocycle import FourierCocycle, build_block_cocycle, build_su_form, block_mu
from .linalg import principal_angles_batch, qr
from .topology import DegreeResult, offset_grid, projective_to_sphere, sphere_degree


@dataclass(frozen=True)
class ExampleSpec:
    name: str
    defaults: dict[str, Any]
    provenance: str
    builder: Callable[..., "GalleryEntry"] = field(repr=False)


@dataclass
class Diagnostics:
    expected_exponents: tuple[float, ...] | None = None
    expected_det: complex | None = None

    def as_dict(self) -> dict:
        det = self.expected_det
        return {
            "expected_exponents": None if self.expected_exponents is None else list(self.expected_exponents),
            "expected_det": None if det is None else [det.real, det.imag],
        }


@dataclass
class GalleryEntry:
    cocycle: FourierCocycle
    diagnostics: Diagnostics
    params: dict[str, Any]


def parse_series(obj, d: int) -> dict[tuple[int, ...], complex]:
    """Scalar Fourier data from a mapping ``{"n1,n2": value}``.

    Keys may also be tuples; values are numbers, ``[re, im]`` pairs or
    Python complex literals such as ``"1+2j"``.
    """
    out: dict[tuple[int, ...], complex] = {}
    for key, val in dict(obj).items():
        if isinstance(key, str):
            n = tuple(int(v) for v in key.replace(" ", "").split(",") if v != "")
        else:
            n = tuple(int(v) for v in np.atleast_1d(key))
        if len(n) != d:
            raise ValueError(f"frequency {key!r} does not have {d} components")
        if isinstance(val, (list, tuple)):
            c = complex(float(val[0]), float(val[1]))
        elif isinstance(val, str):
            c = complex(val.replace(" ", ""))
        else:
            c = complex(val)
        out[n] = out.get(n, 0) + c
    return out


def _const_diag(a=2.0, b=0.5, d=2) -> GalleryEntry:
    a, b = float(a), float(b)
    C = FourierCocycle.constant(np.diag([a, b]), int(d))
    ex = tuple(sorted((math.log(abs(a)), math.log(abs(b))), reverse=True))
    return GalleryEntry(C, Diagnostics(ex, complex(a * b)), {"a": a, "b": b, "d": int(d)})


def _unitary_rotation(d=2) -> GalleryEntry:
    d = int(d)
    e1 = (1,) + (0,) * (d - 1)
    m1 = (-1,) + (0,) * (d - 1)
    # [[cos, -sin], [sin, cos]] of 2 pi x_1 split into e^{+-2 pi i x_1} parts
    plus = 0.5 * np.array([[1, 1j], [-1j, 1]])
    minus = 0.5 * np.array([[1, -1j], [1j, 1]])
    C = FourierCocycle(d, 2, {e1: plus, m1: minus})
    return GalleryEntry(C, Diagnostics((0.0, 0.0), 1 + 0j), {"d": d})


def _triangular(c=2.0, offdiag=1.0, d=2) -> GalleryEntry:
    """[[c e(x1), offdiag e(x2)], [0, e(-x1)/c]] with e(t) = exp(2 pi i t)."""
    c, offdiag, d = float(c), complex(offdiag), int(d)
    if d < 2:
        raise ValueError("triangular-jensen needs d >= 2")
    z = (0,) * (d - 2)
    coeffs = {
        (1, 0) + z: np.array([[c, 0], [0, 0]]),
        (-1, 0) + z: np.array([[0, 0], [0, 1 / c]]),
    }
    if offdiag != 0:
        coeffs[(0, 1) + z] = np.array([[0, offdiag], [0, 0]])
    C = FourierCocycle(d, 2, coeffs)
    lc = math.log(abs(c))
    params = {"c": c, "offdiag": [offdiag.real, offdiag.imag], "d": d}
    return GalleryEntry(C, Diagnostics((max(lc, -lc), min(lc, -lc)), 1 + 0j), params)


def _su_form(a=None, b=None, d=2) -> GalleryEntry:
    d = int(d)
    if a is None:
        a = {"0,0": 2, "1,0": 1}
    if b is None:
        b = {"0,1": 1}
    sa, sb = parse_series(a, d), parse_series(b, d)
    C = build_su_form(sa, sb, d)
    params = {
        "a": {",".join(map(str, n)): [c.real, c.imag] for n, c in sa.items()},
        "b": {",".join(map(str, n)): [c.real, c.imag] for n, c in sb.items()},
        "d": d,
    }
    return GalleryEntry(C, Diagnostics(), params)


def _block_embedding(d=3, k=2, m=4, lam=3.0, c=2.0, offdiag=1.0) -> GalleryEntry:
    d, k, m, lam = int(d), int(k), int(m), float(lam)
    seed = _triangular(c, offdiag, 2)
    C = build_block_cocycle(seed.cocycle, d, k, m, lam)
    mu = block_mu(lam, k, m)
    ex = [math.log(lam)] * (k - 1) + list(seed.diagnostics.expected_exponents)
    if mu is not None:
        ex += [math.log(mu)] * (m - k - 1)
    params = {"d": d, "k": k, "m": m, "lam": lam, "c": float(c), "offdiag": seed.params["offdiag"]}
    return GalleryEntry(C, Diagnostics(tuple(sorted(ex, reverse=True)), 1 + 0j), params)


def su_form_degree(C: FourierCocycle, N: int = 128) -> DegreeResult:
    """Degree of x -> [a(x) : b(x)] for a 2x2 cocycle on T^2, read off its first column.

    For the su-form construction the first column is (a, b). Because (a, b)
    never vanishes together it lifts the map to C^2 minus 0, which forces
    degree 0; the measurement is reported rather than assumed.
    """
    if C.d != 2 or C.m != 2:
        raise ValueError("need a 2x2 cocycle on T^2")
    x, y = offset_grid(N)
    col = C.evaluate_many(np.stack([x, y], axis=-1))[..., :, 0]
    return sphere_degree(projective_to_sphere(col[..., 0], col[..., 1]))


def block_factorization_angles(C: FourierCocycle, A2: FourierCocycle, k: int, X) -> np.ndarray:
    """Angles between C(x) V_k and span(V_{k-1}, p(A2(x1, x2) e1)) at phases X.

    ``V_j`` is the span of the first j basis vectors and ``p`` embeds C^2 into
    coordinates k-1, k. For the block construction the two spaces agree.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = C.m
    image = C.evaluate_many(X)[:, :, :k]
    col = A2.evaluate_many(X[:, :2])[:, :, 0]
    target = np.zeros((X.shape[0], m, k), dtype=complex)
    for i in range(k - 1):
        target[:, i, i] = 1.0
    target[:, k - 1 : k + 1, k - 1] = col
    return principal_angles_batch(qr(image)[0], qr(target)[0])


def _phase_diag(a=2.0, b=0.5, d=2) -> GalleryEntry:
    """diag(a e(x1), b): constant moduli, so exponents log|a|, log|b|."""
    a, b, d = float(a), float(b), int(d)
    z = (0,) * (d - 1)
    C = FourierCocycle(d, 2, {(1,) + z: np.diag([a, 0]), (0,) + z: np.diag([0, b])})
    ex = tuple(sorted((math.log(abs(a)), math.log(abs(b))), reverse=True))
    return GalleryEntry(C, Diagnostics(ex, None), {"a": a, "b": b, "d": d})


GALLERY: dict[str, ExampleSpec] = {
    s.name: s
    for s in (
        ExampleSpec("const-diag", {"a": 2.0, "b": 0.5, "d": 2}, "constant hyperbolic cocycle", _const_diag),
        ExampleSpec("unitary-rotation", {"d": 2}, "rotation by 2 pi x_1", _unitary_rotation),
        ExampleSpec("triangular-jensen", {"c": 2.0, "offdiag": 1.0, "d": 2},
                    "SL_2 seed with nonzero exponents for the block construction", _triangular),
        ExampleSpec("su-form", {"d": 2}, "the [[a, -conj b], [b, conj a]] construction", _su_form),
        ExampleSpec("block-embedding", {"d": 3, "k": 2, "m": 4, "lam": 3.0, "c": 2.0, "offdiag": 1.0},
                    "blockdiag(lam I, A2(x1, x2), mu I)", _block_embedding),
        ExampleSpec("phase-diag", {"a": 2.0, "b": 0.5, "d": 2},
                    "diag(a e(x1), b), used for the complexified sweep", _phase_diag),
    )
}


def example(name: str, params: dict | None = None) -> GalleryEntry:
    try:
        spec = GALLERY[name]
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {', '.join(GALLERY)}") from None
    params = dict(params or {})
    unknown = set(params) - set(inspect.signature(spec.builder).parameters)
    if unknown:
        raise ValueError(f"unknown parameters for {name}: {', '.join(sorted(unknown))}")
    return spec.builder(**params)
