"""Lyapunov spectrum of a cocycle over a torus translation.

The exponents come from the QR recursion ``A(T^j x) Q_j = Q_{j+1} R_j``:
``lambda_i = (1/n) sum_j log R_j[i, i]``, averaged over several phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cocycle import FourierCocycle
from .linalg import qr
from .torus import Translation, orbit_array

DEFAULT_GAP_TOL = 0.05


class LyapunovError(FloatingPointError):
    pass


@dataclass(frozen=True)
class Filtration:
    clusters: tuple[tuple[int, float], ...]
    plus_dim: int | None
    ambiguous: bool

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.clusters)

    @property
    def means(self) -> tuple[float, ...]:
        return tuple(mu for _, mu in self.clusters)


@dataclass
class LyapunovReport:
    exponents: np.ndarray
    n_used: int
    phases_used: int
    stderr: np.ndarray
    filtration: Filtration
    per_phase: np.ndarray = field(repr=False)
    log_det_average: float = 0.0
    invertible: bool = True

    def as_dict(self) -> dict:
        return {
            "exponents": [float(v) for v in self.exponents],
            "n_used": self.n_used,
            "phases_used": self.phases_used,
            "stderr": [float(v) for v in self.stderr],
            "log_det_average": float(self.log_det_average),
            "invertible": self.invertible,
            "filtration": {
                "clusters": [[d, float(mu)] for d, mu in self.filtration.clusters],
                "plus_dim": self.filtration.plus_dim,
                "ambiguous": self.filtration.ambiguous,
            },
        }


def cluster_exponents(exponents, gap_tol: float = DEFAULT_GAP_TOL) -> Filtration:
    """Group sorted exponents; a new cluster starts at a jump larger than gap_tol."""
    ex = sorted((float(v) for v in exponents), reverse=True)
    if not all(math.isfinite(v) for v in ex):
        raise LyapunovError("non-finite exponents")
    groups: list[list[float]] = [[ex[0]]]
    for prev, cur in zip(ex, ex[1:]):
        if prev - cur > gap_tol:
            groups.append([cur])
        else:
            groups[-1].append(cur)
    clusters = tuple((len(g), sum(g) / len(g)) for g in groups)
    ambiguous = any(abs(v) <= gap_tol for v in ex)
    plus_dim = None if ambiguous else sum(1 for v in ex if v > 0)
    if plus_dim in (0, len(ex)):
        plus_dim = None
    return Filtration(clusters, plus_dim, ambiguous)


def oseledets_dims(report: LyapunovReport, gap_tol: float = DEFAULT_GAP_TOL) -> Filtration:
    """Filtration clusters of a report.

    ``plus_dim`` is the dimension of E+ (the positive exponents); it is None
    when the verdict is ambiguous (an exponent within gap_tol of zero) or
    when all exponents share a sign.
    """
    return cluster_exponents(report.exponents, gap_tol)


def _log_diag_sums(C: FourierCocycle, T: Translation, phases: np.ndarray, n: int, chunk: int):
    P = phases.shape[0]
    orbits = np.stack([orbit_array(T, x, n) for x in phases], axis=1)
    Q = np.broadcast_to(np.eye(C.m, dtype=complex), (P, C.m, C.m)).copy()
    sums = np.zeros((P, C.m))
    logdet = np.zeros(P)
    for start in range(0, n, chunk):
        block = C.evaluate_many(orbits[start : start + chunk])
        with np.errstate(divide="ignore"):
            # a zero determinant becomes -inf and is reported below
            logdet += np.sum(np.log(np.abs(np.linalg.det(block))), axis=0)
        diag = np.empty((block.shape[0], P, C.m))
        for j, A in enumerate(block):
            Q, R = qr(A @ Q)
            diag[j] = np.diagonal(R, axis1=-2, axis2=-1).real
        sums += np.sum(np.log(diag), axis=0)
        if not (np.all(np.isfinite(sums)) and np.all(np.isfinite(logdet))):
            raise LyapunovError(f"non-finite accumulation before step {start + block.shape[0]}")
    return sums, logdet


def lyapunov_spectrum(C: FourierCocycle, T: Translation, n: int, phases,
                      gap_tol: float = DEFAULT_GAP_TOL, chunk: int = 4096,
                      check_invertible: bool = True) -> LyapunovReport:
    """Estimate the Lyapunov exponents of ``C`` over ``T`` from length-n orbits.

    ``phases`` is a sequence of starting points; the per-phase estimates are
    averaged and their standard deviation is reported as ``stderr``.
    """
    if n < 100:
        raise ValueError("orbit length n must be at least 100")
    if T.d != C.d:
        raise ValueError(f"translation has d={T.d}, cocycle has d={C.d}")
    phases = np.atleast_2d(np.asarray([np.asarray(p, dtype=float) for p in phases]))
    if phases.shape[1] != C.d:
        raise ValueError("phase dimension does not match the cocycle")
    invertible = C.is_invertible() if check_invertible else True
    sums, logdet = _log_diag_sums(C, T, phases, n, chunk)
    per_phase = sums / n
    mean = per_phase.mean(axis=0)
    order = np.argsort(-mean, kind="stable")
    exponents = mean[order]
    stderr = per_phase.std(axis=0)[order]
    return LyapunovReport(
        exponents=exponents,
        n_used=n,
        phases_used=phases.shape[0],
        stderr=stderr,
        filtration=cluster_exponents(exponents, gap_tol),
        per_phase=per_phase,
        log_det_average=float(np.mean(logdet) / n),
        invertible=invertible,
    )
