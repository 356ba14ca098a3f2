"""Small dense complex linear algebra.

Every routine accepts a single matrix or a stack of matrices with shape
``(..., rows, cols)``; the stacked form is what the Lyapunov and domination
loops use to advance many phases at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

SVD_TOL = 1e-14
SVD_MAX_SWEEPS = 60
RANK_TOL = 1e-14


class RankDeficientError(np.linalg.LinAlgError):
    pass


def _as_complex(M) -> np.ndarray:
    M = np.asarray(M)
    if not np.iscomplexobj(M):
        M = M.astype(complex)
    return M


@numba.njit(cache=True)
def _mgs(A, Q, R, tol):
    nb, rows, cols = A.shape
    v = np.empty(rows, dtype=np.complex128)
    for b in range(nb):
        scale = 0.0
        for i in range(rows):
            for j in range(cols):
                scale += A[b, i, j].real ** 2 + A[b, i, j].imag ** 2
        scale = np.sqrt(scale)
        for j in range(cols):
            for t in range(rows):
                v[t] = A[b, t, j]
            for _ in range(2):
                for i in range(j):
                    c = 0j
                    for t in range(rows):
                        c += Q[b, t, i].conjugate() * v[t]
                    R[b, i, j] += c
                    for t in range(rows):
                        v[t] -= c * Q[b, t, i]
            nrm = 0.0
            for t in range(rows):
                nrm += v[t].real ** 2 + v[t].imag ** 2
            nrm = np.sqrt(nrm)
            if not nrm > tol * scale:
                return j
            R[b, j, j] = nrm
            for t in range(rows):
                Q[b, t, j] = v[t] / nrm
    return -1


def qr(M):
    """Thin QR by modified Gram-Schmidt with one re-orthogonalization pass.

    Returns ``(Q, R)`` with ``R`` upper triangular and a real nonnegative
    diagonal. Raises :class:`RankDeficientError` when a diagonal entry of R
    falls below ``1e-14 * ||M||``.
    """
    A = _as_complex(M)
    if A.ndim < 2:
        raise ValueError("qr needs a matrix")
    rows, cols = A.shape[-2:]
    if cols > rows:
        raise ValueError("qr needs rows >= cols")
    batch = A.shape[:-2]
    flat = np.ascontiguousarray(A.reshape((-1, rows, cols)), dtype=np.complex128)
    Q = np.empty_like(flat)
    R = np.zeros((flat.shape[0], cols, cols), dtype=np.complex128)
    bad = _mgs(flat, Q, R, RANK_TOL)
    if bad >= 0:
        raise RankDeficientError(f"rank deficient at column {bad}")
    Q = Q.reshape(batch + (rows, cols))
    R = R.reshape(batch + (cols, cols))
    return Q, R


def svd(M):
    """One-sided (Hestenes) Jacobi SVD.

    Returns ``(U, s, V)`` with ``M = U @ diag(s) @ V^H`` and ``s`` sorted
    descending. Works for square and tall matrices.
    """
    A = _as_complex(M)
    rows, cols = A.shape[-2:]
    if cols > rows:
        U, s, V = svd(np.swapaxes(A, -1, -2).conj())
        return V, s, U
    batch = A.shape[:-2]
    # work on M / max|M_ij| so squared column norms neither overflow nor underflow
    scale = np.max(np.abs(A), axis=(-2, -1)) if A.size else np.ones(batch)
    scale = np.where(scale > 0, scale, 1.0)
    W = A / scale[..., None, None]
    V = np.broadcast_to(np.eye(cols, dtype=A.dtype), batch + (cols, cols)).copy()
    for _ in range(SVD_MAX_SWEEPS):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                wp, wq = W[..., :, p], W[..., :, q]
                alpha = np.sum(np.abs(wp) ** 2, axis=-1)
                beta = np.sum(np.abs(wq) ** 2, axis=-1)
                gamma = np.sum(wp.conj() * wq, axis=-1)
                g = np.abs(gamma)
                # columns already annihilated to roundoff (norm^2 < 1e-280 after
                # scaling) are left alone; rotating them only amplifies noise
                act = (g > SVD_TOL * np.sqrt(alpha * beta)) & (np.minimum(alpha, beta) > 1e-280)
                if not np.any(act):
                    continue
                rotated = True
                gs = np.where(act, g, 1.0)
                phase = np.where(act, gamma / gs, 1.0)
                zeta = (beta - alpha) / (2.0 * gs)
                t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.hypot(1.0, t)
                s = np.where(act, c * t, 0.0)
                c = np.where(act, c, 1.0)
                c_, s_, ph = c[..., None], s[..., None], phase.conj()[..., None]
                for X in (W, V):
                    xp = X[..., :, p].copy()
                    xq = X[..., :, q] * ph
                    X[..., :, p] = c_ * xp - s_ * xq
                    X[..., :, q] = (s_ * xp + c_ * xq) * ph.conj()
        if not rotated:
            break
    s = np.sqrt(np.sum(np.abs(W) ** 2, axis=-2))
    order = np.argsort(-s, axis=-1, kind="stable")
    s = np.take_along_axis(s, order, axis=-1)
    W = np.take_along_axis(W, order[..., None, :], axis=-1)
    V = np.take_along_axis(V, order[..., None, :], axis=-1)
    U = _left_vectors(W, s)
    return U, s * scale[..., None], V


def _left_vectors(W, s):
    rows, cols = W.shape[-2:]
    tiny = s <= SVD_TOL * np.maximum(s[..., :1], np.finfo(float).tiny)
    U = W / np.where(tiny, 1.0, s)[..., None, :]
    if not np.any(tiny):
        return U
    # complete columns belonging to zero singular values
    flat_U = U.reshape((-1, rows, cols))
    flat_tiny = tiny.reshape((-1, cols))
    for b in np.nonzero(flat_tiny.any(axis=1))[0]:
        good = list(np.nonzero(~flat_tiny[b])[0])
        basis = [flat_U[b, :, j] for j in good]
        for j in np.nonzero(flat_tiny[b])[0]:
            for e in np.eye(rows, dtype=complex):
                v = e.copy()
                for _ in range(2):
                    for u in basis:
                        v -= np.vdot(u, v) * u
                n = np.linalg.norm(v)
                if n > 1e-8:
                    v /= n
                    break
            basis.append(v)
            flat_U[b, :, j] = v
    return flat_U.reshape(U.shape)


def singular_values(M):
    return svd(M)[1]


@dataclass(frozen=True)
class SubspaceFrame:
    """An m x k matrix with orthonormal columns spanning a point of Gr_k(C^m)."""

    frame: np.ndarray

    def __post_init__(self):
        F = _as_complex(self.frame)
        if F.ndim != 2 or not 1 <= F.shape[1] <= F.shape[0]:
            raise ValueError(f"bad frame shape {F.shape}")
        gram = F.conj().T @ F
        if np.max(np.abs(gram - np.eye(F.shape[1]))) > 1e-10:
            raise ValueError("frame columns are not orthonormal")
        object.__setattr__(self, "frame", F)

    @classmethod
    def span(cls, vectors) -> "SubspaceFrame":
        """Orthonormalize the columns of ``vectors`` (m x k)."""
        A = _as_complex(vectors)
        if A.ndim == 1:
            A = A[:, None]
        Q, _ = qr(A)
        return cls(Q)

    @property
    def ambient(self) -> int:
        return self.frame.shape[0]

    @property
    def rank(self) -> int:
        return self.frame.shape[1]


def principal_angles_batch(U, V) -> np.ndarray:
    """Largest principal angle between stacked orthonormal frames.

    Uses the sine form ``||(I - U U^H) V||_2`` which stays accurate for
    nearly coincident subspaces.
    """
    U = _as_complex(U)
    V = _as_complex(V)
    if U.shape[-2:] != V.shape[-2:]:
        raise ValueError(f"frame shapes differ: {U.shape[-2:]} vs {V.shape[-2:]}")
    W = V - U @ (np.swapaxes(U, -1, -2).conj() @ V)
    sin = svd(W)[1][..., 0]
    return np.arcsin(np.clip(sin, 0.0, 1.0))


def principal_angle(U: SubspaceFrame, V: SubspaceFrame) -> float:
    if U.ambient != V.ambient or U.rank != V.rank:
        raise ValueError(
            f"dimension mismatch: Gr_{U.rank}(C^{U.ambient}) vs Gr_{V.rank}(C^{V.ambient})"
        )
    return float(principal_angles_batch(U.frame, V.frame))
