"""Small dense linear algebra on float64 arrays.

The SVD is a one-sided (Hestenes) cyclic Jacobi iteration. It is accurate to
a few ulps on the tiny matrices used here and depends on nothing but numpy
array arithmetic.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DegenerateVectorError, NumericError, RankError

JACOBI_TOL = 1e-12
MAX_SWEEPS = 60


class SvdResult(NamedTuple):
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


def _as_matrix(A) -> np.ndarray:
    A = np.array(A, dtype=np.float64)
    if A.ndim != 2 or min(A.shape) < 1:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix contains non-finite values")
    return A


def _complete_columns(Q: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Replace the columns of ``Q`` not flagged ``good`` so that Q has orthonormal columns."""
    m, k = Q.shape
    basis = [Q[:, i] for i in range(k) if good[i]]
    out = Q.copy()
    e = 0
    for i in range(k):
        if good[i]:
            continue
        while True:
            v = np.zeros(m)
            v[e] = 1.0
            e += 1
            for _ in range(2):
                for b in basis:
                    v -= (b @ v) * b
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                break
        v /= nv
        basis.append(v)
        out[:, i] = v
    return out


def _jacobi_tall(A: np.ndarray) -> SvdResult:
    m, n = A.shape
    U = A.copy()
    V = np.eye(n)
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                up, uq = U[:, p], U[:, q]
                alpha = up @ up
                beta = uq @ uq
                gamma = up @ uq
                if gamma == 0.0 or abs(gamma) <= JACOBI_TOL * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                U[:, [p, q]] = np.column_stack((c * up - s * uq, s * up + c * uq))
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        if not rotated:
            break

    S = np.linalg.norm(U, axis=0)
    order = np.argsort(-S, kind="stable")
    S, U, V = S[order], U[:, order], V[:, order]
    smax = S[0] if S.size else 0.0
    good = S > max(smax, 1.0) * 1e-14 * max(m, n)
    U = np.divide(U, S, out=np.zeros_like(U), where=good)
    if not good.all():
        U = _complete_columns(U, good)
    return SvdResult(U, S, V)


def svd(A) -> SvdResult:
    """Thin singular value decomposition ``A = U @ diag(S) @ V.T``.

    ``U`` is ``(m, k)``, ``V`` is ``(n, k)`` with ``k = min(m, n)``; ``S`` is
    sorted nonincreasing. Signs are fixed so that the largest-magnitude entry
    of every column of ``V`` is positive.
    """
    A = _as_matrix(A)
    m, n = A.shape
    if m >= n:
        U, S, V = _jacobi_tall(A)
    else:
        V, S, U = _jacobi_tall(A.T)
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[idx, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return SvdResult(U * signs, S, V * signs)


def polar_orthonormalize(W, rank_tol: float = 1e-10) -> np.ndarray:
    """Nearest matrix with orthonormal columns (Frobenius norm): ``U @ V.T``."""
    W = _as_matrix(W)
    if W.shape[0] < W.shape[1]:
        raise ValueError("polar_orthonormalize needs rows >= cols")
    U, S, V = svd(W)
    if S[-1] <= rank_tol:
        raise RankError(f"matrix is rank deficient (smallest singular value {S[-1]:.3e})")
    return U @ V.T


def pairwise_angles(columns) -> np.ndarray:
    """Angles in degrees between every pair of columns, ordered (0,1), (0,2), ..., (1,2), ..."""
    X = _as_matrix(columns)
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms <= 1e-12):
        raise DegenerateVectorError("column with (near-)zero norm")
    Xn = X / norms
    G = np.clip(Xn.T @ Xn, -1.0, 1.0)
    i, j = np.triu_indices(X.shape[1], k=1)
    return np.degrees(np.arccos(G[i, j]))
