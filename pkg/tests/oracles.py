"""Independent reference implementations used only by the tests.

None of these share code with the package; they are deliberately naive.
"""

import math

import numpy as np


def jacobi_eigh(S, tol=1e-15, max_sweeps=100):
    """Eigenvalues of a symmetric matrix by classical two-sided cyclic Jacobi rotations."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= tol * max(1.0, np.abs(A).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) plane rotation
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * rp - s * rq, s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * cp - s * cq, s * cp + c * cq
    return np.sort(np.diag(A))[::-1]


def singular_values_via_eig(A):
    """Singular values as the nonnegative eigenvalues of [[0, A], [A^T, 0]].

    The augmented form avoids squaring, so tiny singular values keep full
    absolute accuracy (eigenvalues of A^T A lose half the digits near zero).
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    H = np.zeros((m + n, m + n))
    H[:m, m:] = A
    H[m:, :m] = A.T
    ev = jacobi_eigh(H)
    return np.clip(ev[: min(m, n)], 0.0, None)


def brute_median_filter(x, width):
    """Median of the centered window truncated to the signal, by full sort at every index."""
    n = len(x)
    h = width // 2
    out = []
    for i in range(n):
        w = sorted(float(v) for v in x[max(0, i - h): min(n, i + h + 1)])
        m = len(w)
        out.append(w[m // 2] if m % 2 else (w[m // 2 - 1] + w[m // 2]) / 2.0)
    return np.array(out)


def loop_forward(layers, x):
    """layers: list of (W, b, relu) tuples; straight-line scalar loops."""
    h = [float(v) for v in x]
    trace = []
    for W, b, relu in layers:
        out = []
        for i in range(W.shape[0]):
            s = float(b[i])
            for j in range(W.shape[1]):
                s += float(W[i, j]) * h[j]
            out.append(max(s, 0.0) if relu else s)
        trace.append(out)
        h = out
    return trace


def loop_angle_penalty(Z):
    """sum over column pairs of cos^2 of the angle between mean-centered columns."""
    Z = np.asarray(Z, dtype=float)
    n, L = Z.shape
    cols = []
    for k in range(L):
        mu = sum(Z[i, k] for i in range(n)) / n
        cols.append([Z[i, k] - mu for i in range(n)])
    total = 0.0
    for a in range(L):
        for b in range(a + 1, L):
            dot = sum(cols[a][i] * cols[b][i] for i in range(n))
            na = math.sqrt(sum(v * v for v in cols[a]))
            nb = math.sqrt(sum(v * v for v in cols[b]))
            total += (dot / (na * nb)) ** 2
    return total


def central_difference(f, x, h):
    """Gradient of scalar f at array x by central differences, coordinate by coordinate."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + h
        fp = f(x)
        x[idx] = orig - h
        fm = f(x)
        x[idx] = orig
        g[idx] = (fp - fm) / (2 * h)
    return g


def two_pass_std(values):
    v = [float(a) for a in values]
    mean = sum(v) / len(v)
    return math.sqrt(sum((a - mean) ** 2 for a in v) / len(v))
