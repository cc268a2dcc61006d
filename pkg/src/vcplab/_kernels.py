"""Hot dense-matrix kernels.

The gadget simulations spend nearly all their time conjugating 2^9-dim
density matrices by single-qubit unitaries, single-qubit depolarizing
channels and basis permutations. These three kernels are jitted with numba
when available (single fused passes over the matrix); the pure-numpy
fallbacks compute identical results.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


def _su2_conjugate_numpy(mat: np.ndarray, u: np.ndarray, a_dim: int) -> np.ndarray:
    d = mat.shape[0]
    t = mat.reshape(a_dim, 2, (d // (2 * a_dim)) * d)
    r0, r1 = t[:, 0], t[:, 1]
    left = np.empty_like(t)
    left[:, 0] = u[0, 0] * r0 + u[0, 1] * r1
    left[:, 1] = u[1, 0] * r0 + u[1, 1] * r1
    t2 = left.reshape(d * a_dim, 2, d // (2 * a_dim))
    c0, c1 = t2[:, 0], t2[:, 1]
    uc = u.conj()
    out = np.empty_like(t2)
    out[:, 0] = c0 * uc[0, 0] + c1 * uc[0, 1]
    out[:, 1] = c0 * uc[1, 0] + c1 * uc[1, 1]
    return out.reshape(d, d)


def _depolarize_numpy(mat: np.ndarray, a_dim: int, prob: float) -> np.ndarray:
    d = mat.shape[0]
    b = d // (2 * a_dim)
    t = mat.reshape(a_dim, 2, b, a_dim, 2, b)
    half = (0.5 * prob) * (t[:, 0, :, :, 0, :] + t[:, 1, :, :, 1, :])
    out = (1.0 - prob) * t
    out[:, 0, :, :, 0, :] += half
    out[:, 1, :, :, 1, :] += half
    return out.reshape(d, d)


def _gather_numpy(mat: np.ndarray, inv: np.ndarray) -> np.ndarray:
    return mat[np.ix_(inv, inv)]


if _HAVE_NUMBA:

    @njit(cache=True)
    def _su2_conjugate_jit(mat, u, a_dim):  # pragma: no cover - exercised via wrapper
        d = mat.shape[0]
        b = d // (2 * a_dim)
        t = mat.reshape(a_dim, 2, b, a_dim, 2, b)
        out = np.empty_like(t)
        u00, u01, u10, u11 = u[0, 0], u[0, 1], u[1, 0], u[1, 1]
        v00, v01 = np.conj(u00), np.conj(u01)
        v10, v11 = np.conj(u10), np.conj(u11)
        for i in range(a_dim):
            for j in range(b):
                for k in range(a_dim):
                    for l in range(b):
                        t00 = t[i, 0, j, k, 0, l]
                        t01 = t[i, 0, j, k, 1, l]
                        t10 = t[i, 1, j, k, 0, l]
                        t11 = t[i, 1, j, k, 1, l]
                        r0 = t00 * v00 + t01 * v01
                        r1 = t10 * v00 + t11 * v01
                        s0 = t00 * v10 + t01 * v11
                        s1 = t10 * v10 + t11 * v11
                        out[i, 0, j, k, 0, l] = u00 * r0 + u01 * r1
                        out[i, 1, j, k, 0, l] = u10 * r0 + u11 * r1
                        out[i, 0, j, k, 1, l] = u00 * s0 + u01 * s1
                        out[i, 1, j, k, 1, l] = u10 * s0 + u11 * s1
        return out.reshape(d, d)

    @njit(cache=True)
    def _depolarize_jit(mat, a_dim, prob):  # pragma: no cover - exercised via wrapper
        d = mat.shape[0]
        b = d // (2 * a_dim)
        t = mat.reshape(a_dim, 2, b, a_dim, 2, b)
        out = np.empty_like(t)
        keep = 1.0 - prob
        half = 0.5 * prob
        for i in range(a_dim):
            for j in range(b):
                for k in range(a_dim):
                    for l in range(b):
                        t00 = t[i, 0, j, k, 0, l]
                        t11 = t[i, 1, j, k, 1, l]
                        s = half * (t00 + t11)
                        out[i, 0, j, k, 0, l] = keep * t00 + s
                        out[i, 1, j, k, 1, l] = keep * t11 + s
                        out[i, 0, j, k, 1, l] = keep * t[i, 0, j, k, 1, l]
                        out[i, 1, j, k, 0, l] = keep * t[i, 1, j, k, 0, l]
        return out.reshape(d, d)

    @njit(cache=True)
    def _gather_jit(mat, inv):  # pragma: no cover - exercised via wrapper
        d = mat.shape[0]
        out = np.empty_like(mat)
        for i in range(d):
            row = mat[inv[i]]
            for j in range(d):
                out[i, j] = row[inv[j]]
        return out


def su2_conjugate(mat: np.ndarray, u: np.ndarray, qubit: int) -> np.ndarray:
    """U rho U† for a single-qubit gate at `qubit` (0 = most significant)."""
    a_dim = 1 << qubit
    if _HAVE_NUMBA:
        return _su2_conjugate_jit(np.ascontiguousarray(mat), np.ascontiguousarray(u), a_dim)
    return _su2_conjugate_numpy(mat, u, a_dim)


def depolarize_qubit(mat: np.ndarray, qubit: int, prob: float) -> np.ndarray:
    """rho -> (1-P) rho + P (I/2 (x) tr_q rho) at `qubit`."""
    a_dim = 1 << qubit
    if _HAVE_NUMBA:
        return _depolarize_jit(np.ascontiguousarray(mat), a_dim, float(prob))
    return _depolarize_numpy(mat, a_dim, prob)


def permutation_conjugate(mat: np.ndarray, inv: np.ndarray) -> np.ndarray:
    """U rho U† for a basis permutation; inv is the inverse index map."""
    if _HAVE_NUMBA:
        return _gather_jit(np.ascontiguousarray(mat), inv)
    return _gather_numpy(mat, inv)
