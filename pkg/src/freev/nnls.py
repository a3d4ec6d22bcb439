"""Lawson-Hanson active-set solver for non-negative least squares.

The solver works on the normal equations (``G = A^T A``, ``A^T b``) so a
fixed design matrix can be reused over many right-hand sides, which is how
mel frames are inverted. The passive-set system is kept as a Cholesky factor
that grows by one row per added variable; removals refactor from scratch.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ConvergenceError


@njit(cache=True)
def _cholesky_into(gram, idx, k, chol):
    for r in range(k):
        for c in range(r + 1):
            acc = gram[idx[r], idx[c]]
            for q in range(c):
                acc -= chol[r, q] * chol[c, q]
            if r == c:
                if acc <= 0.0:
                    return False
                chol[r, r] = np.sqrt(acc)
            else:
                chol[r, c] = acc / chol[c, c]
    return True


@njit(cache=True)
def _chol_solve(chol, k, rhs, out):
    for r in range(k):
        acc = rhs[r]
        for q in range(r):
            acc -= chol[r, q] * out[q]
        out[r] = acc / chol[r, r]
    for r in range(k - 1, -1, -1):
        acc = out[r]
        for q in range(r + 1, k):
            acc -= chol[q, r] * out[q]
        out[r] = acc / chol[r, r]


@njit(cache=True)
def _lawson_hanson(gram, atb, max_iter, tol, x):
    """Returns the iteration count, or -1 when ``max_iter`` was exhausted."""
    n = atb.shape[0]
    x[:] = 0.0
    w = atb.copy()
    in_p = np.zeros(n, dtype=np.bool_)
    blocked = np.zeros(n, dtype=np.bool_)
    idx = np.zeros(n, dtype=np.int64)
    chol = np.empty((n, n))
    rhs = np.zeros(n)
    s = np.zeros(n)
    xp = np.zeros(n)
    k = 0
    n_iter = 0
    while True:
        j = -1
        best = tol
        for i in range(n):
            if not in_p[i] and not blocked[i] and w[i] > best:
                best = w[i]
                j = i
        if j < 0:
            break
        if n_iter >= max_iter:
            return -1
        n_iter += 1
        # grow the factor by the row for column j
        for r in range(k):
            acc = gram[idx[r], j]
            for q in range(r):
                acc -= chol[r, q] * chol[k, q]
            chol[k, r] = acc / chol[r, r]
        d = gram[j, j]
        for q in range(k):
            d -= chol[k, q] * chol[k, q]
        if d <= 1e-13 * gram[j, j]:
            blocked[j] = True
            continue
        chol[k, k] = np.sqrt(d)
        idx[k] = j
        xp[k] = 0.0
        k += 1
        in_p[j] = True
        for r in range(k):
            rhs[r] = atb[idx[r]]
        _chol_solve(chol, k, rhs, s)
        if s[k - 1] <= 0.0:
            k -= 1
            in_p[j] = False
            blocked[j] = True
            continue
        while True:
            worst = -1
            alpha = np.inf
            for r in range(k):
                if s[r] <= 0.0:
                    ratio = xp[r] / (xp[r] - s[r])
                    if ratio < alpha:
                        alpha = ratio
                        worst = r
            if worst < 0:
                break
            if n_iter >= max_iter:
                return -1
            n_iter += 1
            kk = 0
            for r in range(k):
                v = xp[r] + alpha * (s[r] - xp[r])
                if r == worst or v <= 0.0:
                    in_p[idx[r]] = False
                else:
                    idx[kk] = idx[r]
                    xp[kk] = v
                    kk += 1
            k = kk
            if not _cholesky_into(gram, idx, k, chol):
                return -1
            for r in range(k):
                rhs[r] = atb[idx[r]]
            _chol_solve(chol, k, rhs, s)
        for r in range(k):
            xp[r] = s[r]
        blocked[:] = False
        for i in range(n):
            acc = atb[i]
            for r in range(k):
                acc -= gram[i, idx[r]] * xp[r]
            w[i] = acc
    for r in range(k):
        x[idx[r]] = xp[r]
    return n_iter


def nnls_gram(gram: np.ndarray, atb: np.ndarray, max_iter: int = 500,
              tol: float = 1e-8) -> tuple[np.ndarray, int]:
    """Solve ``min ||A x - b||`` s.t. ``x >= 0`` given ``gram = A^T A`` and ``atb = A^T b``.

    Returns the solution and the number of iterations used. Raises
    :class:`ConvergenceError` when ``max_iter`` is exhausted.
    """
    if max_iter <= 0 or tol <= 0:
        raise ValueError("max_iter and tol must be positive")
    gram = np.ascontiguousarray(gram, dtype=np.float64)
    atb = np.ascontiguousarray(atb, dtype=np.float64)
    x = np.empty(atb.shape[0])
    n_iter = _lawson_hanson(gram, atb, max_iter, tol, x)
    if n_iter < 0:
        raise ConvergenceError(f"NNLS did not converge in {max_iter} iterations")
    return x, n_iter


def nnls(a: np.ndarray, b: np.ndarray, max_iter: int = 500,
         tol: float = 1e-8) -> tuple[np.ndarray, float]:
    """Solve ``min ||a x - b||_2`` subject to ``x >= 0``.

    Returns the solution vector and the residual norm.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x, _ = nnls_gram(a.T @ a, a.T @ b, max_iter=max_iter, tol=tol)
    return x, float(np.linalg.norm(a @ x - b))


def nnls_frames(a: np.ndarray, frames: np.ndarray, max_iter: int = 500,
                tol: float = 1e-8, gram: np.ndarray | None = None) -> np.ndarray:
    """Row-wise NNLS: solve ``a x_t ~ frames[t]`` for every frame ``t``.

    Returns an array of shape ``(T, a.shape[1])``. A non-converging frame
    raises :class:`ConvergenceError` with ``frame`` set to its index.
    """
    a = np.asarray(a, dtype=np.float64)
    frames = np.asarray(frames, dtype=np.float64)
    if gram is None:
        gram = a.T @ a
    atb = frames @ a
    out = np.empty((frames.shape[0], a.shape[1]))
    for t in range(frames.shape[0]):
        try:
            out[t], _ = nnls_gram(gram, atb[t], max_iter=max_iter, tol=tol)
        except ConvergenceError as exc:
            raise ConvergenceError(f"frame {t}: {exc}", frame=t) from None
    return out


def kkt_residual(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> float:
    """Largest violation of the NNLS optimality conditions at ``x``.

    With gradient ``g = a^T (a x - b)``: free coordinates need ``g = 0``,
    coordinates at zero need ``g >= 0``, and ``x >= 0`` throughout.
    """
    g = a.T @ (a @ x - b)
    free = x > 0
    viol = [np.abs(g[free]).max(initial=0.0),
            np.maximum(-g[~free], 0.0).max(initial=0.0),
            np.maximum(-x, 0.0).max(initial=0.0)]
    return float(max(viol))
