"""Pure-numpy implementations of the hot kernels.

These are the reference path; the numba versions in ``_numba`` must agree
with them to rounding.
"""
import numpy as np


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_cols(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=0, keepdims=True))
    return e / e.sum(axis=0, keepdims=True)


def logsumexp_cols(z):
    z = np.asarray(z, dtype=np.float64)
    m = z.max(axis=0)
    return m + np.log(np.exp(z - m).sum(axis=0))


def soft_threshold(x, thr, mask):
    """Soft-threshold ``x`` by ``thr`` where ``mask`` is true, identity elsewhere."""
    shrunk = np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)
    return np.where(mask, shrunk, x)


def prox_multinomial_fb(y, eta, lam, gamma, s0, iters, tol):
    """Forward-backward solve of ``gamma*L(y, s) + 0.5*||s - eta||^2_lam``.

    All arrays are K x N; ``lam`` holds the diagonal weights. Each column is
    an independent sub-problem and stops once its own residual drops below
    ``tol * (1 + ||lam*eta||) / sqrt(N)``. Returns ``(s, col_residuals,
    iterations_used)``.
    """
    k, n = eta.shape
    s = s0.copy()
    step = 1.0 / (0.25 * gamma + lam.max(axis=0))
    thresh = tol * (1.0 + np.linalg.norm(lam * eta)) / np.sqrt(max(n, 1))
    active = np.ones(n, dtype=bool)
    res = np.zeros(n)
    used = 0
    for it in range(iters + 1):
        g = gamma * (softmax_cols(s) - y) + lam * (s - eta)
        res = np.sqrt((g * g).sum(axis=0))
        active &= res > thresh
        if not active.any() or it == iters:
            break
        s[:, active] -= step[active] * g[:, active]
        used = it + 1
    return s, res, used


def ista_gram(w, gram, b, thr, mask, step, iters):
    """Proximal gradient on ``0.5 tr(W G W^T) - tr(W^T B) + thr/step*|W|_masked``.

    ``mask`` has the shape of ``w``; ``thr`` is the threshold applied per
    step (already multiplied by ``step``).
    """
    w = w.copy()
    for _ in range(iters):
        w = soft_threshold(w - step * (w @ gram - b), thr, mask)
    return w
