"""Numba versions of the kernels in ``_numpy``. Same signatures."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _sigmoid_scalar(v):
    if v >= 0.0:
        return 1.0 / (1.0 + np.exp(-v))
    e = np.exp(v)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def _sigmoid_flat(x):
    out = np.empty_like(x)
    for i in range(x.size):
        out[i] = _sigmoid_scalar(x[i])
    return out


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return _sigmoid_flat(x.ravel()).reshape(x.shape)


@njit(cache=True, nogil=True)
def _softmax_col(z, j, out):
    k = z.shape[0]
    m = z[0, j]
    for i in range(1, k):
        if z[i, j] > m:
            m = z[i, j]
    tot = 0.0
    for i in range(k):
        out[i] = np.exp(z[i, j] - m)
        tot += out[i]
    for i in range(k):
        out[i] /= tot


@njit(cache=True, nogil=True)
def _softmax_cols(z):
    k, n = z.shape
    out = np.empty((k, n))
    buf = np.empty(k)
    for j in range(n):
        _softmax_col(z, j, buf)
        out[:, j] = buf
    return out


def softmax_cols(z):
    return _softmax_cols(np.ascontiguousarray(z, dtype=np.float64))


@njit(cache=True, nogil=True)
def _logsumexp_cols(z):
    k, n = z.shape
    out = np.empty(n)
    for j in range(n):
        m = z[0, j]
        for i in range(1, k):
            if z[i, j] > m:
                m = z[i, j]
        tot = 0.0
        for i in range(k):
            tot += np.exp(z[i, j] - m)
        out[j] = m + np.log(tot)
    return out


def logsumexp_cols(z):
    return _logsumexp_cols(np.ascontiguousarray(z, dtype=np.float64))


@njit(cache=True, nogil=True)
def _soft_threshold(x, thr, mask):
    out = np.empty_like(x)
    for i in range(x.size):
        v = x.flat[i]
        if mask.flat[i]:
            a = abs(v) - thr
            if a <= 0.0:
                out.flat[i] = 0.0
            elif v > 0.0:
                out.flat[i] = a
            else:
                out.flat[i] = -a
        else:
            out.flat[i] = v
    return out


def soft_threshold(x, thr, mask):
    x = np.ascontiguousarray(x, dtype=np.float64)
    mask = np.ascontiguousarray(np.broadcast_to(mask, x.shape), dtype=np.bool_)
    return _soft_threshold(x, float(thr), mask)


@njit(cache=True, nogil=True)
def _prox_multinomial_fb(y, eta, lam, gamma, s0, iters, tol):
    k, n = eta.shape
    s = s0.copy()
    nrm = 0.0
    for j in range(n):
        for i in range(k):
            nrm += (lam[i, j] * eta[i, j]) ** 2
    thresh = tol * (1.0 + np.sqrt(nrm)) / np.sqrt(max(n, 1))
    res = np.zeros(n)
    p = np.empty(k)
    g = np.empty(k)
    used = 0
    for j in range(n):
        lmax = lam[0, j]
        for i in range(1, k):
            if lam[i, j] > lmax:
                lmax = lam[i, j]
        step = 1.0 / (0.25 * gamma + lmax)
        for it in range(iters + 1):
            _softmax_col(s, j, p)
            r2 = 0.0
            for i in range(k):
                g[i] = gamma * (p[i] - y[i, j]) + lam[i, j] * (s[i, j] - eta[i, j])
                r2 += g[i] * g[i]
            res[j] = np.sqrt(r2)
            if res[j] <= thresh or it == iters:
                break
            for i in range(k):
                s[i, j] -= step * g[i]
            if it + 1 > used:
                used = it + 1
    return s, res, used


def prox_multinomial_fb(y, eta, lam, gamma, s0, iters, tol):
    c = lambda a: np.ascontiguousarray(a, dtype=np.float64)
    return _prox_multinomial_fb(c(y), c(eta), c(lam), float(gamma), c(s0),
                                int(iters), float(tol))


@njit(cache=True, nogil=True)
def _ista_gram(w, gram, b, thr, mask, step, iters):
    w = w.copy()
    for _ in range(iters):
        v = w - step * (w @ gram - b)
        w = _soft_threshold(v, thr, mask)
    return w


def ista_gram(w, gram, b, thr, mask, step, iters):
    c = lambda a: np.ascontiguousarray(a, dtype=np.float64)
    mask = np.ascontiguousarray(np.broadcast_to(mask, np.shape(w)), dtype=np.bool_)
    return _ista_gram(c(w), c(gram), c(b), float(thr), mask, float(step), int(iters))
