"""Loss functions on the output layer and their proximal maps.

Labels and predictions are K x N with one column per observation. The
multinomial loss works on pre-softmax scores.
"""
import warnings

import numpy as np

from . import kernels

LOSSES = ("squared_error", "multinomial")


class ConvergenceWarning(UserWarning):
    pass


def _check_shapes(y, z):
    if np.shape(y) != np.shape(z):
        raise ValueError(f"shape mismatch: labels {np.shape(y)} vs scores {np.shape(z)}")


def softmax(z):
    """Column-wise softmax of a K x N score matrix."""
    return kernels.softmax_cols(np.atleast_2d(z))


def multinomial_loss(y, z1):
    """Negative log-likelihood ``sum_i logsumexp(z_i) - y_i^T z_i``."""
    y = np.asarray(y, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    _check_shapes(y, z1)
    return float(kernels.logsumexp_cols(z1).sum() - np.sum(y * z1))


def multinomial_grad(y, z1):
    """Gradient ``P - Y`` as a K x N matrix (``vec`` it for the flat form)."""
    y = np.asarray(y, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    _check_shapes(y, z1)
    return kernels.softmax_cols(z1) - y


def multinomial_hess_block(z_col):
    """Per-observation Hessian ``Diag(p) - p p^T`` for one score column."""
    p = kernels.softmax_cols(np.asarray(z_col, dtype=np.float64).reshape(-1, 1))[:, 0]
    return np.diag(p) - np.outer(p, p)


def prox_multinomial(y, eta, lam, inner_iters=50, tol=1e-8, gamma=1.0, s0=None,
                     full_output=False):
    """Minimise ``gamma*L(y, s) + 0.5*||s - eta||^2_lam`` over ``s``.

    Gradient steps of size ``1/(gamma/4 + max(lam))`` per column; the
    objective is strongly convex so this converges without a line search.

    Parameters
    ----------
    y, eta : ndarray, shape (K, N)
    lam : ndarray or float
        Diagonal weights, broadcast to (K, N); must be positive.
    inner_iters : int
    tol : float
        Stop when ``||gamma*grad L + lam*(s - eta)|| <= tol*(1 + ||lam*eta||)``.
    full_output : bool
        Also return ``(residual, iterations, converged)``.
    """
    y = np.asarray(y, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    _check_shapes(y, eta)
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), eta.shape)
    if np.any(lam <= 0):
        raise ValueError("prox weights must be strictly positive")
    s0 = eta if s0 is None else np.asarray(s0, dtype=np.float64)
    s, col_res, used = kernels.prox_multinomial_fb(y, eta, lam, gamma, s0, inner_iters, tol)
    residual = float(np.linalg.norm(col_res))
    converged = residual <= tol * (1.0 + np.linalg.norm(lam * eta))
    if not converged:
        warnings.warn(f"prox_multinomial stopped at residual {residual:.3e} "
                      f"after {inner_iters} iterations", ConvergenceWarning, stacklevel=2)
    if full_output:
        return s, (residual, used, converged)
    return s


def sq_loss(y, z1):
    """``||y - z1||^2`` (no 1/2 factor)."""
    y = np.asarray(y, dtype=np.float64)
    z1 = np.asarray(z1, dtype=np.float64)
    _check_shapes(y, z1)
    return float(np.sum((y - z1) ** 2))


def sq_prox(y, eta, lam):
    """Closed-form minimiser of ``||y - s||^2 + 0.5*||s - eta||^2_lam``."""
    y = np.asarray(y, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    _check_shapes(y, eta)
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam <= 0):
        raise ValueError("prox weights must be strictly positive")
    return (2.0 * y + lam * eta) / (2.0 + lam)


def loss_value(loss, y, z1):
    if loss == "multinomial":
        return multinomial_loss(y, z1)
    if loss == "squared_error":
        return sq_loss(y, z1)
    raise ValueError(f"unknown loss {loss!r}")


def loss_prox(loss, y, eta, gamma, inner_iters=50, tol=1e-8):
    """``prox_{gamma L(y, .)}(eta)`` in the Euclidean metric."""
    if loss == "multinomial":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            return prox_multinomial(y, eta, 1.0, inner_iters, tol, gamma=gamma)
    if loss == "squared_error":
        return sq_prox(y, eta, 1.0 / gamma)
    raise ValueError(f"unknown loss {loss!r}")


def classify_rate(probs, y):
    """Fraction of columns whose argmax matches the label's argmax.

    Ties go to the lowest class index.
    """
    probs = np.asarray(probs)
    y = np.asarray(y)
    _check_shapes(y, probs)
    return float(np.mean(np.argmax(probs, axis=0) == np.argmax(y, axis=0)))
