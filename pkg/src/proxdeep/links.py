"""Elementwise activation (link) functions and their derivatives."""
import numpy as np

from . import kernels

LINKS = ("linear", "sigmoid", "tanh", "rectlu")


def _check(link):
    if link not in LINKS:
        raise ValueError(f"unknown link {link!r}; expected one of {LINKS}")


def link_eval(link, x):
    _check(link)
    x = np.asarray(x, dtype=np.float64)
    if link == "linear":
        return x.copy()
    if link == "sigmoid":
        return kernels.sigmoid(x)
    if link == "tanh":
        return np.tanh(x)
    return np.maximum(x, 0.0)


def link_jac_diag(link, x):
    """Diagonal of the Jacobian, i.e. the elementwise derivative.

    The rectified-linear derivative at exactly zero is taken as 0.
    """
    _check(link)
    x = np.asarray(x, dtype=np.float64)
    if link == "linear":
        return np.ones_like(x)
    if link == "sigmoid":
        s = kernels.sigmoid(x)
        return s * (1.0 - s)
    if link == "tanh":
        return 1.0 - np.tanh(x) ** 2
    return (x > 0).astype(np.float64)


def link_hess_diag(link, x):
    _check(link)
    x = np.asarray(x, dtype=np.float64)
    if link == "sigmoid":
        s = kernels.sigmoid(x)
        return s * (1.0 - s) * (1.0 - 2.0 * s)
    if link == "tanh":
        t = np.tanh(x)
        return -2.0 * t * (1.0 - t * t)
    return np.zeros_like(x)
