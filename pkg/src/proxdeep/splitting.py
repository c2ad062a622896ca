"""Split-state data model and the constraint operators around it.

The constraints tie every layer value to the layer below it::

    Z_l = W~_l f~_l(Z_{l+1}),   f~_L(Z_{L+1}) := [1; X]

``apply_delta_w`` returns the per-layer constraint residuals and
``apply_delta_z`` the linear-in-weights products ``W~_l f~_l(Z_{l+1})``.
Penalty weights ``mu`` are kept per layer and per observation (one weight
per column of ``Z_l``).
"""
from dataclasses import dataclass

import numpy as np

from .network import layer_input
from .objectives import loss_value
from .penalties import penalty_value
from .network import bias_mask, flatten_params
from .tensor import kron_apply_left, kron_apply_right, unvec, vec_of


@dataclass
class SplitState:
    zs: list
    us: list

    def copy(self):
        return SplitState([z.copy() for z in self.zs], [u.copy() for u in self.us])


def zero_duals(zs):
    return [np.zeros_like(z) for z in zs]


def mu_weights(mu, n_layers, n_obs):
    """Expand a scalar, per-layer scalars or per-layer vectors to L arrays of length N."""
    if np.isscalar(mu):
        mu = [mu] * n_layers
    if len(mu) != n_layers:
        raise ValueError(f"need {n_layers} mu values, got {len(mu)}")
    out = []
    for m in mu:
        m = np.broadcast_to(np.asarray(m, dtype=np.float64), (n_obs,)).copy()
        if np.any(m <= 0):
            raise ValueError("mu must be strictly positive")
        out.append(m)
    return out


def apply_delta_w(arch, params, zs, x):
    """Residuals ``R_l = Z_l - W~_l f~_l(Z_{l+1})`` for every layer."""
    n = np.shape(x)[1]
    out = []
    for l in range(arch.n_layers):
        if zs[l].shape != (arch.layer_dims[l], n):
            raise ValueError(f"Z_{l + 1} has shape {zs[l].shape}")
        f = layer_input(arch, zs, x, l)
        pred = kron_apply_left(params[l], vec_of(f), n)
        out.append(zs[l] - unvec(pred, arch.layer_dims[l], n))
    return out


def apply_delta_z(arch, zs, x, wvecs):
    """``vec(W~_l f~_l(Z_{l+1}))`` per layer, computed from ``w~_l = vec(W~_l)``."""
    out = []
    for l in range(arch.n_layers):
        f = layer_input(arch, zs, x, l)
        if wvecs[l].size != arch.layer_dims[l] * f.shape[0]:
            raise ValueError(f"weight vector {l} has length {wvecs[l].size}")
        out.append(kron_apply_right(f.T, wvecs[l], arch.layer_dims[l]))
    return out


def _wsq(a, mu_cols):
    return float(np.sum(mu_cols * np.sum(a * a, axis=0)))


def penalty_of(pen, arch, params):
    return penalty_value(pen, flatten_params(params), bias_mask(arch))


def constraint_term(arch, params, state, x, mus):
    """``0.5 * sum_l ||R_l + U_l||^2_mu`` (the smooth coupling term F)."""
    res = apply_delta_w(arch, params, state.zs, x)
    return 0.5 * sum(_wsq(r + u, m) for r, u, m in zip(res, state.us, mus))


def aug_lagrangian(y, arch, params, state, x, mus, pen):
    """Scaled-form augmented Lagrangian.

    ``phi(w) + L(y, Z_1) + sum_l 0.5||R_l + U_l||^2_mu - 0.5||U_l||^2_mu``
    """
    quad = constraint_term(arch, params, state, x, mus)
    quad -= 0.5 * sum(_wsq(u, m) for u, m in zip(state.us, mus))
    return penalty_of(pen, arch, params) + loss_value(arch.loss, y, state.zs[0]) + quad


def residual_norms(arch, params, state, x, prev_zs, mus):
    """Primal (constraint) and dual (mu-scaled z change) residual norms."""
    res = apply_delta_w(arch, params, state.zs, x)
    primal = np.sqrt(sum(float(np.sum(r * r)) for r in res))
    dual = np.sqrt(sum(_wsq(z - zp, m * m) for z, zp, m in zip(state.zs, prev_zs, mus)))
    return float(primal), float(dual)
