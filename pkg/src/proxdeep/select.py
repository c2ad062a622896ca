"""Degrees of freedom, Stein's unbiased risk estimate and information criteria."""
import math
from dataclasses import asdict, dataclass

import numpy as np

from .admm import AdmmConfig, fit
from .links import link_jac_diag, link_eval
from .network import flatten_params, forward, forward_zs, with_ones
from .objectives import multinomial_loss, sq_loss

ACTIVE_THRESH = 1e-8


@dataclass
class SelectionReport:
    name: str
    df: float
    err_in: float
    sure: float
    ic: float
    cost_c: float
    sigma2: float
    loglik: float
    df_mode: str

    def to_dict(self):
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in asdict(self).items()}


def output_jacobian(arch, params, x):
    """Jacobian of ``vec(Z_1)`` with respect to the flat parameter vector."""
    zs = forward_zs(arch, params, x)
    n = x.shape[1]
    k = arch.layer_dims[0]
    blocks = []
    # sens[i] = d Z_1[:, i] / d Z_l[:, i], a K x N_l matrix per observation
    sens = np.broadcast_to(np.eye(k), (n, k, k)).copy()
    for l in range(arch.n_layers):
        f = with_ones(x) if l == arch.n_layers - 1 else with_ones(
            link_eval(arch.links[l], zs[l + 1]))
        rows, cols = params[l].shape
        jac = np.zeros((k * n, rows * cols))
        for i in range(n):
            # d Z_1[:, i] / d vec(W_l) = f_i^T kron sens_i
            jac[i * k:(i + 1) * k] = np.kron(f[:, i][None, :], sens[i])
        blocks.append(jac)
        if l < arch.n_layers - 1:
            d = link_jac_diag(arch.links[l], zs[l + 1])          # N_{l+1} x N
            w = params[l][:, 1:]
            sens = np.einsum("nkr,rs,sn->nks", sens, w, d)
    return np.hstack(blocks)


def _penalty_curvature(pen, arch, w):
    from .network import bias_mask
    mask = np.ones(w.size, dtype=bool)
    if not pen.penalize_bias:
        mask &= ~bias_mask(arch)
    if pen.family == "l2":
        return pen.gamma_w * mask.astype(np.float64), np.ones(w.size, dtype=bool)
    if pen.family == "l1" and pen.gamma_w > 0:
        # Coordinates held at zero by the l1 kink do not move with y.
        active = (np.abs(w) > ACTIVE_THRESH) | ~mask
        return np.zeros(w.size), active
    return np.zeros(w.size), np.ones(w.size, dtype=bool)


def df_estimate(arch, params, y, x, mode="jacobian", pen=None, cfg=None, eps=None,
                state=None):
    """Degrees of freedom ``sum_i d yhat_i / d y_i`` for a squared-error fit.

    ``mode="jacobian"`` linearises the fitted map at the given parameters
    (Gauss-Newton); this is exact for single linear layers with ridge or no
    penalty. ``mode="perturb"`` refits from a warm start with every target
    entry moved by ``+-eps`` and takes central differences.
    """
    from .penalties import PenaltySpec
    pen = PenaltySpec() if pen is None else pen
    if arch.loss != "squared_error":
        raise ValueError("degrees of freedom are defined for the squared-error loss only")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if mode == "jacobian":
        jac = output_jacobian(arch, params, x)
        curv, active = _penalty_curvature(pen, arch, flatten_params(params))
        j = jac[:, active]
        a = 2.0 * j.T @ j + np.diag(curv[active])
        hat = 2.0 * j @ np.linalg.pinv(a, hermitian=True) @ j.T
        return float(np.trace(hat))
    if mode != "perturb":
        raise ValueError(f"unknown df mode {mode!r}")
    if eps is None or not eps > 0:
        raise ValueError("perturb mode needs eps > 0")
    cfg = AdmmConfig() if cfg is None else cfg
    init = (params, state) if state is not None else params
    total = 0.0
    for idx in np.ndindex(y.shape):
        preds = []
        for sgn in (1.0, -1.0):
            yp = y.copy()
            yp[idx] += sgn * eps
            rep = fit(yp, x, arch, pen, cfg, init=init)
            preds.append(forward(arch, rep.params, x)[idx])
        total += (preds[0] - preds[1]) / (2.0 * eps)
    return float(total)


def sure(err_in, df, sigma2):
    """In-sample error plus the optimism correction ``2 sigma^2 df``."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    return err_in + 2.0 * sigma2 * df


def info_criterion(loglik, df, c=2.0):
    """``-2 loglik + c df``; lower is better."""
    if not c > 0:
        raise ValueError("c must be positive")
    return -2.0 * loglik + c * df


def estimate_sigma2(err_in, n_targets, df):
    """Residual variance ``err/(n - df)``, falling back to ``err/n`` if df >= n."""
    dof = n_targets - df if n_targets - df >= 1 else n_targets
    return err_in / dof


def gaussian_loglik(err_in, n_targets, sigma2):
    return -0.5 * n_targets * math.log(2.0 * math.pi * sigma2) - err_in / (2.0 * sigma2)


def evaluate(name, arch, params, y, x, pen=None, c=2.0, sigma2=None, df_mode="jacobian",
             cfg=None, eps=None, state=None):
    """Score one fitted model.

    Squared error: df, SURE and a Gaussian-likelihood IC. Multinomial: no
    SURE (there is no noise variance); the IC uses ``-multinomial_loss`` as
    the log-likelihood and the count of non-zero weights as df.
    """
    y = np.asarray(y, dtype=np.float64)
    if arch.loss == "multinomial":
        z1 = forward(arch, params, x)
        loglik = -multinomial_loss(y, z1)
        df = float(np.sum(np.abs(flatten_params(params)) > ACTIVE_THRESH))
        return SelectionReport(name, df, float("nan"), float("nan"),
                               info_criterion(loglik, df, c), c, float("nan"), loglik,
                               "nonzero_count")
    err = sq_loss(y, forward(arch, params, x))
    df = df_estimate(arch, params, y, x, df_mode, pen, cfg, eps, state)
    s2 = estimate_sigma2(err, y.size, df) if sigma2 is None else sigma2
    loglik = gaussian_loglik(err, y.size, s2)
    return SelectionReport(name, df, err, sure(err, df, s2), info_criterion(loglik, df, c),
                           c, s2, loglik, df_mode)


def rank(reports, criterion="ic"):
    """Reports sorted best-first (ascending criterion)."""
    key = (lambda r: r.ic) if criterion == "ic" else (lambda r: r.sure)
    return sorted(reports, key=lambda r: (not math.isfinite(key(r)), key(r)))
