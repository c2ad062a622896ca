"""ADMM over the split network: z-step, w-step, u-step.

Each outer iteration (default order z, w, u):

* z-step: forward-backward passes on ``F(z) + L(y, Z_1)`` where
  ``F(z) = 0.5 sum_l ||R_l + U_l||^2_mu``; the loss prox touches ``Z_1`` only.
* w-step: per layer, the penalised quadratic in ``W~_l`` whose Hessian is
  ``G_l kron I`` with ``G_l = f~ Diag(mu) f~^T``; solved through the small
  Gram factor ``G_l``, never the Kronecker product.
* u-step: ``U_l += R_l``.
"""
import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .links import link_jac_diag
from .network import (forward, forward_zs, init_params, layer_input, nonzero_fraction,
                      params_to_dict)
from .objectives import classify_rate, loss_prox, loss_value, softmax
from .penalties import PenaltySpec
from .splitting import (SplitState, apply_delta_w, aug_lagrangian, constraint_term,
                        mu_weights, penalty_of, residual_norms, zero_duals)

log = logging.getLogger(__name__)

JITTER = 1e-10


class DivergenceError(RuntimeError):
    def __init__(self, iteration, message):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


class StepSizeError(RuntimeError):
    pass


@dataclass
class AdmmConfig:
    max_outer: int = 1000
    z_inner: int = 10
    w_inner: int = 25
    tol_primal: float = None
    tol_dual: float = None
    step_policy: str = "backtracking"
    gamma: float = 1.0          # fixed step, or initial step for backtracking
    beta: float = 0.5
    armijo_c: float = 1e-4
    mu: object = 1.0
    seed: int = 0
    init_scale: float = 0.1
    block_order: str = "zwu"
    residual_balancing: bool = False
    prox_iters: int = 50
    prox_tol: float = 1e-8

    def __post_init__(self):
        for name in ("max_outer", "z_inner", "w_inner", "prox_iters"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("tol_primal", "tol_dual"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if self.step_policy not in ("fixed", "backtracking"):
            raise ValueError(f"unknown step policy {self.step_policy!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.block_order not in ("zwu", "wzu"):
            raise ValueError("block_order must be 'zwu' or 'wzu'")


@dataclass
class FitReport:
    arch: object
    params: list
    state: SplitState
    mus: list
    records: list = field(default_factory=list)
    converged: bool = False
    nonzero_fraction: float = 1.0
    jitter_used: bool = False

    TRACE_COLUMNS = ("iter", "objective", "aug_lagrangian", "primal_res", "dual_res",
                     "train_acc")

    @property
    def final(self):
        return self.records[-1]

    def to_dict(self, include_state=False):
        d = {"converged": self.converged,
             "n_iter": len(self.records),
             "nonzero_fraction": self.nonzero_fraction,
             "jitter_used": self.jitter_used,
             "final": _json_record(self.final) if self.records else None,
             "records": [_json_record(r) for r in self.records],
             "params": params_to_dict(self.arch, self.params)}
        if include_state:
            d["state"] = {"zs": [z.tolist() for z in self.state.zs],
                          "us": [u.tolist() for u in self.state.us]}
        return d

    def write_trace_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.TRACE_COLUMNS)
            for r in self.records:
                w.writerow([r["iter"]] + [repr(float(r[c])) for c in self.TRACE_COLUMNS[1:]])


def _json_record(r):
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
            for k, v in r.items()}


def grad_F_z(arch, params, state, x, mus):
    """Gradient of ``F(z) = 0.5 sum_l ||R_l + U_l||^2_mu`` per layer.

    Layer ``l`` sees ``mu*(R_l + U_l)`` directly, plus the back-coupled term
    from the layer above, where ``Z_l`` enters through the link.
    """
    res = apply_delta_w(arch, params, state.zs, x)
    v = [m * (r + u) for r, u, m in zip(res, state.us, mus)]
    grads = [vi.copy() for vi in v]
    for l in range(arch.n_layers - 1):
        back = params[l][:, 1:].T @ v[l]
        grads[l + 1] -= link_jac_diag(arch.links[l], state.zs[l + 1]) * back
    return grads


def _fb_candidate(y, arch, zs, grads, gamma, cfg):
    cand = [z - gamma * g for z, g in zip(zs, grads)]
    cand[0] = loss_prox(arch.loss, y, cand[0], gamma, cfg.prox_iters, cfg.prox_tol)
    return cand


def z_objective(y, arch, params, state, x, mus):
    """The z-subproblem objective ``F(z) + L(y, Z_1)``."""
    return constraint_term(arch, params, state, x, mus) + loss_value(arch.loss, y, state.zs[0])


def z_step(y, arch, params, state, x, mus, cfg, gamma=None, trace=None):
    """Run ``cfg.z_inner`` forward-backward passes on the z-subproblem.

    Returns ``(zs, gamma, decrease)``; ``gamma`` is the last accepted step.
    If ``trace`` is a list, the composite objective after each accepted
    step is appended to it.
    """
    gamma = cfg.gamma if gamma is None else gamma
    cur = SplitState([z.copy() for z in state.zs], state.us)
    phi0 = phi = z_objective(y, arch, params, cur, x, mus)
    for _ in range(cfg.z_inner):
        grads = grad_F_z(arch, params, cur, x, mus)
        while True:
            cand = SplitState(_fb_candidate(y, arch, cur.zs, grads, gamma, cfg), cur.us)
            if cfg.step_policy == "fixed":
                phi_c = z_objective(y, arch, params, cand, x, mus)
                stalled = False
                break
            phi_c = z_objective(y, arch, params, cand, x, mus)
            d2 = sum(float(np.sum((a - b) ** 2)) for a, b in zip(cand.zs, cur.zs))
            if phi_c <= phi - cfg.armijo_c / gamma * d2:
                stalled = False
                break
            # Armijo failed but the change is at rounding level: accept and stop.
            stalled = abs(phi_c - phi) <= 1e-12 * (1.0 + abs(phi))
            if stalled:
                break
            gamma *= cfg.beta
            if gamma < 1e-12:
                raise StepSizeError("z-step backtracking collapsed below 1e-12")
        cur, phi = cand, phi_c
        if trace is not None:
            trace.append(phi)
        if stalled:
            break
    return cur.zs, gamma, phi0 - phi


def w_gram(arch, state, x, mus, layer):
    """Small factors of the layer-``layer`` weight subproblem.

    Returns ``(G, B, c)`` with ``G = f~ Diag(mu) f~^T``,
    ``B = (Z + U) Diag(mu) f~^T`` and ``c = 0.5 ||Z + U||^2_mu``, so the
    subproblem is ``0.5 tr(W G W^T) - tr(W^T B) + c + phi(W)``.
    """
    f = layer_input(arch, state.zs, x, layer)
    m = mus[layer]
    xi = state.zs[layer] + state.us[layer]
    gram = (f * m) @ f.T
    b = (xi * m) @ f.T
    c = 0.5 * float(np.sum(m * np.sum(xi * xi, axis=0)))
    return gram, b, c


def w_objective(w, gram, b, c, pen, penalized_cols):
    quad = 0.5 * float(np.sum((w @ gram) * w)) - float(np.sum(w * b)) + c
    if pen.family == "none" or pen.gamma_w == 0:
        return quad
    sel = w[:, penalized_cols]
    if pen.family == "l1":
        return quad + pen.gamma_w * float(np.abs(sel).sum())
    return quad + 0.5 * pen.gamma_w * float(np.sum(sel * sel))


def power_iteration(a, iters=100):
    """Largest eigenvalue of a symmetric positive semidefinite matrix."""
    v = np.ones(a.shape[0]) / np.sqrt(a.shape[0])
    lam = 0.0
    for _ in range(iters):
        av = a @ v
        nrm = np.linalg.norm(av)
        if nrm == 0:
            return 0.0
        lam_new = float(v @ av)
        v = av / nrm
        if abs(lam_new - lam) <= 1e-12 * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    return lam


def _penalized_cols(pen, ncols):
    cols = np.ones(ncols, dtype=bool)
    if not pen.penalize_bias:
        cols[0] = False
    return cols


def _direct_solve(gram, b, ridge):
    a = gram + np.diag(ridge)
    if not np.all(np.isfinite(a)):
        raise np.linalg.LinAlgError("non-finite Gram matrix")
    try:
        fac = scipy.linalg.cho_factor(a, lower=True)
        jitter = False
    except np.linalg.LinAlgError:
        fac = scipy.linalg.cho_factor(a + JITTER * np.eye(a.shape[0]), lower=True)
        jitter = True
    # W A = B  <=>  A W^T = B^T (A symmetric)
    return scipy.linalg.cho_solve(fac, b.T).T, jitter


def w_step(arch, params, state, x, mus, pen, cfg, layers=None, trace=None):
    """Update every weight block given (Z, U). Layers are independent.

    Returns ``(new_params, jitter_used)``. With an l1 penalty each layer runs
    ``cfg.w_inner`` proximal-gradient passes from its current block; if
    ``trace`` is a dict it receives per-layer objective sequences.
    """
    new = [p.copy() for p in params]
    jitter_any = False
    order = range(arch.n_layers) if layers is None else layers
    for l in order:
        gram, b, c = w_gram(arch, state, x, mus, l)
        cols = _penalized_cols(pen, gram.shape[0])
        if pen.family == "l1":
            step = 1.0 / power_iteration(gram)
            mask = np.broadcast_to(cols, new[l].shape)
            if trace is None:
                new[l] = kernels.ista_gram(params[l], gram, b, step * pen.gamma_w, mask,
                                           step, cfg.w_inner)
            else:
                seq = [w_objective(params[l], gram, b, c, pen, cols)]
                w = params[l]
                for _ in range(cfg.w_inner):
                    w = kernels.ista_gram(w, gram, b, step * pen.gamma_w, mask, step, 1)
                    seq.append(w_objective(w, gram, b, c, pen, cols))
                trace[l] = seq
                new[l] = w
        else:
            ridge = pen.gamma_w * cols if pen.family == "l2" else np.zeros(gram.shape[0])
            new[l], jit = _direct_solve(gram, b, ridge)
            jitter_any |= jit
    return new, jitter_any


def u_step(arch, params, state, x):
    """Cumulative residual update ``U_l + R_l``."""
    res = apply_delta_w(arch, params, state.zs, x)
    return [u + r for u, r in zip(state.us, res)]


def split_objective(y, arch, params, x, pen):
    """``phi(w) + L(y, forward(x))``, the unsplit training objective."""
    return penalty_of(pen, arch, params) + loss_value(arch.loss, y, forward(arch, params, x))


def _check_data(y, x, arch):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != arch.input_dim:
        raise ValueError(f"inputs must be {arch.input_dim} x N, got {x.shape}")
    if y.shape != (arch.layer_dims[0], x.shape[1]):
        raise ValueError(f"targets must be {arch.layer_dims[0]} x {x.shape[1]}, got {y.shape}")
    if arch.loss == "multinomial":
        if not (np.all((y == 0) | (y == 1)) and np.all(y.sum(axis=0) == 1)):
            raise ValueError("multinomial targets must be one-hot columns")
    return y, x


def _check_finite(it, arrays, what):
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise DivergenceError(it, f"non-finite {what}")


def _sweep(y, arch, params, state, x, mus, pen, cfg, g_start, it):
    """One z-step and one w-step in the configured order."""
    if cfg.block_order == "zwu":
        zs, gamma, _ = z_step(y, arch, params, state, x, mus, cfg, g_start)
        _check_finite(it, zs, "layer values")
        state.zs = zs
        params, jit = w_step(arch, params, state, x, mus, pen, cfg)
    else:
        params, jit = w_step(arch, params, state, x, mus, pen, cfg)
        _check_finite(it, params, "weights")
        zs, gamma, _ = z_step(y, arch, params, state, x, mus, cfg, g_start)
    _check_finite(it, params, "weights")
    return zs, params, gamma, jit


def fit(y, x, arch, pen=None, cfg=None, init=None):
    """Train ``arch`` on targets ``y`` (K x N) and inputs ``x`` (M x N).

    ``init`` may be a parameter list (split state rebuilt feasibly with zero
    duals) or a ``(params, SplitState)`` pair for a full warm start.
    """
    pen = PenaltySpec() if pen is None else pen
    cfg = AdmmConfig() if cfg is None else cfg
    y, x = _check_data(y, x, arch)
    n = x.shape[1]
    mus = mu_weights(cfg.mu, arch.n_layers, n)

    if init is None:
        params = init_params(arch, cfg.seed, cfg.init_scale)
        state = SplitState(forward_zs(arch, params, x), None)
        state.us = zero_duals(state.zs)
    elif isinstance(init, tuple):
        params = [p.copy() for p in init[0]]
        state = init[1].copy()
    else:
        params = [p.copy() for p in init]
        state = SplitState(forward_zs(arch, params, x), None)
        state.us = zero_duals(state.zs)

    n_z = n * sum(arch.layer_dims)
    tol_p = cfg.tol_primal if cfg.tol_primal is not None else 1e-6 * math.sqrt(n_z)
    tol_d = cfg.tol_dual if cfg.tol_dual is not None else 1e-6 * math.sqrt(n_z)

    report = FitReport(arch, params, state, mus)
    gamma = cfg.gamma
    for it in range(cfg.max_outer):
        prev_zs = [z.copy() for z in state.zs]
        g_start = min(cfg.gamma, gamma / cfg.beta) if cfg.step_policy == "backtracking" else cfg.gamma
        try:
            state.zs, params, gamma, jit = _sweep(y, arch, params, state, x, mus, pen, cfg,
                                                  g_start, it)
        except np.linalg.LinAlgError as exc:
            raise DivergenceError(it, f"weight solve failed ({exc})") from exc
        report.jitter_used |= jit
        state.us = u_step(arch, params, state, x)

        primal, dual = residual_norms(arch, params, state, x, prev_zs, mus)
        objective = split_objective(y, arch, params, x, pen)
        al = aug_lagrangian(y, arch, params, state, x, mus, pen)
        if arch.loss == "multinomial":
            acc = classify_rate(softmax(forward(arch, params, x)), y)
        else:
            acc = float("nan")
        if not (math.isfinite(objective) and math.isfinite(al)):
            raise DivergenceError(it, f"non-finite objective ({objective}, {al})")
        report.records.append({"iter": it, "objective": objective, "aug_lagrangian": al,
                               "primal_res": primal, "dual_res": dual, "train_acc": acc})
        if primal <= tol_p and dual <= tol_d:
            report.converged = True
            break
        if cfg.residual_balancing:
            if primal > 10 * dual:
                mus = [2.0 * m for m in mus]
                state.us = [u / 2.0 for u in state.us]
            elif dual > 10 * primal:
                mus = [m / 2.0 for m in mus]
                state.us = [u * 2.0 for u in state.us]

    report.params = params
    report.state = state
    report.mus = mus
    report.nonzero_fraction = nonzero_fraction(params)
    log.debug("fit finished after %d iterations (converged=%s)",
              len(report.records), report.converged)
    return report
