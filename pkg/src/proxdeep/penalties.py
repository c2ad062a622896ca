"""Weight penalties and their proximal maps.

Vectors here are flat parameter vectors; ``bias_mask`` is true on bias
coordinates, which are left alone when ``penalize_bias`` is off.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels

FAMILIES = ("none", "l1", "l2")


@dataclass(frozen=True)
class PenaltySpec:
    family: str = "none"
    gamma_w: float = 0.0
    penalize_bias: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown penalty family {self.family!r}")
        if not self.gamma_w >= 0:
            raise ValueError("gamma_w must be nonnegative")

    @property
    def active(self):
        return self.family != "none" and self.gamma_w > 0


def _penalized(spec, x, bias_mask):
    if spec.penalize_bias or bias_mask is None:
        return np.ones(np.shape(x), dtype=bool)
    return ~np.asarray(bias_mask, dtype=bool)


def penalty_value(spec, w, bias_mask=None):
    w = np.asarray(w, dtype=np.float64)
    if spec.family == "none":
        return 0.0
    sel = w[_penalized(spec, w, bias_mask)]
    if spec.family == "l1":
        return float(spec.gamma_w * np.abs(sel).sum())
    return float(0.5 * spec.gamma_w * np.dot(sel, sel))


def prox_penalty(spec, x, step, bias_mask=None):
    """``argmin_z step*phi(z) + 0.5*||z - x||^2``."""
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=np.float64)
    if spec.family == "none" or spec.gamma_w == 0:
        return x.copy()
    mask = _penalized(spec, x, bias_mask)
    if spec.family == "l1":
        return kernels.soft_threshold(x, step * spec.gamma_w, mask)
    return np.where(mask, x / (1.0 + step * spec.gamma_w), x)
