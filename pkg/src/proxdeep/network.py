"""Architecture description, parameter blocks and forward prediction.

Layers are numbered from the output inwards: index 0 is the output layer
(``Z_1``), index ``L-1`` the innermost layer that multiplies the inputs.
Each parameter block is ``[b | W]`` with the bias in column 0, so block
``l`` has shape ``(layer_dims[l], fan_in + 1)``. ``links[l]`` is applied to
layer ``l+1`` before it feeds layer ``l``.
"""
from dataclasses import dataclass

import numpy as np

from .links import LINKS, link_eval
from .objectives import LOSSES, softmax
from .tensor import unvec, vec_of


@dataclass(frozen=True)
class Architecture:
    input_dim: int
    layer_dims: tuple
    links: tuple
    loss: str = "multinomial"

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(d) for d in self.layer_dims))
        object.__setattr__(self, "links", tuple(self.links))
        if len(self.layer_dims) < 1:
            raise ValueError("need at least one layer")
        if self.input_dim < 1 or min(self.layer_dims) < 1:
            raise ValueError("all dimensions must be >= 1")
        if len(self.links) != len(self.layer_dims) - 1:
            raise ValueError(f"{len(self.layer_dims)} layers need "
                             f"{len(self.layer_dims) - 1} links, got {len(self.links)}")
        for link in self.links:
            if link not in LINKS:
                raise ValueError(f"unknown link {link!r}")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.loss == "multinomial" and self.layer_dims[0] < 2:
            raise ValueError("multinomial loss needs at least 2 output classes")

    @property
    def n_layers(self):
        return len(self.layer_dims)

    def fan_in(self, layer):
        return self.input_dim if layer == self.n_layers - 1 else self.layer_dims[layer + 1]

    def block_shapes(self):
        return [(self.layer_dims[l], self.fan_in(l) + 1) for l in range(self.n_layers)]

    def n_params(self):
        return sum(r * c for r, c in self.block_shapes())

    def to_dict(self):
        return {"input_dim": self.input_dim, "layer_dims": list(self.layer_dims),
                "links": list(self.links), "loss": self.loss}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["input_dim"]), tuple(d["layer_dims"]), tuple(d["links"]),
                   d.get("loss", "multinomial"))


def check_params(arch, params):
    shapes = arch.block_shapes()
    if len(params) != len(shapes):
        raise ValueError(f"expected {len(shapes)} parameter blocks, got {len(params)}")
    for l, (blk, shp) in enumerate(zip(params, shapes)):
        if blk.shape != shp:
            raise ValueError(f"block {l} has shape {blk.shape}, expected {shp}")


def init_params(arch, seed, scale=0.1):
    """Uniform(-scale, scale) weights and zero biases from a seeded generator."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    rng = np.random.default_rng(seed)
    params = []
    for rows, cols in arch.block_shapes():
        blk = np.zeros((rows, cols))
        blk[:, 1:] = rng.uniform(-scale, scale, size=(rows, cols - 1))
        params.append(blk)
    return params


def with_ones(a):
    """Prepend a row of ones: ``f~(Z) = [1^T; Z]``."""
    a = np.asarray(a, dtype=np.float64)
    return np.vstack([np.ones((1, a.shape[1])), a])


def layer_input(arch, zs, x, layer):
    """``f~_l(Z_{l+1})``, the augmented input feeding ``layer``."""
    if layer == arch.n_layers - 1:
        return with_ones(x)
    return with_ones(link_eval(arch.links[layer], zs[layer + 1]))


def _check_x(arch, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != arch.input_dim:
        raise ValueError(f"inputs must be {arch.input_dim} x N, got {x.shape}")
    return x


def forward_zs(arch, params, x):
    """All layer values ``[Z_1, ..., Z_L]`` with the layer equations exact."""
    x = _check_x(arch, x)
    check_params(arch, params)
    L = arch.n_layers
    zs = [None] * L
    zs[L - 1] = params[L - 1] @ with_ones(x)
    for l in range(L - 2, -1, -1):
        zs[l] = params[l] @ with_ones(link_eval(arch.links[l], zs[l + 1]))
    return zs


def forward(arch, params, x):
    """Output-layer scores ``Z_1`` (pre-softmax for the multinomial loss)."""
    return forward_zs(arch, params, x)[0]


def predict_proba(arch, params, x):
    return softmax(forward(arch, params, x))


def flatten_params(params):
    return np.concatenate([vec_of(b) for b in params])


def unflatten_params(arch, w):
    out, pos = [], 0
    for rows, cols in arch.block_shapes():
        out.append(unvec(w[pos:pos + rows * cols], rows, cols).copy())
        pos += rows * cols
    if pos != len(w):
        raise ValueError("parameter vector length does not match architecture")
    return out


def bias_mask(arch):
    """Flat boolean mask, true on bias coordinates (column 0 of each block)."""
    parts = []
    for rows, cols in arch.block_shapes():
        m = np.zeros((rows, cols), dtype=bool)
        m[:, 0] = True
        parts.append(vec_of(m).astype(bool))
    return np.concatenate(parts)


def nonzero_fraction(params, thresh=1e-8):
    w = flatten_params(params)
    return float(np.mean(np.abs(w) > thresh))


def params_to_dict(arch, params):
    check_params(arch, params)
    return {"arch": arch.to_dict(),
            "blocks": [{"shape": list(b.shape), "values": vec_of(b).tolist()} for b in params]}


def params_from_dict(d):
    arch = Architecture.from_dict(d["arch"])
    blocks = [unvec(np.asarray(b["values"], dtype=np.float64), *b["shape"]).copy()
              for b in d["blocks"]]
    check_params(arch, blocks)
    return arch, blocks
