"""Column-major vectorisation and matrix-free Kronecker products.

Matrices are plain 2-D float64 arrays; ``vec`` stacks columns, so the
observation-major split variables ``Z_l`` (one column per observation)
flatten observation by observation.
"""
import numpy as np


def vec_of(mat):
    """Stack the columns of ``mat`` into one vector."""
    return np.asarray(mat, dtype=np.float64).ravel(order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec_of`."""
    v = np.asarray(v, dtype=np.float64)
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape vector of length {v.size} to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def kron_apply_left(a, v, block):
    """Return ``(I_block kron a) @ v`` without forming the Kronecker factor.

    Equivalently ``vec(a @ V)`` where ``V`` is ``v`` reshaped into ``block``
    columns of length ``a.shape[1]``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    v = np.asarray(v, dtype=np.float64)
    if v.size != a.shape[1] * block:
        raise ValueError(
            f"vector of length {v.size} does not split into {block} blocks of {a.shape[1]}")
    return vec_of(a @ unvec(v, a.shape[1], block))


def kron_apply_right(b_t, v, block):
    """Return ``(b_t kron I_block) @ v``, i.e. ``vec(A @ B)`` for ``v = vec(A)``.

    ``b_t`` is ``B^T``; ``block`` is the row count of ``A``.
    """
    b_t = np.atleast_2d(np.asarray(b_t, dtype=np.float64))
    v = np.asarray(v, dtype=np.float64)
    if v.size != b_t.shape[1] * block:
        raise ValueError(
            f"vector of length {v.size} is not vec of a {block}x{b_t.shape[1]} matrix")
    return vec_of(unvec(v, block, b_t.shape[1]) @ b_t.T)


def weighted_norm_sq(v, diag):
    """``sum(diag * v**2)`` for a strictly positive diagonal weight."""
    v = np.asarray(v, dtype=np.float64)
    diag = np.asarray(diag, dtype=np.float64)
    if v.shape != diag.shape:
        raise ValueError(f"shape mismatch: {v.shape} vs {diag.shape}")
    if np.any(diag <= 0):
        raise ValueError("weights must be strictly positive")
    return float(np.sum(diag * v * v))
