"""Running second-order statistics of a regression stream.

A stream delivers blocks ``(X, y)`` with ``X`` of shape (n_dim, block)
and ``y`` of length ``block``.  The state tracks exponentially weighted
averages of ``||y||^2``, ``X y`` and ``X X'`` under a forgetting factor
in (0, 1]; factor 1 gives plain sample means.  These statistics define
the streamed objective

    F(h) = 1/2 power - cross' h + 1/2 h' autocorr h + Psi(h)

together with its gradient and the half-quadratic surrogate pieces: the
curvature matrix ``A(h) = autocorr + Q + op' Diag(b(h)) op`` and the
normal-equation right-hand side ``c(h) = cross + q + op' Diag(b(h)) shift``
so that ``grad F(h) = A(h) h - c(h)``.

Everything here is the direct (dense) evaluation path; the engine module
reproduces the gradient and curvature products through low-rank
recursions and is tested against these references.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .penalties import Regularizer

__all__ = [
    "Sample",
    "MomentState",
    "update",
    "objective",
    "normal_rhs",
    "normal_matrix",
    "gradient",
]


@dataclass
class Sample:
    """One stream block: regressors ``X`` (n_dim, block) and targets ``y``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        if self.X.shape[1] != self.y.shape[0]:
            raise ValueError(
                f"block mismatch: X has {self.X.shape[1]} columns, y has {self.y.shape[0]} entries"
            )
        if self.y.shape[0] < 1:
            raise ValueError("block size must be at least 1")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("sample entries must be finite")

    @property
    def n_dim(self) -> int:
        return self.X.shape[0]

    @property
    def block_size(self) -> int:
        return self.X.shape[1]


@dataclass
class MomentState:
    """Exponentially weighted statistics after ``count`` blocks.

    ``weight_total`` is the effective number of blocks seen: ``count``
    when ``forgetting == 1`` and ``(1 - forgetting**count) / (1 - forgetting)``
    otherwise.  It is carried by the running recursion
    ``weight_total <- 1 + forgetting * weight_total`` so no power of the
    forgetting factor is ever formed.
    """

    power: float
    cross: np.ndarray
    autocorr: np.ndarray
    count: int
    forgetting: float
    weight_total: float
    block_size: int | None = None

    @classmethod
    def zeros(cls, n_dim: int, forgetting: float = 1.0) -> "MomentState":
        if not (0.0 < forgetting <= 1.0):
            raise ValueError(f"forgetting factor must lie in (0, 1], got {forgetting}")
        return cls(
            power=0.0,
            cross=np.zeros(n_dim),
            autocorr=np.zeros((n_dim, n_dim)),
            count=0,
            forgetting=float(forgetting),
            weight_total=0.0,
        )

    @property
    def n_dim(self) -> int:
        return self.cross.shape[0]


def _mirror_lower(mat: np.ndarray) -> np.ndarray:
    """Exactly symmetric copy of ``mat`` built from its lower triangle."""
    lower = np.tril(mat)
    return lower + lower.T - np.diag(np.diagonal(mat))


def update(state: MomentState, sample: Sample) -> MomentState:
    """Fold one block into the statistics, returning the new state."""
    if sample.n_dim != state.n_dim:
        raise ValueError(f"sample dimension {sample.n_dim} != state dimension {state.n_dim}")
    if state.block_size is not None and sample.block_size != state.block_size:
        raise ValueError(
            f"block size changed mid-stream: {sample.block_size} != {state.block_size}"
        )
    weight_total = 1.0 + state.forgetting * state.weight_total
    cross = state.cross + (sample.X @ sample.y - state.cross) / weight_total
    outer = _mirror_lower(sample.X @ sample.X.T)
    autocorr = state.autocorr + (outer - state.autocorr) / weight_total
    power = state.power + (float(sample.y @ sample.y) - state.power) / weight_total
    return MomentState(
        power=power,
        cross=cross,
        autocorr=autocorr,
        count=state.count + 1,
        forgetting=state.forgetting,
        weight_total=weight_total,
        block_size=sample.block_size,
    )


def objective(state: MomentState, reg: Regularizer, h) -> float:
    """Streamed objective ``F(h)`` under the current statistics."""
    h = _check_vec(state, reg, h)
    data = 0.5 * state.power - float(state.cross @ h) + 0.5 * float(h @ (state.autocorr @ h))
    return data + reg.value(h)


def normal_rhs(state: MomentState, reg: Regularizer, h) -> np.ndarray:
    """Right-hand side ``c(h)`` of the reweighted normal equations."""
    h = _check_vec(state, reg, h)
    b = reg.weights(h)
    return state.cross + reg.lin + reg.op.T @ (b * reg.shift)


def normal_matrix(state: MomentState, reg: Regularizer, h) -> np.ndarray:
    """Surrogate curvature ``A(h)``, dense and exactly symmetric.

    Reference/diagnostic path only: the engine never materializes this
    matrix while iterating.
    """
    h = _check_vec(state, reg, h)
    b = reg.weights(h)
    mat = state.autocorr + reg.quad + (reg.op * b[:, None]).T @ reg.op
    return 0.5 * (mat + mat.T)


def gradient(state: MomentState, reg: Regularizer, h) -> np.ndarray:
    """Gradient ``A(h) h - c(h)`` assembled from matrix-vector products."""
    h = _check_vec(state, reg, h)
    res = reg.residual(h)
    b = reg.weights_from_norms(reg.block_norms(res))
    return state.autocorr @ h + reg.quad @ h - state.cross - reg.lin + reg.op.T @ (b * res)


def _check_vec(state: MomentState, reg: Regularizer, h) -> np.ndarray:
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.shape[0] != state.n_dim or reg.n_dim != state.n_dim:
        raise ValueError(
            f"dimension mismatch: h has {h.shape[0]}, state {state.n_dim}, regularizer {reg.n_dim}"
        )
    return h
