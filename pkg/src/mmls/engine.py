"""Stochastic majorize-minimize subspace iteration.

Each incoming block updates the running statistics and then minimizes the
quadratic surrogate of the streamed objective over a small subspace:

    h_next = basis @ coords,   coords = pinv(B) @ basis' c(h),
    B = basis' A(h) basis,

where ``A(h)`` and ``c(h)`` are the surrogate curvature and normal-equation
right-hand side (see :mod:`mmls.moments`).  The memory-gradient subspace
spans the negative gradient, the current iterate, and the last step; with
it the per-step cost stays at a few matrix-vector products because every
product of the basis with the curvature pieces is carried recursively:

* the gradient is reconstructed as ``A(h) basis_prev coords_prev - c(h)``,
  folding the new block into the cached ``autocorr @ basis_prev`` product
  instead of touching the dense autocorrelation matrix;
* images of the iterate columns under ``op``, the quadratic matrix and the
  autocorrelation transfer from one iteration to the next, so only the
  fresh gradient column requires full products.

The reduced system is solved by a symmetric eigendecomposition
pseudo-inverse (minimum-norm solution; eigenvalues below 1e-12 of the
largest are treated as zero), so rank-deficient subspaces -- a zero
gradient column, a zero step, the zero initial iterate -- need no special
casing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import moments
from .moments import MomentState, Sample
from .penalties import Regularizer

__all__ = [
    "SubspaceStrategy",
    "EngineState",
    "IterationReport",
    "MMEngine",
    "DivergenceError",
    "build_subspace",
    "reduced_matrix",
    "reduced_solve",
    "majorant_value",
    "mm_step",
]

RANK_CUTOFF = 1e-12
DIVERGENCE_NORM = 1e12


class SubspaceStrategy(str, enum.Enum):
    """Search-subspace choices for the per-step surrogate minimization."""

    GRADIENT_ONLY = "gradient-only"
    MEMORY_GRADIENT = "memory-gradient"
    FULL_SPACE = "full-space"


class DivergenceError(RuntimeError):
    """Iterate grew unbounded or non-finite; carries the iteration index."""

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"divergence detected at iteration {iteration}")


@dataclass
class IterationReport:
    """Per-step diagnostics.

    ``objective`` and ``grad_norm`` refer to the iterate *before* the
    step, evaluated under the statistics that include the new block.
    ``step_quadratic`` is the squared step length in the surrogate
    metric, the quantity whose half is guaranteed not to exceed the
    objective decrease.
    """

    objective: float
    grad_norm: float
    step_quadratic: float
    subspace_dim: int
    rank: int


@dataclass
class EngineState:
    """Iterate, subspace basis and the recursive caches.

    After ``step`` iterations: ``h`` is the new iterate (in the range of
    ``basis``, with coordinates ``coords``), ``h_prev`` the previous one,
    ``grad`` the gradient at ``h_prev`` under the latest statistics.  The
    three basis caches hold ``autocorr @ basis``, ``quad @ basis`` and
    ``op @ basis``; the three ``*_h_prev`` vectors hold the matching
    images of ``h_prev`` and seed the next refresh.
    """

    step: int
    h: np.ndarray
    h_prev: np.ndarray
    coords: np.ndarray
    basis: np.ndarray
    autocorr_basis: np.ndarray
    quad_basis: np.ndarray
    op_basis: np.ndarray
    grad: np.ndarray
    op_h_prev: np.ndarray
    quad_h_prev: np.ndarray
    autocorr_h_prev: np.ndarray

    @classmethod
    def initial(cls, reg: Regularizer, h1=None) -> "EngineState":
        """State before any block.

        The default start ``h = 0`` is encoded as a single zero basis
        column with coordinate 0; a user-supplied start as the column
        ``h1`` with coordinate 1.  Either way the first gradient
        reconstruction is exact.
        """
        n = reg.n_dim
        if h1 is None:
            h = np.zeros(n)
            basis = np.zeros((n, 1))
            coords = np.zeros(1)
        else:
            h = np.asarray(h1, dtype=float).reshape(-1).copy()
            if h.shape[0] != n:
                raise ValueError(f"h1 must have length {n}")
            if not np.all(np.isfinite(h)):
                raise ValueError("h1 must be finite")
            basis = h[:, None].copy()
            coords = np.ones(1)
        return cls(
            step=0,
            h=h,
            h_prev=h.copy(),
            coords=coords,
            basis=basis,
            autocorr_basis=np.zeros((n, 1)),
            quad_basis=reg.quad @ basis,
            op_basis=reg.op @ basis,
            grad=np.zeros(n),
            op_h_prev=reg.op @ h,
            quad_h_prev=reg.quad @ h,
            autocorr_h_prev=np.zeros(n),
        )


def build_subspace(strategy, grad, h, h_prev, step) -> np.ndarray:
    """Assemble the basis for iteration ``step`` (columns in fixed order).

    Memory gradient uses ``[-grad, h, h - h_prev]`` (two columns at the
    first step), gradient-only ``[-grad, h]``, full space the identity.
    Degenerate columns are kept; the pseudo-inverse absorbs them.
    """
    strategy = SubspaceStrategy(strategy)
    if strategy is SubspaceStrategy.FULL_SPACE:
        return np.eye(h.shape[0])
    if strategy is SubspaceStrategy.MEMORY_GRADIENT and step > 1:
        return np.column_stack([-grad, h, h - h_prev])
    return np.column_stack([-grad, h])


def reduced_matrix(basis, autocorr_basis, quad_basis, op_basis, weights) -> np.ndarray:
    """Reduced surrogate curvature ``basis' A(h) basis`` from the caches."""
    mat = basis.T @ (autocorr_basis + quad_basis) + op_basis.T @ (weights[:, None] * op_basis)
    return 0.5 * (mat + mat.T)


def reduced_solve(mat, rhs) -> np.ndarray:
    """Minimum-norm solution of the reduced system ``mat @ u = rhs``.

    ``mat`` must be symmetric positive semidefinite up to roundoff; a
    larger asymmetry indicates a cache bug upstream and raises.
    """
    mat = np.asarray(mat, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = max(1.0, float(np.abs(mat).max()) if mat.size else 1.0)
    if mat.size and float(np.abs(mat - mat.T).max()) > 1e-8 * scale:
        raise np.linalg.LinAlgError("reduced matrix is not symmetric: incoherent caches")
    sol, _ = _pinv_psd_solve(0.5 * (mat + mat.T), rhs)
    return sol


def _pinv_psd_solve(mat, rhs):
    """Eigendecomposition pseudo-inverse solve; returns (solution, rank)."""
    vals, vecs = np.linalg.eigh(mat)
    top = float(vals[-1]) if vals.size else 0.0
    if top <= 0.0:
        return np.zeros_like(rhs), 0
    keep = vals > RANK_CUTOFF * top
    sub = vecs[:, keep]
    sol = sub @ ((sub.T @ rhs) / vals[keep])
    return sol, int(np.count_nonzero(keep))


def majorant_value(state: MomentState, reg: Regularizer, anchor, h) -> float:
    """Quadratic surrogate of the objective anchored at ``anchor``.

    Equals the objective at the anchor and dominates it everywhere;
    diagnostic/test path only.
    """
    anchor = np.asarray(anchor, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float).reshape(-1)
    diff = h - anchor
    grad = moments.gradient(state, reg, anchor)
    curv = moments.normal_matrix(state, reg, anchor)
    return (
        moments.objective(state, reg, anchor)
        + float(grad @ diff)
        + 0.5 * float(diff @ (curv @ diff))
    )


def mm_step(state, mstate, reg, sample, strategy):
    """Advance one block: returns ``(state, moment_state, report)``.

    Follows the recursive schedule: fold the block into the statistics,
    evaluate the half-quadratic weights and right-hand side at the
    current iterate, reconstruct the gradient from the previous caches
    plus the new rank-``block`` term, build the new basis, refresh the
    caches (recursively under the memory-gradient strategy), and solve
    the reduced system.

    A gradient that vanishes exactly short-circuits to ``h_next = h``
    so stationary points are fixed points bit for bit; the report then
    carries ``rank = 0``.
    """
    strategy = SubspaceStrategy(strategy)
    new_m = moments.update(mstate, sample)
    X, y = sample.X, sample.y
    step = new_m.count
    inv_w = 1.0 / new_m.weight_total

    # weights, penalty block norms and normal-equation rhs at the current h
    op_h = state.op_basis @ state.coords
    norms = reg.block_norms(op_h - reg.shift)
    weights = reg.weights_from_norms(norms)
    rhs_vec = new_m.cross + reg.lin + reg.op.T @ (weights * reg.shift)

    # curvature image of the *previous* basis with the new block folded in
    XtD = X.T @ state.basis
    curv_prev = (
        (1.0 - inv_w) * state.autocorr_basis
        + inv_w * (X @ XtD)
        + state.quad_basis
        + reg.op.T @ (weights[:, None] * state.op_basis)
    )
    grad = curv_prev @ state.coords - rhs_vec
    if not np.all(np.isfinite(grad)):
        raise DivergenceError(step, f"non-finite gradient at iteration {step}")

    # images of the current iterate, carried forward recursively
    quad_h = state.quad_basis @ state.coords
    Xt_h = XtD @ state.coords
    autocorr_h = (1.0 - inv_w) * (state.autocorr_basis @ state.coords) + inv_w * (X @ Xt_h)

    basis = build_subspace(strategy, grad, state.h, state.h_prev, step)

    if strategy is SubspaceStrategy.MEMORY_GRADIENT:
        neg = -grad
        grad_cols = (new_m.autocorr @ neg, reg.quad @ neg, reg.op @ neg)
        if step == 1:
            autocorr_basis = np.column_stack([grad_cols[0], autocorr_h])
            quad_basis = np.column_stack([grad_cols[1], quad_h])
            op_basis = np.column_stack([grad_cols[2], op_h])
        else:
            # the previous iterate normally sits at column 1 of the old
            # basis, so its product with the new block was already formed
            # above; a state not built by this strategy loses that reuse
            if state.basis.shape[1] > 1 and np.array_equal(state.basis[:, 1], state.h_prev):
                xt_h_old = XtD[:, 1]
            else:
                xt_h_old = X.T @ state.h_prev
            autocorr_h_old = (1.0 - inv_w) * state.autocorr_h_prev + inv_w * (X @ xt_h_old)
            autocorr_basis = np.column_stack(
                [grad_cols[0], autocorr_h, autocorr_h - autocorr_h_old]
            )
            quad_basis = np.column_stack([grad_cols[1], quad_h, quad_h - state.quad_h_prev])
            op_basis = np.column_stack([grad_cols[2], op_h, op_h - state.op_h_prev])
    elif strategy is SubspaceStrategy.FULL_SPACE:
        autocorr_basis = new_m.autocorr.copy()
        quad_basis = reg.quad.copy()
        op_basis = reg.op.copy()
    else:
        autocorr_basis = new_m.autocorr @ basis
        quad_basis = reg.quad @ basis
        op_basis = reg.op @ basis

    reduced = reduced_matrix(basis, autocorr_basis, quad_basis, op_basis, weights)

    if not np.any(grad):
        coords = _anchor_coords(strategy, basis.shape[1], state.h)
        h_next = state.h.copy()
        step_quadratic = 0.0
        rank = 0
    else:
        coords, rank = _pinv_psd_solve(reduced, basis.T @ rhs_vec)
        h_next = basis @ coords
        if not np.all(np.isfinite(h_next)) or float(np.linalg.norm(h_next)) > DIVERGENCE_NORM:
            raise DivergenceError(step)
        shifted = coords - _anchor_coords(strategy, basis.shape[1], state.h)
        step_quadratic = float(shifted @ (reduced @ shifted))

    objective = (
        0.5 * new_m.power
        - float(new_m.cross @ state.h)
        + 0.5 * float(state.h @ autocorr_h)
        + 0.5 * float(state.h @ quad_h)
        - float(reg.lin @ state.h)
        + reg.penalty_sum(norms)
    )
    report = IterationReport(
        objective=objective,
        grad_norm=float(np.linalg.norm(grad)),
        step_quadratic=step_quadratic,
        subspace_dim=basis.shape[1],
        rank=rank,
    )
    new_state = EngineState(
        step=step,
        h=h_next,
        h_prev=state.h,
        coords=coords,
        basis=basis,
        autocorr_basis=autocorr_basis,
        quad_basis=quad_basis,
        op_basis=op_basis,
        grad=grad,
        op_h_prev=op_h,
        quad_h_prev=quad_h,
        autocorr_h_prev=autocorr_h,
    )
    return new_state, new_m, report


def _anchor_coords(strategy: SubspaceStrategy, dim: int, h: np.ndarray) -> np.ndarray:
    if strategy is SubspaceStrategy.FULL_SPACE:
        return h
    unit = np.zeros(dim)
    unit[1] = 1.0
    return unit


class MMEngine:
    """Single-owner driver pairing an :class:`EngineState` with statistics.

    Parameters
    ----------
    reg : Regularizer
    strategy : SubspaceStrategy or str
    forgetting : float
        Forgetting factor in (0, 1].
    h1 : array, optional
        Starting iterate (defaults to zero).
    """

    def __init__(self, reg: Regularizer, strategy=SubspaceStrategy.MEMORY_GRADIENT,
                 forgetting: float = 1.0, h1=None):
        self.reg = reg
        self.strategy = SubspaceStrategy(strategy)
        self.moments = MomentState.zeros(reg.n_dim, forgetting)
        self.state = EngineState.initial(reg, h1)

    @property
    def h(self) -> np.ndarray:
        return self.state.h

    def step(self, X, y) -> IterationReport:
        """Consume one block and return its report."""
        sample = Sample(X, y)
        self.state, self.moments, report = mm_step(
            self.state, self.moments, self.reg, sample, self.strategy
        )
        return report
