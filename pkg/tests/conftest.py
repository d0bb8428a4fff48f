"""Shared builders for the test suite."""

import numpy as np
import pytest

from mmls import PenaltySpec, Regularizer
from mmls.moments import MomentState, Sample, update


def make_sample_log(rng, n_dim, block, count):
    """Random sample blocks kept around for brute-force re-evaluation."""
    return [
        Sample(rng.standard_normal((n_dim, block)), rng.standard_normal(block))
        for _ in range(count)
    ]


def stream_moments(samples, forgetting):
    """Feed a sample log through the running update."""
    state = MomentState.zeros(samples[0].n_dim, forgetting)
    for sample in samples:
        state = update(state, sample)
    return state


def brute_force_moments(samples, forgetting):
    """Closed-form weighted averages computed directly from the log."""
    n = len(samples)
    weights = np.array([forgetting ** (n - k) for k in range(1, n + 1)])
    total = weights.sum()
    power = sum(w * float(s.y @ s.y) for w, s in zip(weights, samples)) / total
    cross = sum(w * (s.X @ s.y) for w, s in zip(weights, samples)) / total
    autocorr = sum(w * (s.X @ s.X.T) for w, s in zip(weights, samples)) / total
    return power, cross, autocorr, total


def random_regularizer(rng, n_dim, kind="welsch", n_blocks=3, rows_per_block=2,
                       lam=0.3, delta=0.5, kappa=1.5, tau=1e-3, with_shift=True):
    """Generic dense-block regularizer for property tests."""
    spec = PenaltySpec(kind, lam=lam, delta=delta, kappa=kappa)
    blocks = []
    for _ in range(n_blocks):
        op = rng.standard_normal((rows_per_block, n_dim))
        shift = 0.1 * rng.standard_normal(rows_per_block) if with_shift else None
        blocks.append((op, shift, spec))
    lin = 0.01 * rng.standard_normal(n_dim)
    return Regularizer(n_dim, blocks, quad=tau, lin=lin)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
