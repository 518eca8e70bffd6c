"""End-to-end verification helpers: random problems and pipeline gradient checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffcore import Tape, grad_check
from .model import ModelDims, forward_pair, init_params
from .objective import LabelPair, batch_loss, pair_loss


@dataclass
class PairProblem:
    params: dict
    in1: np.ndarray
    in2: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    dims: ModelDims


def random_pair_problem(dims: ModelDims, mutual, n_pairs=4, seed=0, gate="pair", lam=1.0, eps=0.05,
                        min_kink=1e-3, max_draws=1000) -> PairProblem:
    """Initialised model plus random raw pair inputs and labels.

    Biases are made non-zero so every parameter carries a generic gradient.
    Draws are repeated (from the same seeded stream) until every ReLU and
    hinge argument is at least ``min_kink`` away from zero, so that
    central differences never straddle a kink.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_draws):
        params = init_params(dims, mutual, rng)
        for name, value in params.items():
            if value.ndim == 1:
                params[name] = rng.normal(0.0, 0.1, size=value.shape)
        in1 = rng.normal(size=(n_pairs, dims.d_in))
        in2 = rng.normal(size=(n_pairs, dims.d_in))
        c1 = rng.integers(0, dims.n_classes, size=n_pairs)
        c2 = rng.integers(0, dims.n_classes, size=n_pairs)
        prob = PairProblem(params, in1, in2, c1, c2, dims)
        loss = pipeline_loss(params, prob, mutual, gate, lam, eps)
        if loss.tape.kink_distance() >= min_kink:
            return prob
    raise RuntimeError(f"no draw kept kinks {min_kink} away in {max_draws} tries")


def pipeline_loss(params, prob: PairProblem, mutual, gate, lam, eps):
    """Batch loss of ``prob``'s pairs, recorded on a fresh tape watching ``params``."""
    tape = Tape()
    P = tape.watch(params)
    acts = forward_pair(prob.in1, prob.in2, P, mutual, gate)
    labels = LabelPair(prob.c1, prob.c2, prob.dims.n_classes)
    return batch_loss(pair_loss(acts, labels, lam, eps))


def pipeline_grad_error(prob: PairProblem, mutual, gate, lam, eps, h=1e-5) -> float:
    return grad_check(lambda p: pipeline_loss(p, prob, mutual, gate, lam, eps), prob.params, h)
