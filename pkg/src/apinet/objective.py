"""Pair losses: cross entropy over attentive predictions plus score ranking."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import diffcore as dc
from .diffcore import Node
from .errors import ConfigError, ContractError
from .model import PairActivations

DEFAULT_LAMBDA = 1.0
DEFAULT_MARGIN = 0.05


@dataclass(frozen=True)
class LabelPair:
    """Ground-truth class indices for the two sides of each pair."""

    c1: np.ndarray
    c2: np.ndarray
    n_classes: int

    def __init__(self, c1, c2, n_classes):
        object.__setattr__(self, "c1", np.atleast_1d(np.asarray(c1, dtype=np.intp)))
        object.__setattr__(self, "c2", np.atleast_1d(np.asarray(c2, dtype=np.intp)))
        object.__setattr__(self, "n_classes", int(n_classes))
        if self.c1.shape != self.c2.shape:
            raise ValueError("c1 and c2 must have the same length")
        for c in (self.c1, self.c2):
            if c.size and (c.min() < 0 or c.max() >= self.n_classes):
                raise ValueError(f"label index out of range [0, {self.n_classes})")

    @property
    def y1(self) -> np.ndarray:
        return np.eye(self.n_classes)[self.c1]

    @property
    def y2(self) -> np.ndarray:
        return np.eye(self.n_classes)[self.c2]


def _rows(node: Node) -> Node:
    # treat a single pair (1-D scores) as a batch of one
    if node.value.ndim == 1:
        return dc.reshape(node, (1, -1))
    return node


def _check_labels(acts: PairActivations, labels: LabelPair):
    c = acts.z1_self.shape[-1]
    if labels.n_classes != c:
        raise ValueError(f"labels are over {labels.n_classes} classes, scores over {c}")
    rows = 1 if acts.z1_self.value.ndim == 1 else acts.z1_self.shape[0]
    if labels.c1.size != rows:
        raise ValueError(f"{labels.c1.size} label pairs for {rows} activation rows")


def cross_entropy(acts: PairActivations, labels: LabelPair) -> Node:
    """Per-pair cross entropy summed over the populated attentive predictions.

    Computed from logits with log-sum-exp.  Returns a vector with one entry per pair.
    """
    _check_labels(acts, labels)
    total = None
    for image, _kind, z, _p in acts.predictions():
        c = labels.c1 if image == 1 else labels.c2
        term = dc.pick(dc.log_softmax(_rows(z)), c)
        total = term if total is None else total + term
    return -total


def score_rank(acts: PairActivations, labels: LabelPair, margin: float = DEFAULT_MARGIN) -> Node:
    """Per-pair hinge: sum_i max(0, p_i_other(c_i) - p_i_self(c_i) + margin)."""
    if acts.gate != "pair" or acts.p1_other is None:
        raise ContractError("score ranking needs self and other predictions (pair gate mode)")
    _check_labels(acts, labels)
    total = None
    for c, p_self, p_other in ((labels.c1, acts.p1_self, acts.p1_other), (labels.c2, acts.p2_self, acts.p2_other)):
        gap = dc.pick(_rows(p_other), c) - dc.pick(_rows(p_self), c)
        term = dc.relu(gap + margin)
        total = term if total is None else total + term
    return total


@dataclass
class PairLossBreakdown:
    l_ce: Node
    l_rk: Node
    total: Node
    lam: float
    margin: float
    components: dict = field(default_factory=dict)

    def __len__(self):
        return self.total.shape[0]


def pair_loss(acts: PairActivations, labels: LabelPair, lam: float = DEFAULT_LAMBDA,
              margin: float = DEFAULT_MARGIN) -> PairLossBreakdown:
    """total = l_ce + lam * l_rk, per pair.

    In single gate mode there are no "other" predictions; l_rk is zero and
    does not enter the total.
    """
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    l_ce = cross_entropy(acts, labels)
    if acts.gate == "single":
        l_rk = dc.scale(l_ce, 0.0)
        total = l_ce
    else:
        l_rk = score_rank(acts, labels, margin)
        total = l_ce + dc.scale(l_rk, lam)
    components = {}
    for image, kind, z, _p in acts.predictions():
        c = labels.c1 if image == 1 else labels.c2
        components[f"ce_{image}_{kind}"] = -dc.log_softmax(_rows(z)).value[np.arange(c.size), c]
    return PairLossBreakdown(l_ce, l_rk, total, float(lam), float(margin), components)


def batch_loss(breakdowns: PairLossBreakdown | Sequence[PairLossBreakdown]) -> Node:
    """Mean of per-pair totals."""
    if isinstance(breakdowns, PairLossBreakdown):
        breakdowns = [breakdowns]
    if not breakdowns:
        raise ValueError("batch_loss needs at least one pair")
    totals = breakdowns[0].total
    for b in breakdowns[1:]:
        totals = dc.concat(totals, b.total)
    return dc.mean(totals)
