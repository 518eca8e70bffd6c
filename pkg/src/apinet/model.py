"""Attentive pairwise interaction on top of a small dense encoder.

Parameters live in a flat ``dict[str, ndarray]``:

* ``encoder.w1, encoder.b1, encoder.w2, encoder.b2`` map R^d_in -> R^d with a
  ReLU after the first layer only;
* ``classifier.w`` (C x d) and ``classifier.b``;
* ``mutual.*`` for the learned mutual-vector strategies.

Weight matrices are stored (out, in).  The classifier is shared between the
attentive features seen in training and the raw features scored by
:func:`predict_single`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diffcore as dc
from .diffcore import Node, Tape
from .errors import ConfigError, DimensionError

MUTUAL_STRATEGIES = ("individual", "subtract-square", "sum", "product", "weight-attention", "mlp")
GATE_MODES = ("pair", "single")
ENCODER_KEYS = ("encoder.w1", "encoder.b1", "encoder.w2", "encoder.b2")


@dataclass(frozen=True)
class ModelDims:
    d_in: int = 16
    d: int = 32
    d_h: int = 8
    enc_hidden: int = 32
    n_classes: int = 24

    def __post_init__(self):
        for name in ("d_in", "d", "d_h", "enc_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.n_classes < 2:
            raise ConfigError("n_classes must be >= 2")


def check_strategy(mutual, gate="pair"):
    if mutual not in MUTUAL_STRATEGIES:
        raise ConfigError(f"unknown mutual strategy {mutual!r}; expected one of {MUTUAL_STRATEGIES}")
    if gate not in GATE_MODES:
        raise ConfigError(f"unknown gate mode {gate!r}; expected one of {GATE_MODES}")
    if mutual == "individual" and gate == "single":
        raise ConfigError("single gate mode is undefined for the individual strategy")


def _mutual_shapes(dims: ModelDims, mutual):
    d, dh = dims.d, dims.d_h
    if mutual == "mlp":
        return [("w1", (dh, 2 * d)), ("b1", (dh,)), ("w2", (d, dh)), ("b2", (d,))]
    if mutual == "weight-attention":
        return [("w1", (dh, 2 * d)), ("b1", (dh,)), ("w2", (2, dh)), ("b2", (2,))]
    if mutual == "individual":
        return [("w1", (dh, d)), ("b1", (dh,)), ("w2", (d, dh)), ("b2", (d,))]
    return []


def param_shapes(dims: ModelDims, mutual=None) -> list[tuple[str, tuple[int, ...]]]:
    """Declaration order used for initialisation and serialisation."""
    shapes = [
        ("encoder.w1", (dims.enc_hidden, dims.d_in)),
        ("encoder.b1", (dims.enc_hidden,)),
        ("encoder.w2", (dims.d, dims.enc_hidden)),
        ("encoder.b2", (dims.d,)),
        ("classifier.w", (dims.n_classes, dims.d)),
        ("classifier.b", (dims.n_classes,)),
    ]
    if mutual is not None:
        check_strategy(mutual)
        shapes += [(f"mutual.{k}", s) for k, s in _mutual_shapes(dims, mutual)]
    return shapes


def init_params(dims: ModelDims, mutual=None, rng=None) -> dict[str, np.ndarray]:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.

    Encoder and classifier are drawn before any mutual weights, so a
    baseline (``mutual=None``) and an API model from the same seed share
    their encoder/classifier initialisation.
    """
    rng = np.random.default_rng(rng)
    params = {}
    for name, shape in param_shapes(dims, mutual):
        if len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[1])
            params[name] = rng.uniform(-bound, bound, size=shape)
    return params


def _layer(x: Node, w: Node, b: Node, label: str) -> Node:
    if x.shape[-1] != w.shape[1]:
        raise DimensionError(f"{label}: expects input dimension {w.shape[1]}, got {x.shape[-1]}")
    return dc.linear(x, w, b)


def _nodes(params, *inputs):
    """Put ``inputs`` and ``params`` on one tape."""
    tape = next((a.tape for a in (*inputs, *params.values()) if isinstance(a, Node)), None) or Tape()
    P = tape.watch(params) if any(not isinstance(v, Node) for v in params.values()) else dict(params)
    xs = [a if isinstance(a, Node) else tape.constant(a) for a in inputs]
    return P, xs


def encode(x, params) -> Node:
    P, (x,) = _nodes(params, x)
    h = dc.relu(_layer(x, P["encoder.w1"], P["encoder.b1"], "encoder layer 1"))
    return _layer(h, P["encoder.w2"], P["encoder.b2"], "encoder layer 2")


def _two_layer(x, P, label):
    h = dc.relu(_layer(x, P["mutual.w1"], P["mutual.b1"], f"{label} layer 1"))
    return _layer(h, P["mutual.w2"], P["mutual.b2"], f"{label} layer 2")


def mutual_vector(x1, x2, params, mutual="mlp") -> Node | None:
    """Mutual vector of a pair (rows are pairs when inputs are 2-D).

    Returns ``None`` for the individual strategy, whose gates come from
    each image alone (see :func:`gate_vectors`).
    """
    check_strategy(mutual)
    P, (x1, x2) = _nodes(params, x1, x2)
    if x1.shape != x2.shape:
        raise DimensionError(f"mutual_vector: pair shapes {x1.shape} and {x2.shape} differ")
    if mutual == "individual":
        return None
    if mutual == "sum":
        return x1 + x2
    if mutual == "product":
        return dc.hadamard(x1, x2)
    if mutual == "subtract-square":
        return dc.square(x1 - x2)
    joint = dc.concat(x1, x2)
    if mutual == "mlp":
        return _two_layer(joint, P, "mutual mlp")
    # weight-attention
    w = dc.softmax(_two_layer(joint, P, "weight attention"))
    return dc.mul(dc.take_cols(w, 0, 1), x1) + dc.mul(dc.take_cols(w, 1, 2), x2)


def gate_vectors(xm, x1, x2, params=None, mutual="mlp", gate="pair") -> tuple[Node, Node]:
    check_strategy(mutual, gate)
    P, (x1, x2) = _nodes(params or {}, x1, x2)
    if mutual == "individual":
        return dc.sigmoid(_two_layer(x1, P, "individual")), dc.sigmoid(_two_layer(x2, P, "individual"))
    if xm is None:
        raise ConfigError(f"strategy {mutual!r} needs a mutual vector")
    if gate == "single":
        g = dc.sigmoid(xm)
        return g, g
    return dc.sigmoid(dc.hadamard(xm, x1)), dc.sigmoid(dc.hadamard(xm, x2))


def interact(x1, x2, g1, g2) -> tuple[Node, Node, Node, Node]:
    """Residual attention: (x1_self, x2_self, x1_other, x2_other)."""
    _, (x1, x2, g1, g2) = dc._lift(x1, x2, g1, g2)
    for label, v in (("x2", x2), ("g1", g1), ("g2", g2)):
        if v.shape != x1.shape:
            raise DimensionError(f"interact: {label} has shape {v.shape}, x1 has {x1.shape}")
    return (
        x1 + dc.hadamard(x1, g1),
        x2 + dc.hadamard(x2, g2),
        x1 + dc.hadamard(x1, g2),
        x2 + dc.hadamard(x2, g1),
    )


def logits(x, params) -> Node:
    P, (x,) = _nodes(params, x)
    return _layer(x, P["classifier.w"], P["classifier.b"], "classifier")


def classify(x, params) -> Node:
    """softmax(W x + b)."""
    return dc.softmax(logits(x, params))


@dataclass
class PairActivations:
    """Forward record of a pair (or a batch of pairs, one per row).

    In single gate mode the ``*_other`` fields are ``None``.
    """

    x1: Node
    x2: Node
    xm: Node | None
    g1: Node
    g2: Node
    x1_self: Node
    x2_self: Node
    x1_other: Node | None
    x2_other: Node | None
    z1_self: Node
    z2_self: Node
    z1_other: Node | None
    z2_other: Node | None
    p1_self: Node
    p2_self: Node
    p1_other: Node | None
    p2_other: Node | None
    gate: str = "pair"

    def predictions(self):
        """(image, kind, logits, probs) for every populated attentive feature."""
        out = [(1, "self", self.z1_self, self.p1_self), (2, "self", self.z2_self, self.p2_self)]
        if self.gate == "pair":
            out += [(1, "other", self.z1_other, self.p1_other), (2, "other", self.z2_other, self.p2_other)]
        return out


def pair_head(x1, x2, params, mutual="mlp", gate="pair") -> PairActivations:
    """Mutual vector, gates, interaction and scoring for given features."""
    check_strategy(mutual, gate)
    P, (x1, x2) = _nodes(params, x1, x2)
    xm = mutual_vector(x1, x2, P, mutual)
    g1, g2 = gate_vectors(xm, x1, x2, P, mutual, gate)
    if gate == "single":
        x1s, x2s = x1 + dc.hadamard(x1, g1), x2 + dc.hadamard(x2, g2)
        x1o = x2o = None
    else:
        x1s, x2s, x1o, x2o = interact(x1, x2, g1, g2)
    feats = {"1_self": x1s, "2_self": x2s, "1_other": x1o, "2_other": x2o}
    z = {k: None if v is None else logits(v, P) for k, v in feats.items()}
    p = {k: None if v is None else dc.softmax(v) for k, v in z.items()}
    return PairActivations(
        x1, x2, xm, g1, g2, x1s, x2s, x1o, x2o,
        z["1_self"], z["2_self"], z["1_other"], z["2_other"],
        p["1_self"], p["2_self"], p["1_other"], p["2_other"],
        gate,
    )


def forward_pair(in1, in2, params, mutual="mlp", gate="pair") -> PairActivations:
    """Encode two raw inputs (or two aligned batches) and run the pair head."""
    P, (in1, in2) = _nodes(params, in1, in2)
    return pair_head(encode(in1, P), encode(in2, P), P, mutual, gate)


def features(X, params) -> np.ndarray:
    """Encoder output for a batch, without gradient bookkeeping kept around."""
    enc = {k: params[k] for k in ENCODER_KEYS}
    return encode(np.asarray(X, dtype=np.float64), enc).value


def predict_single(x, params) -> np.ndarray:
    """Class scores for one input with the pairwise machinery unloaded."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"predict_single takes one input vector, got shape {x.shape}")
    used = {k: params[k] for k in (*ENCODER_KEYS, "classifier.w", "classifier.b")}
    return classify(encode(x, used), used).value


def predict(X, params) -> np.ndarray:
    """Row-wise :func:`predict_single`; each row is scored on its own."""
    X = np.asarray(X, dtype=np.float64)
    return np.stack([predict_single(x, params) for x in X])


def top_k_gate_channels(g, k: int) -> list[int]:
    """Indices of the ``k`` largest gate values, descending, lower index first on ties."""
    g = np.asarray(g.value if isinstance(g, Node) else g, dtype=np.float64)
    if g.ndim != 1:
        raise DimensionError(f"expected a gate vector, got shape {g.shape}")
    if not 1 <= k <= g.size:
        raise ValueError(f"k must be in [1, {g.size}], got {k}")
    order = np.lexsort((np.arange(g.size), -g))
    return [int(i) for i in order[:k]]
