"""Scalar-loop reimplementation of the pair loss, for cross-checking.

Plain Python floats and nested loops only; nothing here touches the tape,
the model module or the objective module.  Parameters are accepted as
arrays and converted to nested lists up front.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass
class OracleLoss:
    total: float
    l_ce: float
    l_rk: float


def _lists(params):
    return {k: (v.tolist() if hasattr(v, "tolist") else v) for k, v in params.items()}


def _dense(x, w, b):
    out = []
    for i in range(len(w)):
        if len(w[i]) != len(x):
            raise ValueError(f"dense layer expects {len(w[i])} inputs, got {len(x)}")
        acc = b[i]
        for j in range(len(x)):
            acc += w[i][j] * x[j]
        out.append(acc)
    return out


def _relu(v):
    return [a if a > 0.0 else 0.0 for a in v]


def _sig(a):
    if a >= 0:
        return 1.0 / (1.0 + math.exp(-a))
    e = math.exp(a)
    return e / (1.0 + e)


def _softmax(v):
    m = max(v)
    e = [math.exp(a - m) for a in v]
    s = 0.0
    for a in e:
        s += a
    return [a / s for a in e]


def _log_softmax_at(v, c):
    m = max(v)
    s = 0.0
    for a in v:
        s += math.exp(a - m)
    return v[c] - m - math.log(s)


def oracle_encode(x, P):
    h = _relu(_dense(x, P["encoder.w1"], P["encoder.b1"]))
    return _dense(h, P["encoder.w2"], P["encoder.b2"])


def _mutual_mlp(v, P):
    return _dense(_relu(_dense(v, P["mutual.w1"], P["mutual.b1"])), P["mutual.w2"], P["mutual.b2"])


def oracle_pair(in1, in2, c1, c2, P, mutual, gate, lam, eps):
    """(total, l_ce, l_rk) of one pair, from raw inputs."""
    x1 = oracle_encode(list(in1), P)
    x2 = oracle_encode(list(in2), P)
    D = len(x1)
    if mutual == "individual":
        if gate == "single":
            raise ValueError("single gate mode is undefined for the individual strategy")
        t1, t2 = _mutual_mlp(x1, P), _mutual_mlp(x2, P)
        g1 = [_sig(t1[k]) for k in range(D)]
        g2 = [_sig(t2[k]) for k in range(D)]
    else:
        if mutual == "sum":
            xm = [x1[k] + x2[k] for k in range(D)]
        elif mutual == "product":
            xm = [x1[k] * x2[k] for k in range(D)]
        elif mutual == "subtract-square":
            xm = [(x1[k] - x2[k]) ** 2 for k in range(D)]
        elif mutual == "mlp":
            xm = _mutual_mlp(x1 + x2, P)
        elif mutual == "weight-attention":
            w = _softmax(_mutual_mlp(x1 + x2, P))
            xm = [w[0] * x1[k] + w[1] * x2[k] for k in range(D)]
        else:
            raise ValueError(f"unknown strategy {mutual!r}")
        if gate == "single":
            g1 = [_sig(xm[k]) for k in range(D)]
            g2 = g1
        else:
            g1 = [_sig(xm[k] * x1[k]) for k in range(D)]
            g2 = [_sig(xm[k] * x2[k]) for k in range(D)]

    def attend(x, g):
        return [x[k] + x[k] * g[k] for k in range(D)]

    W, b = P["classifier.w"], P["classifier.b"]
    feats = [(attend(x1, g1), c1, "self", 1), (attend(x2, g2), c2, "self", 2)]
    if gate == "pair":
        feats += [(attend(x1, g2), c1, "other", 1), (attend(x2, g1), c2, "other", 2)]
    l_ce = 0.0
    score = {}
    for f, c, kind, image in feats:
        z = _dense(f, W, b)
        l_ce -= _log_softmax_at(z, c)
        score[(image, kind)] = _softmax(z)[c]
    l_rk = 0.0
    if gate == "pair":
        for image in (1, 2):
            l_rk += max(0.0, score[(image, "other")] - score[(image, "self")] + eps)
        return l_ce + lam * l_rk, l_ce, l_rk
    return l_ce, l_ce, l_rk


def oracle_forward(inputs1, inputs2, labels1, labels2, params, mutual="mlp", gate="pair",
                   lam=1.0, eps=0.05) -> OracleLoss:
    """Batch-mean loss over pairs ``(inputs1[i], inputs2[i])``."""
    P = _lists(params)
    rows1 = [list(r) for r in (inputs1.tolist() if hasattr(inputs1, "tolist") else inputs1)]
    rows2 = [list(r) for r in (inputs2.tolist() if hasattr(inputs2, "tolist") else inputs2)]
    if len(rows1) != len(rows2) or len(rows1) != len(labels1) or len(labels1) != len(labels2):
        raise ValueError("pair inputs and labels must have matching lengths")
    if not rows1:
        raise ValueError("need at least one pair")
    tot = ce = rk = 0.0
    for a, b, c1, c2 in zip(rows1, rows2, labels1, labels2):
        t, e, r = oracle_pair(a, b, int(c1), int(c2), P, mutual, gate, lam, eps)
        tot += t
        ce += e
        rk += r
    n = len(rows1)
    return OracleLoss(tot / n, ce / n, rk / n)
