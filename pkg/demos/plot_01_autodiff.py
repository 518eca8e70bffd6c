"""
Reverse-mode gradients on a tape
================================

Every operation the model uses records itself on a tape. Walking the tape
backwards gives exact gradients, which we compare against central
differences.
"""

import numpy as np

from apinet import diffcore as dc
from apinet.checks import pipeline_grad_error, random_pair_problem
from apinet.diffcore import Tape, grad_check
from apinet.model import ModelDims

###############################################################################
# A tiny graph: loss = sum(w * w) has gradient 2w.

tape = Tape()
w = tape.leaf(np.array([1.0, 2.0]), "w")
loss = dc.sum(dc.hadamard(w, w))
print("loss", loss.item(), "grad", tape.backward(loss)["w"])

###############################################################################
# The sigmoid derivative at zero is a quarter of whatever multiplies it.

tape = Tape()
z = tape.leaf(np.zeros(1), "z")
print("d/dz 3*sigmoid(z) at 0:", tape.backward(dc.scale(dc.sum(dc.sigmoid(z)), 3.0))["z"])

###############################################################################
# ``grad_check`` takes a function of a parameter dict. It must return a node
# built by watching those parameters on a fresh tape.

rng = np.random.default_rng(0)
params = {"w": rng.normal(size=(3, 4)), "b": rng.normal(size=3)}
x = rng.normal(size=4)


def softmax_loss(p):
    P = Tape().watch(p)
    return dc.sum(dc.log_softmax(dc.linear(x, P["w"], P["b"])) * np.arange(3.0))


print("linear + log-softmax, max relative error:", grad_check(softmax_loss, params))

###############################################################################
# The whole pair pipeline, from raw inputs to the combined loss. The problem
# generator redraws until no ReLU or hinge input sits within 1e-3 of its kink,
# where finite differences would measure a one-sided slope.

dims = ModelDims(d_in=8, d=12, d_h=4, enc_hidden=12, n_classes=5)
for mutual in ("sum", "mlp", "weight-attention", "individual"):
    prob = random_pair_problem(dims, mutual, n_pairs=4, seed=1)
    print(f"{mutual:>17}: {pipeline_grad_error(prob, mutual, 'pair', 1.0, 0.05):.2e}")

###############################################################################
# Very small gradient coordinates are where the relative error is weakest.
# The loss is only known to about one ulp, so at h = 1e-5 the difference
# quotient carries an absolute error near 1e-11. Against a true gradient of
# 1e-7 that is already a 1e-4 relative error, and a larger step shrinks it.

prob = random_pair_problem(dims, "weight-attention", n_pairs=4, seed=14, lam=0.0)
for h in (1e-5, 1e-4):
    print(f"h={h:g}: {pipeline_grad_error(prob, 'weight-attention', 'pair', 0.0, 0.05, h):.2e}")
