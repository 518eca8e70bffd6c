"""
One pair through the interaction head
=====================================

Two inputs are encoded, a mutual vector summarises them, gates pick out
channels, and each feature is scored twice: once with its own gate and once
with its partner's.
"""

import numpy as np

from apinet.model import ModelDims, forward_pair, init_params, predict_single, top_k_gate_channels
from apinet.objective import LabelPair, pair_loss

dims = ModelDims(d_in=6, d=8, d_h=4, enc_hidden=8, n_classes=4)
params = init_params(dims, "mlp", np.random.default_rng(0))
rng = np.random.default_rng(1)
in1, in2 = rng.normal(size=6), rng.normal(size=6)

acts = forward_pair(in1, in2, params, mutual="mlp", gate="pair")
np.set_printoptions(precision=3, suppress=True)
print("mutual vector", acts.xm.value)
print("gate 1       ", acts.g1.value)
print("gate 2       ", acts.g2.value)

###############################################################################
# Four score vectors come out. Self scores use the image's own gate; other
# scores use the partner's.

for image, kind, _, p in acts.predictions():
    print(f"p{image}_{kind:<5}", p.value)

###############################################################################
# Untrained gates sit close to 0.5, so self and other scores agree to the
# printed precision. Their gap is what the ranking term works on.

print("p1_self - p1_other", [f"{v:.1e}" for v in acts.p1_self.value - acts.p1_other.value])

###############################################################################
# Cross entropy covers all four scores. The ranking hinge asks each self score
# to beat the matching other score on the true class by the margin.

br = pair_loss(acts, LabelPair(1, 3, dims.n_classes), lam=1.0, margin=0.05)
print("l_ce", br.l_ce.value[0], "l_rk", br.l_rk.value[0], "total", br.total.value[0])

###############################################################################
# Feeding the same input twice makes the two gates equal. Self and other then
# coincide, and each image pays exactly the margin.

same = forward_pair(in1, in1, params)
print("equal gates:", np.array_equal(same.g1.value, same.g2.value),
      "l_rk:", pair_loss(same, LabelPair(0, 0, 4)).l_rk.value[0])

###############################################################################
# At test time the pair machinery is dropped and a single input is scored
# through the encoder and the shared classifier.

print("single-input scores", predict_single(in1, params))
print("top-3 channels of gate 1:", top_k_gate_channels(acts.g1, 3))
