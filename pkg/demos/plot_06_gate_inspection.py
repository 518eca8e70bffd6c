"""
Which channels do the gates open?
=================================

After training, the gates of a confusable pair (two subclasses of one
superclass) are compared with those of an easy pair. The command-line
equivalent is ``apinet inspect-gates``.
"""

import numpy as np

from apinet.model import forward_pair, top_k_gate_channels
from apinet.synthdata import SynthSpec, generate
from apinet.trainer import TrainConfig, train

ds = generate(SynthSpec())
params, _ = train(TrainConfig(epochs=15, freeze_epochs=2), ds)
X, y = ds.test
n_sub = ds.provenance.n_sub

a = int(np.flatnonzero(y == 0)[0])
hard = int(np.flatnonzero(y == 1)[0])        # same superclass, different subclass
easy = int(np.flatnonzero(y == n_sub)[0])    # different superclass

for name, b in (("confusable", hard), ("easy", easy)):
    acts = forward_pair(X[a], X[b], params)
    print(f"{name:>10} pair {a}:{b} labels {y[a]}:{y[b]}")
    print("   top-5 g1", top_k_gate_channels(acts.g1, 5), " top-5 g2", top_k_gate_channels(acts.g2, 5))
    print("   mean |g1 - g2|", float(np.abs(acts.g1.value - acts.g2.value).mean()))
