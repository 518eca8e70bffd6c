"""
Pairwise training against a plain classifier
============================================

Both runs use the same encoder and classifier, initial weights, episodes and
budget. The baseline trains on cross entropy of single samples. The pair run
trains through the interaction head and is scored with the head removed.
A shortened schedule keeps this demo under a minute; the acceptance suite
uses the full default schedule and five seeds.
"""

import numpy as np

from apinet.synthdata import SynthSpec, generate, nearest_centroid_accuracy
from apinet.trainer import TrainConfig, train

ds = generate(SynthSpec())
print(f"{ds.n_classes} classes, nearest-centroid accuracy {nearest_centroid_accuracy(ds):.3f}")

cfg = TrainConfig(epochs=30, freeze_epochs=3)
for seed in range(2):
    api = train(cfg.replace(seed=seed), ds)[1]
    base = train(cfg.replace(seed=seed, method="baseline"), ds)[1]
    print(f"seed {seed}: pair-trained {api[-1].test_acc:.3f}  baseline {base[-1].test_acc:.3f}")

###############################################################################
# Per-epoch metrics of the last pair run.

for m in api[::5]:
    print(f"epoch {m.epoch:2d}  loss {m.loss:7.3f}  l_rk {m.l_rk:.4f}  test {m.test_acc:.3f}  lr {m.lr:.4f}")
