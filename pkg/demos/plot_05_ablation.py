"""
Ablation grids at a small budget
================================

Each grid varies one axis around the default configuration: mutual-vector
strategy, gate mode and loss terms, pair rule, or episode size. Accuracy
medians are printed next to the published numbers for the same rows. At this
scale the orderings are noisy, and nothing here checks them.
"""

import tempfile

from apinet import ablation
from apinet.synthdata import SynthSpec, generate
from apinet.trainer import TrainConfig

ds = generate(SynthSpec())
base = TrainConfig(epochs=8, freeze_epochs=1, episodes_per_epoch=10)

with tempfile.TemporaryDirectory() as out:
    results = ablation.run_tables([3, 4], base, ds, seeds=[0, 1, 2], out_dir=out)
    for cells in results.values():
        print(ablation.format_report(cells))
    print(open(f"{out}/ablation_table3.csv").read())

###############################################################################
# The episode-size grid scales the published class counts to the default of
# eight classes per episode.

for cell in ablation.ablation_grid(5, TrainConfig(), ds.n_classes):
    print(cell.axis, cell.value, "n_cl", cell.config.n_cl, "n_im", cell.config.n_im)
