"""
Building pairs inside an episode
================================

An episode holds a few classes with a few samples each. Every sample anchors
one pair per active selector. An intra partner shares its class and an inter
partner does not. ``S`` picks the closest candidate and ``D`` the farthest.
"""

import numpy as np

from apinet.model import ModelDims, features, init_params
from apinet.pairing import ALL_RULES, EpisodeSpec, PairRule, construct_pairs, pairwise_distances, sample_episode
from apinet.synthdata import SynthSpec, generate

###############################################################################
# The four-point example: two tight classes far apart.

F = np.array([[0.0, 0], [0, 1], [10, 0], [10, 2]])
labels = np.array([0, 0, 1, 1])
print(pairwise_distances(F))
for p in construct_pairs(F, labels, PairRule.parse("SS")):
    print(p)

###############################################################################
# A real episode. Distances are measured on encoder features, so the pairs
# change as the encoder trains.

ds = generate(SynthSpec())
Xtr, ytr = ds.train
params = init_params(ModelDims(d_in=ds.d_in, n_classes=ds.n_classes), None, np.random.default_rng(0))
ep = sample_episode(ytr, EpisodeSpec(n_cl=4, n_im=3), np.random.default_rng(1))
feats = features(Xtr[ep.rows], params)
print("classes", ep.classes)

for rule in ALL_RULES:
    pairs = construct_pairs(feats, ep.labels, rule, np.random.default_rng(2))
    kinds = [p.kind for p in pairs]
    print(f"{str(rule):>6}: {len(pairs):2d} pairs, {kinds.count('intra'):2d} intra, {kinds.count('inter'):2d} inter")

###############################################################################
# Hard inter pairs usually come from the same superclass: the subclasses of
# one superclass sit close together.

n_sub = ds.provenance.n_sub
pairs = construct_pairs(feats, ep.labels, PairRule.parse("-S"))
same_super = np.mean([ep.labels[p.anchor] // n_sub == ep.labels[p.partner] // n_sub for p in pairs])
print(f"closest inter partner shares the superclass in {same_super:.0%} of pairs")
