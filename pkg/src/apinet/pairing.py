"""Episode sampling and intra/inter pair construction.

A pair rule is written as two characters, intra then inter, each ``S``
(most similar partner), ``D`` (most dissimilar) or ``-`` (not used), e.g.
``"SS"`` or ``"-D"``; ``"random"`` draws partners uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PairRule:
    intra: str | None = "S"
    inter: str | None = "S"
    random: bool = False

    def __post_init__(self):
        if self.random:
            if self.intra is not None or self.inter is not None:
                raise ConfigError("the random rule takes no intra/inter selectors")
            return
        for side in (self.intra, self.inter):
            if side not in ("S", "D", None):
                raise ConfigError(f"pair selector must be S, D or none, got {side!r}")
        if self.intra is None and self.inter is None:
            raise ConfigError("at least one of intra/inter must be active")

    @classmethod
    def parse(cls, text: str) -> "PairRule":
        text = text.strip()
        if text.lower() == "random":
            return cls(None, None, random=True)
        if len(text) != 2:
            raise ConfigError(f"bad pair rule {text!r}; use e.g. 'SS', '-D' or 'random'")
        intra, inter = (None if ch == "-" else ch.upper() for ch in text)
        return cls(intra, inter)

    def __str__(self):
        if self.random:
            return "random"
        return f"{self.intra or '-'}{self.inter or '-'}"

    @property
    def n_active(self) -> int:
        return 2 if self.random else (self.intra is not None) + (self.inter is not None)


# row order of the pair-construction ablation table
ALL_RULES = tuple(PairRule.parse(r) for r in ("random", "-D", "-S", "D-", "S-", "DD", "SD", "DS", "SS"))


@dataclass(frozen=True)
class EpisodeSpec:
    n_cl: int = 8
    n_im: int = 4
    rule: PairRule = PairRule()

    def __post_init__(self):
        if self.n_cl < 2:
            raise ConfigError(f"n_cl must be >= 2, got {self.n_cl}")
        if self.n_im < 1:
            raise ConfigError(f"n_im must be >= 1, got {self.n_im}")
        if self.rule.intra is not None and self.n_im < 2:
            raise ConfigError("intra pairs need n_im >= 2")

    @property
    def n_pairs(self) -> int:
        return self.rule.n_active * self.n_cl * self.n_im


class Pair(NamedTuple):
    anchor: int
    partner: int
    kind: str  # "intra" or "inter"


@dataclass
class Episode:
    """Sampled batch: ``indices[k]`` are dataset rows for ``classes[k]``.

    Episode positions run class-major, so position ``b`` holds
    ``indices.reshape(-1)[b]`` with label ``labels[b]``; pairs refer to
    positions, not dataset rows.
    """

    classes: np.ndarray
    indices: np.ndarray
    features: np.ndarray | None = None
    pairs: list[Pair] | None = None

    @property
    def rows(self) -> np.ndarray:
        return self.indices.reshape(-1)

    @property
    def labels(self) -> np.ndarray:
        return np.repeat(self.classes, self.indices.shape[1])


def sample_episode(labels, spec: EpisodeSpec, rng) -> Episode:
    """Draw ``n_cl`` classes, then ``n_im`` samples per class, without replacement.

    ``labels`` are the class labels of the candidate pool (typically the
    training split); returned indices point into that pool.
    """
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < spec.n_cl:
        raise ConfigError(f"need {spec.n_cl} classes, dataset has {classes.size}")
    for c in classes:
        count = int(np.count_nonzero(labels == c))
        if count < spec.n_im:
            raise ConfigError(f"class {int(c)} has {count} samples, episode needs {spec.n_im}")
    chosen = rng.choice(classes, size=spec.n_cl, replace=False)
    rows = [rng.choice(np.flatnonzero(labels == c), size=spec.n_im, replace=False) for c in chosen]
    return Episode(np.asarray(chosen), np.stack(rows))


def pairwise_distances(features) -> np.ndarray:
    """Squared Euclidean distances between rows (exactly symmetric, zero diagonal)."""
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 2:
        raise ValueError(f"need a matrix with at least two rows, got shape {F.shape}")
    dist = np.zeros((F.shape[0], F.shape[0]))
    # accumulate channel by channel so the summation order is fixed
    for k in range(F.shape[1]):
        diff = F[:, k, None] - F[None, :, k]
        dist += diff * diff
    return dist


def _select(dist_row, eligible, mode):
    # np.argmin/argmax return the first hit, i.e. the lowest index on ties
    if mode == "S":
        return int(np.argmin(np.where(eligible, dist_row, np.inf)))
    return int(np.argmax(np.where(eligible, dist_row, -np.inf)))


def construct_pairs(features, labels, rule: PairRule, rng=None) -> list[Pair]:
    """Build pairs for one episode.

    Every position anchors one pair per active selector (intra pairs first,
    then inter pairs).  The random rule gives each anchor two distinct
    uniformly drawn partners.
    """
    labels = np.asarray(labels)
    B = labels.size
    if rule.random:
        if rng is None:
            raise ValueError("the random rule needs an rng")
        if B < 3:
            raise ConfigError("the random rule needs at least 3 samples")
        pairs = []
        for a in range(B):
            others = np.delete(np.arange(B), a)
            for p in rng.choice(others, size=2, replace=False):
                p = int(p)
                pairs.append(Pair(a, p, "intra" if labels[p] == labels[a] else "inter"))
        return pairs

    dist = pairwise_distances(features)
    same = labels[:, None] == labels[None, :]
    not_self = ~np.eye(B, dtype=bool)
    pairs = []
    for kind, mode, eligible in (("intra", rule.intra, same & not_self), ("inter", rule.inter, ~same)):
        if mode is None:
            continue
        for a in range(B):
            if not eligible[a].any():
                raise ConfigError(f"position {a} has no eligible {kind} partner")
            pairs.append(Pair(a, _select(dist[a], eligible[a], mode), kind))
    return pairs
