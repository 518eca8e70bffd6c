"""SGD training loop for API models and the matched single-image baseline."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import diffcore as dc
from .diffcore import Tape
from .evalbench import evaluate
from .errors import ConfigError, DimensionError, TrainingError
from .model import ENCODER_KEYS, ModelDims, check_strategy, encode, features, init_params, logits, pair_head
from .objective import LabelPair, pair_loss
from .pairing import EpisodeSpec, PairRule, construct_pairs, sample_episode
from .synthdata import Dataset

log = logging.getLogger(__name__)

METRIC_FIELDS = ("epoch", "loss", "l_ce", "l_rk", "train_acc", "test_acc", "lr")


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1.0
    eps: float = 0.05
    n_cl: int = 8
    n_im: int = 4
    epochs: int = 60
    freeze_epochs: int = 5
    lr0: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0005
    mutual: str = "mlp"
    gate: str = "pair"
    pair_rule: str = "SS"
    episodes_per_epoch: int = 20
    seed: int = 0
    method: str = "api"  # "api" or "baseline"
    d: int = 32
    d_h: int = 8
    enc_hidden: int = 32

    def __post_init__(self):
        if not self.lr0 > 0:
            raise ConfigError(f"lr0 must be > 0, got {self.lr0}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")
        if self.lam < 0:
            raise ConfigError("lam must be >= 0")
        if self.epochs < 0 or self.episodes_per_epoch < 1:
            raise ConfigError("epochs must be >= 0 and episodes_per_epoch >= 1")
        if self.freeze_epochs < 0 or (self.epochs > 0 and self.freeze_epochs >= self.epochs):
            raise ConfigError(f"need 0 <= freeze_epochs < epochs, got {self.freeze_epochs} and {self.epochs}")
        if self.method not in ("api", "baseline"):
            raise ConfigError(f"method must be 'api' or 'baseline', got {self.method!r}")
        if self.method == "api":
            check_strategy(self.mutual, self.gate)
        PairRule.parse(self.pair_rule)

    def replace(self, **changes) -> "TrainConfig":
        return TrainConfig(**{**asdict(self), **changes})

    @property
    def episode_spec(self) -> EpisodeSpec:
        return EpisodeSpec(self.n_cl, self.n_im, PairRule.parse(self.pair_rule))

    def dims(self, dataset: Dataset) -> ModelDims:
        return ModelDims(dataset.d_in, self.d, self.d_h, self.enc_hidden, dataset.n_classes)


@dataclass
class MetricRecord:
    epoch: int
    loss: float
    l_ce: float
    l_rk: float
    train_acc: float
    test_acc: float
    lr: float


def cosine_lr(t: int, total: int, lr0: float) -> float:
    if total < 1:
        raise ValueError("total epochs must be >= 1")
    if not 0 <= t <= total:
        raise ValueError(f"epoch {t} outside [0, {total}]")
    return max(0.0, 0.5 * lr0 * (1.0 + math.cos(math.pi * t / total)))


def sgd_step(params, grads, lr, momentum, weight_decay, state, frozen=()):
    """One momentum-SGD update; returns new (params, state) dicts.

    v <- momentum * v + grad + weight_decay * param;  param <- param - lr * v.
    Names in ``frozen`` keep both value and velocity.
    """
    new_params, new_state = dict(params), dict(state)
    for name, p in params.items():
        if name in frozen:
            continue
        g = grads[name]
        if g.shape != p.shape:
            raise DimensionError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        v = momentum * state.get(name, np.zeros_like(p)) + g + weight_decay * p
        new_state[name] = v
        new_params[name] = p - lr * v
    return new_params, new_state


def init_state(params):
    return {k: np.zeros_like(v) for k, v in params.items()}


def episode_loss(params, X, y, pairs, config: TrainConfig, n_classes):
    """Mean pair loss of one episode on a fresh tape: (loss node, mean l_ce, mean l_rk)."""
    tape = Tape()
    P = tape.watch(params)
    F = encode(X, P)
    if config.method == "baseline":
        ce = -dc.pick(dc.log_softmax(logits(F, P)), y)
        loss = dc.mean(ce)
        return loss, float(loss.value), 0.0
    anchors = np.array([p.anchor for p in pairs])
    partners = np.array([p.partner for p in pairs])
    acts = pair_head(dc.take_rows(F, anchors), dc.take_rows(F, partners), P, config.mutual, config.gate)
    br = pair_loss(acts, LabelPair(y[anchors], y[partners], n_classes), config.lam, config.eps)
    loss = dc.mean(br.total)
    return loss, float(br.l_ce.value.mean()), float(br.l_rk.value.mean())


def train(config: TrainConfig, dataset: Dataset, callback=None):
    """Train from scratch; returns (params, list of MetricRecord).

    Deterministic in ``config.seed``: initialisation, episode sampling and
    random pairing use separate streams, so an API run and a baseline run
    with the same seed see the same episodes and share encoder/classifier
    initial weights.
    """
    dims = config.dims(dataset)
    init_rng = np.random.default_rng([config.seed, 0])
    episode_rng = np.random.default_rng([config.seed, 1])
    pair_rng = np.random.default_rng([config.seed, 2])
    params = init_params(dims, config.mutual if config.method == "api" else None, init_rng)
    state = init_state(params)
    Xtr, ytr = dataset.train
    Xte, yte = dataset.test
    spec = config.episode_spec
    metrics = []
    for epoch in range(config.epochs):
        lr = cosine_lr(epoch, config.epochs, config.lr0)
        frozen = ENCODER_KEYS if epoch < config.freeze_epochs else ()
        losses, ces, rks = [], [], []
        for episode in range(config.episodes_per_epoch):
            ep = sample_episode(ytr, spec, episode_rng)
            X, y = Xtr[ep.rows], ytr[ep.rows]
            pairs = None
            if config.method == "api":
                pairs = construct_pairs(features(X, params), y, spec.rule, pair_rng)
            loss, ce, rk = episode_loss(params, X, y, pairs, config, dims.n_classes)
            if not math.isfinite(float(loss.value)):
                raise TrainingError("non-finite loss", epoch, episode)
            grads = loss.tape.backward(loss, wrt=list(params))
            params, state = sgd_step(params, grads, lr, config.momentum, config.weight_decay, state, frozen)
            losses.append(float(loss.value))
            ces.append(ce)
            rks.append(rk)
        rec = MetricRecord(epoch, float(np.mean(losses)), float(np.mean(ces)), float(np.mean(rks)),
                           evaluate(params, Xtr, ytr), evaluate(params, Xte, yte), lr)
        log.debug("epoch %d loss %.4f test_acc %.4f", epoch, rec.loss, rec.test_acc)
        metrics.append(rec)
        if callback is not None:
            callback(rec, params)
    return params, metrics


def write_metrics_csv(path, metrics) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(METRIC_FIELDS)
        for m in metrics:
            w.writerow([m.epoch] + [format(getattr(m, k), ".17g") for k in METRIC_FIELDS[1:]])


def read_metrics_csv(path) -> list[MetricRecord]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    types = {f.name: f.type for f in fields(MetricRecord)}
    return [MetricRecord(**{k: int(v) if types[k] in (int, "int") else float(v) for k, v in r.items()}) for r in rows]
