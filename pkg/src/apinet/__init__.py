"""Attentive pairwise interaction networks on a numpy reverse-mode autodiff core."""

from .diffcore import Node, Tape, grad_check
from .evalbench import evaluate
from .model import ModelDims, forward_pair, init_params, predict, predict_single
from .objective import LabelPair, batch_loss, pair_loss
from .pairing import EpisodeSpec, PairRule, construct_pairs, sample_episode
from .synthdata import SynthSpec, generate, read_dataset, write_dataset
from .trainer import TrainConfig, train

__version__ = "0.1.0"
