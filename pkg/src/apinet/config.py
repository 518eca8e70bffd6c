"""Flat ``key = value`` run configuration.

One setting per line, ``#`` starts a comment.  Keys are the fields of
:class:`~apinet.synthdata.SynthSpec` (its ``seed`` is spelled
``data_seed``), of :class:`~apinet.trainer.TrainConfig`, plus a few
command options listed in ``EXTRA_DEFAULTS``.  Unknown keys are errors;
missing keys take their defaults.
"""

from __future__ import annotations

import logging
from dataclasses import fields
from pathlib import Path

from .errors import ConfigError
from .synthdata import SynthSpec
from .trainer import TrainConfig

log = logging.getLogger(__name__)

EXTRA_DEFAULTS = {
    "ablation_tables": "2,3,4,5",
    "ablation_seeds": 3,
    "gradcheck_pairs": 4,
    "gradcheck_h": 1e-5,
}


def _synth_key(name):
    return "data_seed" if name == "seed" else name


def default_values() -> dict:
    values = {_synth_key(f.name): f.default for f in fields(SynthSpec)}
    values.update({f.name: f.default for f in fields(TrainConfig)})
    values.update(EXTRA_DEFAULTS)
    return values


DEFAULTS = default_values()


def _convert(key, text, lineno):
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            return text.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {text!r} for {key} "
                          f"(expected {type(default).__name__})") from None
    return text


class RunConfig:
    """Effective settings: parsed values over defaults."""

    def __init__(self, values: dict | None = None):
        values = dict(values or {})
        unknown = sorted(set(values) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown key {unknown[0]!r}")
        self.explicit = set(values)
        self.values = {**DEFAULTS, **values}
        # validate eagerly so errors surface at load time
        self.synth_spec()
        self.train_config()

    def __getitem__(self, key):
        return self.values[key]

    def synth_spec(self) -> SynthSpec:
        return SynthSpec(**{f.name: self.values[_synth_key(f.name)] for f in fields(SynthSpec)})

    def train_config(self) -> TrainConfig:
        return TrainConfig(**{f.name: self.values[f.name] for f in fields(TrainConfig)})

    def echo_defaults(self, logger=log):
        for key in DEFAULTS:
            if key not in self.explicit:
                logger.info("default %s = %s", key, self.values[key])

    def dumps(self) -> str:
        lines = ["# effective configuration (defaults applied)"]
        lines += [f"{k} = {_fmt(v)}" for k, v in self.values.items()]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def parse_config(text: str) -> RunConfig:
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        values[key] = _convert(key, value, lineno)
        lines[key] = lineno
    try:
        return RunConfig(values)
    except ConfigError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(Path(path).read_text())
