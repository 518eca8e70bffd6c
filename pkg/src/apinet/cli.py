"""Command-line entry point: ``python -m apinet <command>``.

Exit codes: 0 success, 1 validation error, 2 gradient check above threshold.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import ablation
from .checks import pipeline_grad_error, random_pair_problem
from .config import load_config
from .errors import ConfigError, FormatError, GradCheckError
from .evalbench import evaluate
from .model import ModelDims, forward_pair, top_k_gate_channels
from .params_io import load_params, save_params
from .synthdata import TEST, TRAIN, generate, read_dataset, write_dataset
from .trainer import train, write_metrics_csv

log = logging.getLogger("apinet")

GRADCHECK_THRESHOLD = 1e-4


def _meta(cfg, dims: ModelDims):
    return {
        "method": cfg.method, "mutual": cfg.mutual, "gate": cfg.gate,
        "d_in": dims.d_in, "d": dims.d, "d_h": dims.d_h,
        "enc_hidden": dims.enc_hidden, "n_classes": dims.n_classes,
    }


def cmd_gen_data(args):
    rc = load_config(args.config)
    rc.echo_defaults()
    ds = generate(rc.synth_spec())
    write_dataset(args.out, ds)
    print(f"wrote {ds.X.shape[0]} samples ({ds.n_classes} classes) to {args.out}")
    return 0


def cmd_train(args):
    rc = load_config(args.config)
    rc.echo_defaults()
    cfg = rc.train_config()
    ds = read_dataset(args.data)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rc.write(out / "config.txt")
    params, metrics = train(cfg, ds)
    save_params(out / "params.bin", params, _meta(cfg, cfg.dims(ds)))
    write_metrics_csv(out / "metrics.csv", metrics)
    if metrics:
        print(f"final test accuracy {metrics[-1].test_acc:.4f}")
    return 0


def cmd_eval(args):
    params, _meta = load_params(args.params)
    ds = read_dataset(args.data)
    X, y = ds.part(TEST if args.split == "test" else TRAIN)
    print(f"{evaluate(params, X, y):.6f}")
    return 0


def cmd_ablate(args):
    rc = load_config(args.config)
    rc.echo_defaults()
    ds = read_dataset(args.data)
    tables = [int(t) for t in (args.tables or rc["ablation_tables"]).split(",") if t.strip()]
    seeds = list(range(rc["ablation_seeds"]))
    results = ablation.run_tables(tables, rc.train_config(), ds, seeds, args.out_dir)
    for cells in results.values():
        sys.stdout.write(ablation.format_report(cells))
    return 0


def cmd_gradcheck(args):
    rc = load_config(args.config)
    rc.echo_defaults()
    cfg = rc.train_config()
    dims = ModelDims(rc["d_in"], cfg.d, cfg.d_h, cfg.enc_hidden, rc["n_super"] * rc["n_sub"])
    prob = random_pair_problem(dims, cfg.mutual, rc["gradcheck_pairs"], cfg.seed, cfg.gate, cfg.lam, cfg.eps)
    err = pipeline_grad_error(prob, cfg.mutual, cfg.gate, cfg.lam, cfg.eps, rc["gradcheck_h"])
    print(f"max relative error {err:.3e}")
    return 0 if err < GRADCHECK_THRESHOLD else 2


def _parse_pairs(text):
    pairs = []
    for item in text.split(","):
        a, sep, b = item.partition(":")
        if not sep:
            raise ConfigError(f"bad pair {item!r}; use anchor:partner")
        pairs.append((int(a), int(b)))
    return pairs


def cmd_inspect_gates(args):
    params, meta = load_params(args.params)
    if meta.get("method", "api") != "api":
        raise ConfigError("parameters come from a baseline run; there are no gates to inspect")
    ds = read_dataset(args.data)
    X, y = ds.part(TEST if args.split == "test" else TRAIN)
    for a, b in _parse_pairs(args.pairs):
        if not (0 <= a < len(y) and 0 <= b < len(y)):
            raise ConfigError(f"sample id out of range in pair {a}:{b} (split has {len(y)} samples)")
        acts = forward_pair(X[a], X[b], params, meta["mutual"], meta["gate"])
        g1 = top_k_gate_channels(acts.g1.value, args.k)
        g2 = top_k_gate_channels(acts.g2.value, args.k)
        print(f"pair {a}:{b} labels {y[a]}:{y[b]} g1 {' '.join(map(str, g1))} g2 {' '.join(map(str, g2))}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="apinet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-data", help="generate a synthetic dataset file")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("train", help="train and write params.bin, metrics.csv, config.txt")
    s.add_argument("--config")
    s.add_argument("--data", required=True)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="unloaded single-input accuracy")
    s.add_argument("--params", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--split", choices=("train", "test"), default="test")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("ablate", help="run ablation table analogs")
    s.add_argument("--config")
    s.add_argument("--data", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--tables", help="comma list, default from config")
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("gradcheck", help="finite-difference check of the full pair loss")
    s.add_argument("--config")
    s.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("inspect-gates", help="top-k gate channels for sample pairs")
    s.add_argument("--params", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--pairs", required=True, help="anchor:partner[,anchor:partner...] sample ids")
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--split", choices=("train", "test"), default="test")
    s.set_defaults(func=cmd_inspect_gates)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FormatError, GradCheckError, FileNotFoundError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
