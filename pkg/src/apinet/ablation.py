"""Ablation grids over mutual strategy, gating, loss terms, pairing and batch size.

Each table analog is a list of :class:`GridCell`; :func:`run_ablation`
trains every cell for every seed and records unloaded test accuracy.
Accuracy orderings are reported alongside the published CUB-200-2011
numbers for the same rows; nothing here asserts an ordering.
"""

from __future__ import annotations

import csv
import logging
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .model import MUTUAL_STRATEGIES
from .pairing import ALL_RULES
from .trainer import TrainConfig, train

log = logging.getLogger(__name__)

TABLES = (2, 3, 4, 5)
CSV_HEADER = ("table", "axis", "value", "seed", "test_acc")

# published CUB-200-2011 accuracies (%) for the matching rows
REFERENCE = {
    (2, "mutual", "individual"): 87.9, (2, "mutual", "subtract-square"): 88.3,
    (2, "mutual", "sum"): 88.5, (2, "mutual", "product"): 88.4,
    (2, "mutual", "weight-attention"): 88.4, (2, "mutual", "mlp"): 88.6,
    (3, "gate", "single"): 87.7, (3, "gate", "pair"): 88.6,
    (3, "loss", "ce"): 88.1, (3, "loss", "ce+rk"): 88.6,
    (4, "pair_rule", "random"): 86.4, (4, "pair_rule", "-D"): 85.4, (4, "pair_rule", "-S"): 87.2,
    (4, "pair_rule", "D-"): 87.1, (4, "pair_rule", "S-"): 87.6, (4, "pair_rule", "DD"): 87.0,
    (4, "pair_rule", "SD"): 87.4, (4, "pair_rule", "DS"): 88.3, (4, "pair_rule", "SS"): 88.6,
    (5, "n_cl", "small"): 83.5, (5, "n_cl", "medium"): 87.0, (5, "n_cl", "full"): 88.6,
    (5, "n_im", "2"): 88.1, (5, "n_im", "3"): 88.2, (5, "n_im", "4"): 88.6,
    (5, "n_cl,n_im", "wide"): 87.7, (5, "n_cl,n_im", "base"): 88.6, (5, "n_cl,n_im", "deep"): 88.2,
}


@dataclass
class GridCell:
    table: int
    axis: str
    value: str
    config: TrainConfig
    ref_key: str | None = None


@dataclass
class AblationCell:
    table: int
    axis: str
    value: str
    config: TrainConfig
    seeds: list = field(default_factory=list)
    accuracies: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    ref_key: str | None = None

    @property
    def median(self) -> float:
        """Order-statistic (lower) median of the successful seeds."""
        if not self.accuracies:
            return float("nan")
        return statistics.median_low(self.accuracies)

    @property
    def reference(self):
        return REFERENCE.get((self.table, self.axis, self.ref_key or self.value))


def _scaled_n_cl(base, frac, n_classes):
    return max(2, min(n_classes, round(base.n_cl * frac)))


def ablation_grid(table: int, base: TrainConfig, n_classes: int | None = None) -> list[GridCell]:
    """Cells of one table analog, in the published row order.

    Batch-size rows scale the published class counts (10/20/30 and
    24/30/40 around 30) to ``base.n_cl``.
    """
    n_classes = n_classes or 10**9
    if table == 2:
        return [GridCell(2, "mutual", m, base.replace(mutual=m, gate="pair")) for m in MUTUAL_STRATEGIES]
    if table == 3:
        lam = base.lam if base.lam > 0 else 1.0
        mutual = "mlp" if base.mutual == "individual" else base.mutual
        return [
            GridCell(3, "gate", "single", base.replace(gate="single", mutual=mutual)),
            GridCell(3, "gate", "pair", base.replace(gate="pair", mutual=mutual)),
            GridCell(3, "loss", "ce", base.replace(gate="pair", lam=0.0)),
            GridCell(3, "loss", "ce+rk", base.replace(gate="pair", lam=lam)),
        ]
    if table == 4:
        return [GridCell(4, "pair_rule", str(r), base.replace(pair_rule=str(r))) for r in ALL_RULES]
    if table == 5:
        cells = []
        for frac, key in ((1 / 3, "small"), (2 / 3, "medium"), (1.0, "full")):
            n = _scaled_n_cl(base, frac, n_classes)
            cells.append(GridCell(5, "n_cl", str(n), base.replace(n_cl=n, n_im=4), key))
        for n_im in (2, 3, 4):
            cells.append(GridCell(5, "n_im", str(n_im), base.replace(n_im=n_im)))
        for frac, n_im, key in ((24 / 30, 5, "wide"), (1.0, 4, "base"), (40 / 30, 3, "deep")):
            n = _scaled_n_cl(base, frac, n_classes)
            cells.append(GridCell(5, "n_cl,n_im", f"{n}x{n_im}", base.replace(n_cl=n, n_im=n_im), key))
        return cells
    raise ValueError(f"unknown ablation table {table}; expected one of {TABLES}")


def run_ablation(grid, dataset, seeds) -> list[AblationCell]:
    """Train each cell for each seed; a failing (cell, seed) is recorded and skipped."""
    cells = []
    for g in grid:
        cell = AblationCell(g.table, g.axis, g.value, g.config, ref_key=g.ref_key)
        for seed in seeds:
            try:
                _, metrics = train(g.config.replace(seed=seed), dataset)
                acc = metrics[-1].test_acc if metrics else float("nan")
            except Exception as exc:  # keep the remaining cells running
                log.warning("table %s %s=%s seed %s failed: %s", g.table, g.axis, g.value, seed, exc)
                cell.errors[seed] = str(exc)
                continue
            cell.seeds.append(seed)
            cell.accuracies.append(acc)
        cells.append(cell)
    return cells


def write_ablation_csv(cells, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for c in cells:
            for seed, acc in zip(c.seeds, c.accuracies):
                w.writerow([c.table, c.axis, c.value, seed, format(acc, ".17g")])
            for seed, _err in c.errors.items():
                w.writerow([c.table, c.axis, c.value, seed, "nan"])
            w.writerow([c.table, c.axis, c.value, "median", format(c.median, ".17g")])


def format_report(cells) -> str:
    lines = ["table  axis        value              median_acc  published_acc"]
    for c in cells:
        ref = "" if c.reference is None else f"{c.reference:.1f}"
        lines.append(f"{c.table:<6} {c.axis:<11} {c.value:<18} {c.median:<11.4f} {ref}")
    return "\n".join(lines) + "\n"


def run_tables(tables, base: TrainConfig, dataset, seeds, out_dir=None) -> dict[int, list[AblationCell]]:
    """Run several table analogs; with ``out_dir`` write ``ablation_table<N>.csv`` and a summary."""
    results = {}
    for t in tables:
        log.info("ablation table %d", t)
        results[t] = run_ablation(ablation_grid(t, base, dataset.n_classes), dataset, seeds)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for t, cells in results.items():
            write_ablation_csv(cells, out / f"ablation_table{t}.csv")
        (out / "ablation_summary.txt").write_text("".join(format_report(c) for c in results.values()))
    return results
