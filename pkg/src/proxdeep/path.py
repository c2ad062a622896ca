"""Regularisation path over the l1 weight ``gamma_w`` (and the penalty ``mu``).

Within a ``mu`` row the fits run in ascending ``gamma_w`` order, each one
warm-started from the previous fit's weights and split state. Rows and
replicate seeds are independent and may run concurrently.
"""
import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .admm import fit
from .network import predict_proba
from .objectives import classify_rate
from .penalties import PenaltySpec

log = logging.getLogger(__name__)

TABLE_COLUMNS = ("pct_nonzero_w", "gamma_w", "mu_l", "train_rate", "test_rate")


@dataclass
class PathSpec:
    gamma_grid: tuple
    mu_grid: tuple
    warm_start: bool = True
    replicate_seeds: tuple = (0, 1, 2, 3, 4)
    family: str = "l1"
    penalize_bias: bool = True

    def __post_init__(self):
        self.gamma_grid = tuple(float(g) for g in self.gamma_grid)
        self.mu_grid = tuple(float(m) for m in self.mu_grid)
        self.replicate_seeds = tuple(int(s) for s in self.replicate_seeds)
        if not self.gamma_grid or not self.mu_grid or not self.replicate_seeds:
            raise ValueError("gamma_grid, mu_grid and replicate_seeds must be non-empty")
        if any(g < 0 for g in self.gamma_grid):
            raise ValueError("gamma_grid must be nonnegative")
        if list(self.gamma_grid) != sorted(self.gamma_grid):
            raise ValueError("gamma_grid must be ascending")
        if any(m <= 0 for m in self.mu_grid):
            raise ValueError("mu_grid must be positive")


@dataclass
class PathReport:
    spec: PathSpec
    cells: list = field(default_factory=list)     # one per (mu, gamma, seed)

    def summary(self):
        """Seed-averaged rows in (mu, gamma) order; failed fits are skipped."""
        rows = []
        for mu in self.spec.mu_grid:
            for g in self.spec.gamma_grid:
                ok = [c for c in self.cells
                      if c["mu_l"] == mu and c["gamma_w"] == g and not c["failed"]]
                n_cells = sum(1 for c in self.cells if c["mu_l"] == mu and c["gamma_w"] == g)
                row = {"mu_l": mu, "gamma_w": g, "n_ok": len(ok), "n_failed": n_cells - len(ok)}
                for key, src in (("pct_nonzero_w", "nonzero_fraction"),
                                 ("train_rate", "train_rate"), ("test_rate", "test_rate"),
                                 ("objective", "objective")):
                    row[key] = float(np.mean([c[src] for c in ok])) if ok else float("nan")
                rows.append(row)
        return rows

    def to_dict(self):
        clean = lambda d: {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                           for k, v in d.items()}
        return {"gamma_grid": list(self.spec.gamma_grid), "mu_grid": list(self.spec.mu_grid),
                "replicate_seeds": list(self.spec.replicate_seeds),
                "warm_start": self.spec.warm_start, "family": self.spec.family,
                "summary": [clean(r) for r in self.summary()],
                "cells": [clean(c) for c in self.cells]}

    def write_table_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TABLE_COLUMNS)
            for r in self.summary():
                w.writerow([f"{r['pct_nonzero_w']:.4f}", repr(r["gamma_w"]), repr(r["mu_l"]),
                            f"{r['train_rate']:.4f}", f"{r['test_rate']:.4f}"])


def _run_row(y_train, x_train, y_test, x_test, arch, spec, cfg, mu, seed):
    cells = []
    init = None
    row_cfg = replace(cfg, mu=mu, seed=seed)
    for g in spec.gamma_grid:
        pen = PenaltySpec(spec.family, g, spec.penalize_bias)
        cell = {"mu_l": mu, "gamma_w": g, "seed": seed}
        try:
            rep = fit(y_train, x_train, arch, pen, row_cfg, init=init)
        except (RuntimeError, FloatingPointError) as e:
            log.warning("path cell mu=%g gamma=%g seed=%d failed: %s", mu, g, seed, e)
            cell.update(failed=True, error=str(e), nonzero_fraction=float("nan"),
                        train_rate=float("nan"), test_rate=float("nan"),
                        objective=float("nan"), n_iter=0, converged=False)
            cells.append(cell)
            init = None
            continue
        if spec.warm_start:
            init = (rep.params, rep.state)
        rates = {}
        for name, yy, xx in (("train_rate", y_train, x_train), ("test_rate", y_test, x_test)):
            rates[name] = (classify_rate(predict_proba(arch, rep.params, xx), yy)
                           if arch.loss == "multinomial" and xx is not None else float("nan"))
        cell.update(failed=False, nonzero_fraction=rep.nonzero_fraction,
                    objective=rep.final["objective"], n_iter=len(rep.records),
                    converged=rep.converged, **rates)
        cells.append(cell)
    return cells


def default_workers():
    try:
        return max(1, int(os.environ.get("PROXDEEP_THREADS", "1")))
    except ValueError:
        return 1


def run_path(y_train, x_train, y_test, x_test, arch, spec, cfg, workers=None):
    """Fit every (mu, gamma_w, seed) cell; see :class:`PathReport`."""
    workers = default_workers() if workers is None else workers
    jobs = [(mu, seed) for mu in spec.mu_grid for seed in spec.replicate_seeds]
    args = (y_train, x_train, y_test, x_test, arch, spec, cfg)
    if workers <= 1:
        results = [_run_row(*args, mu, seed) for mu, seed in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda job: _run_row(*args, *job), jobs))
    report = PathReport(spec)
    for cells in results:
        report.cells.extend(cells)
    return report
