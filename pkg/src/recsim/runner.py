"""
Sweep execution and result persistence.

All realizations of all cells go to one worker pool.  Results are gathered in
memory and written by this process only, in cell and realization order, so
output files do not depend on the worker count.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from recsim import __version__, metrics
from recsim.config import SweepSpec
from recsim.errors import SimulationError, UndefinedCorrelationError
from recsim.simulation import RealizationResult, build_teacher, run_tasks

_log = logging.getLogger(__name__)

TIMESERIES_HEADER = ["cell_id", "realization", "timestep", "brier", "gini", "mean_popularity"]
POPULARITY_HEADER = ["cell_id", "realization", "timestep", "item", "popularity"]
CORRELATIONS_HEADER = [
    "cell_id",
    "t_snapshot",
    "ground_truth_corr_mean",
    "ground_truth_corr_sd",
    "inter_realization_corr_mean",
    "inter_realization_corr_sd",
]
ZSCORES_HEADER = ["cell_a", "cell_b", "zscore"]
WORKERS_ENV = "RECSIM_WORKERS"


@dataclass
class RunManifest:
    out_dir: str
    config: dict
    master_seed: int
    tool_version: str = __version__
    cells: list[dict] = field(default_factory=list)
    realizations: list[dict] = field(default_factory=list)
    files: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def path(self) -> Path:
        return Path(self.out_dir) / "manifest.json"

    def save(self) -> Path:
        self.path.write_text(json.dumps(self.__dict__, indent=2) + "\n")
        return self.path

    @classmethod
    def load(cls, path) -> RunManifest:
        data = json.loads(Path(path).read_text())
        return cls(**data)


def resolve_workers(requested: int | None, default: int = 1) -> int:
    "Worker count: ``RECSIM_WORKERS`` wins over ``requested``, which wins over ``default``."
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        return max(value, 1)
    return max(requested if requested is not None else default, 1)


def fmt(x) -> str:
    "Stable text form of a number; NaN and None become empty fields."
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def _corr_summary(values):
    if not values:
        return None, None
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else None
    return float(np.mean(values)), sd


def summarize_correlations(results: list[RealizationResult], t: int, method: str = "pearson") -> dict:
    """
    Ground-truth and inter-realization popularity correlations at ``t``.
    Undefined correlations are dropped; a summary with no values is ``None``.
    """
    fn = {"pearson": metrics.pearson, "spearman": metrics.spearman}[method]
    gt = []
    for r in results:
        try:
            gt.append(fn(r.popularity_at(t), r.expected_popularity))
        except UndefinedCorrelationError:
            pass
    inter = metrics.pairwise_correlations([r.popularity_at(t) for r in results], method)
    gt_mean, gt_sd = _corr_summary(gt)
    ir_mean, ir_sd = _corr_summary(inter)
    return {
        "ground_truth": gt,
        "ground_truth_corr_mean": gt_mean,
        "ground_truth_corr_sd": gt_sd,
        "inter_realization_corr_mean": ir_mean,
        "inter_realization_corr_sd": ir_sd,
    }


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_matrix(path: Path, header, matrix):
    rows = ([i, j, fmt(v)] for (i, j), v in np.ndenumerate(matrix))
    _write_csv(path, header, rows)


def run_sweep(
    spec: SweepSpec,
    *,
    out_dir=None,
    workers: int | None = None,
    dump_teacher: bool = False,
    dump_student: bool = False,
    both_correlations: bool = False,
) -> RunManifest:
    """
    Run every cell of ``spec`` and write ``timeseries.csv``,
    ``popularity.csv``, ``correlations.csv``, ``zscores.csv`` and
    ``manifest.json`` to the output directory.  Re-running with the same
    config overwrites the CSVs with identical bytes.
    """
    out = Path(out_dir if out_dir is not None else spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_workers = resolve_workers(workers, spec.base.parallelism)
    cells = spec.cells()
    t_snap = spec.t_snapshot

    manifest = RunManifest(out_dir=str(out), config=spec.to_dict(), master_seed=spec.base.master_seed)
    for cid, cfg in cells:
        manifest.cells.append(
            {
                "cell_id": cid,
                "strategy": cfg.strategy.name,
                "epsilon": cfg.strategy.epsilon,
                "beta": cfg.beta.to_json(),
                "beta_cond": cfg.beta.label,
            }
        )

    tasks = [(cfg, i) for _, cfg in cells for i in range(cfg.realizations)]
    _log.info("running %d cells, %d realizations on %d workers", len(cells), len(tasks), n_workers)
    flat = run_tasks(tasks, n_workers, record_student=dump_student)

    by_cell: dict[str, list[RealizationResult]] = {}
    pos = 0
    for cid, cfg in cells:
        chunk = flat[pos : pos + cfg.realizations]
        pos += cfg.realizations
        errors = [r for r in chunk if isinstance(r, BaseException)]
        if errors:
            for e in errors:
                idx = e.realization if isinstance(e, SimulationError) else None
                manifest.failures.append({"cell_id": cid, "realization": idx, "error": str(e)})
            manifest.warnings.append(f"cell {cid} aborted: {len(errors)} realization(s) failed")
            continue
        by_cell[cid] = chunk
        for r in chunk:
            manifest.realizations.append(
                {"cell_id": cid, "realization": r.index, "seeds": r.seeds, "wall_time": r.wall_time}
            )

    ts_rows, pop_rows, corr_rows, corr_rows_s = [], [], [], []
    stride = spec.popularity_stride
    configs = dict(cells)
    for cid, results in by_cell.items():
        for r in results:
            for t in range(1, r.timesteps + 1):
                ts_rows.append(
                    [cid, r.index, t, fmt(r.brier[t - 1]), fmt(r.gini[t - 1]), fmt(r.mean_popularity[t - 1])]
                )
            for t in range(stride, r.timesteps + 1, stride):
                for j, v in enumerate(r.popularity[t - 1]):
                    pop_rows.append([cid, r.index, t, j, int(v)])
        for method, rows in (("pearson", corr_rows), ("spearman", corr_rows_s)):
            if method == "spearman" and not both_correlations:
                continue
            s = summarize_correlations(results, t_snap, method)
            rows.append(
                [cid, t_snap]
                + [fmt(s[k]) for k in CORRELATIONS_HEADER[2:]]
            )

    z_rows = []
    ids = list(by_cell)
    for a_i, a in enumerate(ids):
        for b in ids[a_i + 1 :]:
            if configs[a].beta != configs[b].beta:
                continue
            sa = np.array([r.mean_popularity for r in by_cell[a]])
            sb = np.array([r.mean_popularity for r in by_cell[b]])
            if len(sa) < 2 or len(sb) < 2:
                continue
            z_rows.append([a, b, fmt(metrics.popularity_difference_zscore(sa, sb))])

    outputs = [
        ("timeseries.csv", TIMESERIES_HEADER, ts_rows),
        ("popularity.csv", POPULARITY_HEADER, pop_rows),
        ("correlations.csv", CORRELATIONS_HEADER, corr_rows),
        ("zscores.csv", ZSCORES_HEADER, z_rows),
    ]
    if both_correlations:
        outputs.append(("correlations_spearman.csv", CORRELATIONS_HEADER, corr_rows_s))
    for name, header, rows in outputs:
        try:
            _write_csv(out / name, header, rows)
            manifest.files.append(name)
        except OSError as exc:
            manifest.failures.append({"file": name, "error": str(exc)})

    if dump_teacher or dump_student:
        _dump_models(out, cells, by_cell, manifest, dump_teacher, dump_student)

    manifest.save()
    return manifest


def _dump_models(out, cells, by_cell, manifest, teacher, student):
    configs = dict(cells)
    for cid, results in by_cell.items():
        cfg = configs[cid]
        for r in results:
            try:
                if teacher:
                    name = f"teacher_{cid}_r{r.index}.csv"
                    probs = build_teacher(cfg, r.index).probs
                    _write_matrix(out / name, ["agent", "item", "prob"], probs)
                    manifest.files.append(name)
                if student and r.student_snapshots:
                    sdir = out / "students"
                    sdir.mkdir(exist_ok=True)
                    for t, (p, q) in enumerate(r.student_snapshots, start=1):
                        for label, mat in (("p", p), ("q", q)):
                            name = f"students/{cid}_r{r.index}_t{t}_{label}.csv"
                            _write_matrix(out / name, ["row", "col", "value"], mat)
                            manifest.files.append(name)
            except OSError as exc:
                manifest.failures.append({"cell_id": cid, "realization": r.index, "error": str(exc)})
