"""SVG figures drawn from a finished sweep's CSV files."""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from recsim.runner import RunManifest  # noqa: E402
from recsim.teacher import UNIFORM_RANDOM  # noqa: E402

_log = logging.getLogger(__name__)

FIGURE_NAMES = ("fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig5")
_STYLE = {"greedy": "C0", "epsilon_greedy": "C1", "random": "C2", "oracle": "C3"}


def _read(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with path.open(newline="") as f:
        return list(csv.DictReader(f))


def _num(s):
    return float(s) if s not in ("", None) else np.nan


def _series(rows):
    "Realization-mean time series per (cell, column)."
    acc = defaultdict(lambda: defaultdict(list))
    for r in rows:
        acc[r["cell_id"]][int(r["timestep"])].append(
            (_num(r["brier"]), _num(r["gini"]), _num(r["mean_popularity"]))
        )
    out = {}
    for cid, by_t in acc.items():
        ts = sorted(by_t)
        vals = np.array([np.nanmean(np.array(by_t[t]), axis=0) if by_t[t] else [np.nan] * 3 for t in ts])
        out[cid] = (np.array(ts), vals)
    return out


def _label(cell):
    name = cell["strategy"].replace("_", "-")
    if cell["strategy"] == "epsilon_greedy":
        name = f"ε-greedy (ε={cell['epsilon']})"
    return name


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_figures(manifest: RunManifest | str | Path) -> list[Path]:
    """
    Draw every figure whose data is present and return the written paths.
    Figures without data are skipped and noted in the manifest warnings.
    """
    if not isinstance(manifest, RunManifest):
        manifest = RunManifest.load(manifest)
    out = Path(manifest.out_dir)
    plt.rcParams["svg.hashsalt"] = "recsim"
    written: list[Path] = []

    cells = {c["cell_id"]: c for c in manifest.cells}
    series = {k: v for k, v in _series(_read(out / "timeseries.csv")).items() if k in cells}
    corr = {r["cell_id"]: r for r in _read(out / "correlations.csv") if r["cell_id"] in cells}
    if not series:
        manifest.warnings.append("no results: no figures emitted")
        manifest.save()
        return written

    def skip(name, why):
        msg = f"{name} skipped: {why}"
        _log.warning(msg)
        manifest.warnings.append(msg)

    const = {cid: c for cid, c in cells.items() if c["beta"] != UNIFORM_RANDOM}
    rand = {cid: c for cid, c in cells.items() if c["beta"] == UNIFORM_RANDOM}

    for name, col, ylabel in (
        ("fig2a", "ground_truth_corr", "popularity vs. ground-truth correlation"),
        ("fig2b", "inter_realization_corr", "inter-realization popularity correlation"),
    ):
        groups = defaultdict(list)
        for cid, c in const.items():
            if cid in corr and corr[cid][f"{col}_mean"] != "":
                groups[_label(c)].append(
                    (c["beta"], _num(corr[cid][f"{col}_mean"]), _num(corr[cid][f"{col}_sd"]), c["strategy"])
                )
        if not groups:
            skip(name, "no correlation data for constant-beta cells")
            continue
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for label, pts in sorted(groups.items()):
            pts.sort()
            x, y, e, s = zip(*pts)
            ax.errorbar(x, y, yerr=np.nan_to_num(e), marker="o", capsize=3, label=label, color=_STYLE[s[0]])
        for cid, c in rand.items():
            if cid in corr and corr[cid][f"{col}_mean"] != "":
                ax.axhline(_num(corr[cid][f"{col}_mean"]), ls="--", lw=1, color=_STYLE[c["strategy"]],
                           label=f"{_label(c)}, random β")
        ax.set_xlabel("β")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=7)
        path = out / f"{name}.svg"
        _save(fig, path)
        written.append(path)

    panels = {"fig3": (0, "Brier score"), "fig4a": (1, "popularity Gini"), "fig4b": (2, "mean item popularity")}
    for name, (col, ylabel) in panels.items():
        present = [cid for cid in const if cid in series]
        if not present:
            skip(name, "no constant-beta series")
            continue
        fig, ax = plt.subplots(figsize=(5, 3.6))
        betas = sorted({const[cid]["beta"] for cid in present})
        styles = ["-", "--", ":", "-."]
        for cid in present:
            c = const[cid]
            ts, vals = series[cid]
            ls = styles[betas.index(c["beta"]) % len(styles)]
            ax.plot(ts, vals[:, col], ls, color=_STYLE[c["strategy"]], label=f"{_label(c)}, β={c['beta']}")
        ax.set_xlabel("timestep")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=6)
        path = out / f"{name}.svg"
        _save(fig, path)
        written.append(path)

    present = [cid for cid in rand if cid in series]
    if not present:
        skip("fig5", "no random-beta series")
    else:
        fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
        for col, (ax, ylabel) in enumerate(zip(axes, ("Brier score", "popularity Gini", "mean item popularity"))):
            for cid in present:
                ts, vals = series[cid]
                ax.plot(ts, vals[:, col], color=_STYLE[rand[cid]["strategy"]], label=_label(rand[cid]))
            ax.set_xlabel("timestep")
            ax.set_ylabel(ylabel)
        axes[0].legend(fontsize=7)
        greedy = [cid for cid in present if rand[cid]["strategy"] == "greedy"]
        eps = [cid for cid in present if rand[cid]["strategy"] == "epsilon_greedy"]
        if greedy and eps:
            inset = axes[2].inset_axes([0.55, 0.12, 0.4, 0.35])
            ts, g = series[greedy[0]]
            _, e = series[eps[0]]
            inset.plot(ts, e[:, 2] - g[:, 2], color="k", lw=1)
            inset.axhline(0, color="grey", lw=0.5)
            inset.set_title("ε-greedy − greedy", fontsize=7)
            inset.tick_params(labelsize=6)
        else:
            manifest.warnings.append("fig5 inset skipped: needs greedy and epsilon_greedy random-beta cells")
        path = out / "fig5.svg"
        _save(fig, path)
        written.append(path)

    manifest.files.extend(p.name for p in written if p.name not in manifest.files)
    manifest.save()
    return written
