"""Summary tables and figures from experiment CSV output.

Handles both CSV kinds the CLI produces: exploration learning curves
(method/seed rows with mAP columns) and discovery runs (method/task/init
rows with discovered-class counts). Output is a summary CSV plus PNG
figures written alongside it.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .emoc import load_discovery
from .protocol import LearningCurve, auc, load_curves


def _is_discovery_csv(path: Path) -> bool:
    with open(path, newline="") as f:
        header = f.readline().strip().split(",")
    return header[:3] == ["method", "task", "init"]


def write_report(in_path: Path, out_dir: Path | None = None, eval_every: int = 50) -> list[Path]:
    """Summarize an experiment CSV; returns the paths written."""
    in_path = Path(in_path)
    out_dir = Path(out_dir) if out_dir is not None else in_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    if _is_discovery_csv(in_path):
        return _discovery_report(in_path, out_dir)
    return _curves_report(in_path, out_dir, eval_every)


# ---------------------------------------------------------------------------
# exploration curves


def _common_checkpoints(curves: list[LearningCurve]) -> list[int]:
    sets = [set(c.labeled_counts) for c in curves]
    return sorted(set.intersection(*sets)) if sets else []


def _curves_report(in_path: Path, out_dir: Path, eval_every: int) -> list[Path]:
    curves = load_curves(in_path, eval_every=eval_every)
    if not curves:
        raise ValueError(f"{in_path} holds no curves")
    by_method: dict[str, list[LearningCurve]] = defaultdict(list)
    for c in curves:
        by_method[c.metric].append(c)
    checkpoints = _common_checkpoints(curves)

    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", newline="") as f:
        w = csv.writer(f)
        header = ["method", "seeds"]
        header += [f"map_new_at_{n}" for n in checkpoints]
        header += ["auc_new", "auc_known"]
        w.writerow(header)
        for method in sorted(by_method):
            group = by_method[method]
            row: list = [method, len(group)]
            for n in checkpoints:
                vals = [r.map_new for c in group for r in c.rows if r.labeled_count == n]
                row.append(format(float(np.mean(vals)), ".6g"))
            for curve_field in ("map_new", "map_known"):
                vals = [auc(c, curve_field) for c in group if len(c.rows) >= 2]
                row.append(format(float(np.mean(vals)), ".6g") if vals else "nan")
            w.writerow(row)

    paths = [summary_path]
    for curve_field, fname in (("map_new", "curves_new.png"), ("map_known", "curves_known.png")):
        fig, ax = plt.subplots(figsize=(6, 4))
        for method in sorted(by_method):
            group = by_method[method]
            counts = sorted({r.labeled_count for c in group for r in c.rows})
            means, stds, xs = [], [], []
            for n in counts:
                vals = [getattr(r, curve_field) for c in group for r in c.rows if r.labeled_count == n]
                if vals:
                    xs.append(n)
                    means.append(np.mean(vals))
                    stds.append(np.std(vals))
            means, stds = np.array(means), np.array(stds)
            ax.plot(xs, means, marker="o", label=method)
            ax.fill_between(xs, means - stds, means + stds, alpha=0.15)
        ax.set_xlabel("labeled examples")
        ax.set_ylabel(curve_field.replace("_", " "))
        ax.legend()
        ax.grid(alpha=0.3)
        fig.tight_layout()
        out = out_dir / fname
        fig.savefig(out, dpi=120)
        plt.close(fig)
        paths.append(out)
    return paths


# ---------------------------------------------------------------------------
# discovery runs


def _discovery_report(in_path: Path, out_dir: Path) -> list[Path]:
    results = load_discovery(in_path)
    if not results:
        raise ValueError(f"{in_path} holds no discovery runs")
    by_method: dict[str, list] = defaultdict(list)
    for r in results:
        by_method[r.method].append(r)
    horizon = min(len(r.discovered) for r in results)

    summary_path = out_dir / "summary.csv"
    marks = [q for q in (10, 25, 50, 100) if q < horizon]
    with open(summary_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["method", "runs"]
            + [f"discovered_at_{q}" for q in marks]
            + [f"accuracy_at_{q}" for q in marks]
        )
        for method in sorted(by_method):
            group = by_method[method]
            row: list = [method, len(group)]
            for q in marks:
                row.append(format(float(np.mean([r.discovered[q] for r in group])), ".6g"))
            for q in marks:
                row.append(format(float(np.mean([r.accuracy[q] for r in group])), ".6g"))
            w.writerow(row)

    paths = [summary_path]
    for attr, fname, ylabel in (
        ("discovered", "discovered.png", "discovered classes"),
        ("accuracy", "accuracy.png", "test accuracy"),
    ):
        fig, ax = plt.subplots(figsize=(6, 4))
        qs = np.arange(horizon)
        for method in sorted(by_method):
            group = by_method[method]
            mat = np.array([getattr(r, attr)[:horizon] for r in group], dtype=float)
            ax.plot(qs, mat.mean(axis=0), label=method)
            ax.fill_between(
                qs, mat.mean(axis=0) - mat.std(axis=0), mat.mean(axis=0) + mat.std(axis=0), alpha=0.15
            )
        ax.set_xlabel("queries")
        ax.set_ylabel(ylabel)
        ax.legend()
        ax.grid(alpha=0.3)
        fig.tight_layout()
        out = out_dir / fname
        fig.savefig(out, dpi=120)
        plt.close(fig)
        paths.append(out)
    return paths
