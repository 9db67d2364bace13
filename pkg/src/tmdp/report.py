"""Artifact writers: CSV tables with provenance comments, JSON reports, and
matplotlib figures rendered next to the delimited output."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


def config_hash(config: Mapping) -> str:
    """Stable short hash of a configuration mapping for provenance lines."""
    payload = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


def write_csv(
    path: str | Path,
    rows: Sequence[Mapping],
    fieldnames: Sequence[str] | None = None,
    config: Mapping | None = None,
) -> Path:
    """Write dict rows as CSV with a header row and a config-hash comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        raise ValueError("no rows to write")
    fieldnames = list(fieldnames or rows[0].keys())
    with path.open("w", newline="", encoding="utf-8") as fh:
        if config is not None:
            fh.write(f"# config-hash: {config_hash(config)}\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in fieldnames})
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def write_json(path: str | Path, record: Mapping, config: Mapping | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(record)
    if config is not None:
        payload["config_hash"] = config_hash(config)
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")
    return path


def _json_default(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"not JSON-serializable: {type(v)!r}")


def _use_agg():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_risk_curves(
    path: str | Path,
    levels: Sequence[int],
    curves: Mapping[str, Sequence[float]],
    title: str = "Fixed-complexity estimation error",
    xlabel: str = "model complexity level",
) -> Path:
    """Semi-log risk-vs-complexity curves, one line per labeled family."""
    plt = _use_agg()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, values in curves.items():
        ax.semilogy(list(levels), list(values), marker="o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("mean squared Hellinger error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_rate_curve(
    path: str | Path,
    ns: Sequence[int],
    values: Sequence[float],
    slope: float,
    ylabel: str = "mean error",
    title: str = "Error against sample size",
) -> Path:
    """Log-log error-vs-n curve annotated with the fitted slope."""
    plt = _use_agg()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(list(ns), list(values), marker="o", label="measured")
    anchor = values[0] * (np.asarray(ns, float) / ns[0]) ** slope
    ax.loglog(list(ns), anchor, linestyle="--", label=f"slope {slope:.2f}")
    ax.set_xlabel("sample size n")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
