"""Figures written next to the CSV output (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def loglog_series(
    path: Path,
    x: Sequence[float],
    series: dict[str, Sequence[float]],
    fits: dict[str, tuple[float, float]] | None = None,
    xlabel: str = "t",
    ylabel: str = "value",
    title: str = "",
) -> Path:
    """Log-log plot; fits maps a series label to (slope, intercept) in log space."""
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.asarray(x, dtype=float)
    for label, y in series.items():
        ax.loglog(x, np.asarray(y, dtype=float), "o-", ms=3, label=label)
        if fits and label in fits:
            slope, intercept = fits[label]
            ax.loglog(x, np.exp(intercept) * x**slope, "k--", lw=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def line_series(
    path: Path,
    x: Sequence[float],
    series: dict[str, Sequence[float]],
    xlabel: str = "t",
    ylabel: str = "value",
    title: str = "",
    logy: bool = False,
) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in series.items():
        y = np.asarray(y, dtype=float)
        if logy:
            ax.semilogy(x, np.abs(y), "o-", ms=3, label=label)
        else:
            ax.plot(x, y, "o-", ms=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def profile_1d(path: Path, x: np.ndarray, curves: dict[str, np.ndarray], title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    order = np.argsort(x)
    for label, y in curves.items():
        ax.plot(x[order], np.asarray(y)[order], lw=1, label=label)
    ax.set_xlabel("x")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def exponent_table(path: Path, names: Sequence[str], fitted: Sequence[float], predicted: Sequence[float]) -> Path:
    fig, ax = plt.subplots(figsize=(6, 0.4 * len(names) + 1.5))
    y = np.arange(len(names))
    ax.barh(y - 0.2, fitted, height=0.4, label="fitted")
    ax.barh(y + 0.2, predicted, height=0.4, label="predicted")
    ax.set_yticks(y, names, fontsize=8)
    ax.axvline(0.0, color="k", lw=0.5)
    ax.set_xlabel("exponent")
    ax.legend(fontsize=8)
    return _save(fig, path)
