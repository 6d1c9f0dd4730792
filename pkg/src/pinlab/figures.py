"""Figure rendering for the report path.

Everything goes through the Agg backend and a fixed savefig configuration
(dpi, metadata) so the PNG bytes are reproducible for a given result set;
files land next to the delimited output via the same temp-and-rename dance.
"""
from __future__ import annotations

import os
import tempfile

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SAVEFIG = {"dpi": 150, "metadata": {"Software": "pinlab"}}


def save_figure(fig, path: str) -> str:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", **_SAVEFIG)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)
    return path


def line_plot(
    path: str,
    xs,
    series: dict,
    xlabel: str,
    ylabel: str,
    title: str = "",
    yerr: dict | None = None,
    logy: bool = False,
    marker: str = "o",
) -> str:
    """One axes, one line per series entry, optional error bars."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, ys in series.items():
        err = (yerr or {}).get(label)
        if err is not None:
            ax.errorbar(xs, ys, yerr=err, marker=marker, capsize=3, label=label)
        else:
            ax.plot(xs, ys, marker=marker, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return save_figure(fig, path)


def bar_compare(path: str, labels, groups: dict, ylabel: str, title: str = "") -> str:
    """Grouped bars, one group entry per route/variant."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    n = len(groups)
    width = 0.8 / max(n, 1)
    for k, (name, vals) in enumerate(groups.items()):
        offs = [i + (k - (n - 1) / 2.0) * width for i in range(len(labels))]
        ax.bar(offs, vals, width=width, label=name)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels([str(c) for c in labels])
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if n > 1:
        ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    return save_figure(fig, path)
