"""Figure rendering for experiment artifacts.

Every figure is produced twice: a PNG rendered headlessly with matplotlib,
and a standalone gnuplot script that reproduces the same plot from the
delimited output next to it (``set key autotitle columnhead`` so the CSV
header row is consumed as series titles). Keeping the plotting layer here
means nothing else in the package imports matplotlib.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

__all__ = ["Series", "line_plot", "gnuplot_script"]


@dataclass(frozen=True)
class Series:
    """One curve: x/y arrays plus legend label and matplotlib style."""

    x: object
    y: object
    label: str
    style: str = "-"


def line_plot(
    png_path: str,
    series: list[Series],
    *,
    xlabel: str,
    ylabel: str,
    title: str = "",
    logx: bool = False,
    logy: bool = False,
):
    """Render curves to a PNG with the requested axis scales."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for s in series:
        ax.plot(s.x, s.y, s.style, label=s.label)
    if logx:
        ax.set_xscale("log")
    if logy and any(np.any(np.asarray(s.y) > 0) for s in series):
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1 or (series and series[0].label):
        ax.legend(frameon=False, fontsize=9)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def gnuplot_script(
    gp_path: str,
    csv_filename: str,
    plots: list[tuple[int, int]],
    *,
    xlabel: str,
    ylabel: str,
    title: str = "",
    logx: bool = False,
    logy: bool = False,
):
    """Emit a gnuplot script plotting 1-indexed (x, y) column pairs of the CSV."""
    lines = [
        "# reproduce the PNG from the delimited output with: gnuplot <this file>",
        'set datafile separator ","',
        "set key autotitle columnhead",
        f'set xlabel "{xlabel}"',
        f'set ylabel "{ylabel}"',
        "set grid",
        "set term pngcairo size 900,630",
        f'set output "{csv_filename.rsplit(".", 1)[0]}_gnuplot.png"',
    ]
    if title:
        lines.append(f'set title "{title}"')
    if logx:
        lines.append("set logscale x")
    if logy:
        lines.append("set logscale y")
    terms = ", ".join(
        f'"{csv_filename}" using {cx}:{cy} with lines' for cx, cy in plots
    )
    lines.append(f"plot {terms}")
    with open(gp_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
