"""SVG figures drawn from the CSV files the CLI writes.

Every plot reads only its CSV, and the SVG writer is pinned (fixed hash salt,
no timestamp), so regenerating a figure from the same CSV gives the same file.
"""
from __future__ import annotations

import csv
import math
from collections import OrderedDict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SVG_META = {"Date": None}


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _axis_for(rows, candidates=("N", "Q", "p_X")):
    """The swept column: the first candidate that varies within a series."""
    for col in candidates:
        if len({r[col] for r in rows}) > 1:
            return col
    return candidates[0]


def _series(rows, x, keys):
    groups = OrderedDict()
    for r in rows:
        key = tuple((k, r[k]) for k in keys if k != x)
        groups.setdefault(key, []).append(r)
    return groups


def _label(key):
    return ", ".join(f"{k}={float(v):g}" for k, v in key)


def _save(fig, svg_path):
    with matplotlib.rc_context({"svg.hashsalt": "stnchain", "svg.fonttype": "none"}):
        fig.savefig(svg_path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def _xval(x, v):
    v = float(v)
    return math.log10(v) if x == "N" else v


def plot_keyrate(csv_path, svg_path) -> Path:
    """log10 of the STN (solid) and TN (dashed) key lengths against the swept variable."""
    rows = read_csv(csv_path)
    x = _axis_for(rows)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    tn_seen = set()
    for key, grp in _series(rows, x, ("N", "p", "Q", "p_X")).items():
        for col, style in (("l_stn", "-"), ("l_tn", "--")):
            pts = [(_xval(x, r[x]), math.log10(float(r[col]))) for r in grp if float(r[col]) > 0]
            if not pts:
                continue
            if col == "l_tn":
                # the TN curve does not depend on p; draw it once per remaining parameters
                tn_key = tuple(kv for kv in key if kv[0] != "p")
                if tn_key in tn_seen:
                    continue
                tn_seen.add(tn_key)
                label = "TN " + _label(tn_key)
            else:
                label = "STN " + _label(key)
            xs, ys = zip(*pts)
            ax.plot(xs, ys, style, label=label)
    ax.set_xlabel("log10(N)" if x == "N" else x)
    ax.set_ylabel("log10(key length)")
    if ax.lines:
        ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    _save(fig, svg_path)
    return Path(svg_path)


def plot_cost(csv_path, svg_path) -> Path:
    """Cost per secret bit: STN solid, TN dashed, log scale."""
    rows = read_csv(csv_path)
    x = _axis_for(rows, ("N", "Q"))
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for key, grp in _series(rows, x, ("N", "p", "Q")).items():
        for col, style, name in (("cost_stn", "-", "STN"), ("cost_tn", "--", "TN")):
            pts = [(_xval(x, r[x]), float(r[col])) for r in grp if r[col] != ""]
            if pts:
                xs, ys = zip(*pts)
                ax.plot(xs, ys, style, label=f"{name} {_label(key)}")
    ax.set_yscale("log")
    ax.set_xlabel("log10(N)" if x == "N" else x)
    ax.set_ylabel("cost per secret key bit")
    if ax.lines:
        ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    _save(fig, svg_path)
    return Path(svg_path)
