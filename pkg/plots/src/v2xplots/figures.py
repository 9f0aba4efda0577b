"""Render the simulator's metric CSVs into publication-style figures.

This package deliberately never imports the simulator: the documented CSV
headers are the whole contract. Six figure kinds cover the study's standard
views: loss ratio versus load, packet delay CDFs, sum-rate bars, sidelink
outage versus load, RB-occupancy CDFs, and the best-effort rate CDF.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("plr", "delay-cdf", "sumrate", "outage", "rb-cdf", "bue-rate-cdf")

_SOURCES = {
    "plr": ("plr.csv", ("scheduler", "num_cues", "seed", "user_kind", "plr")),
    "delay-cdf": ("delay_cdf.csv", ("scheduler", "num_cues", "seed", "user_kind", "delay_ms", "cdf")),
    "sumrate": ("sumrate.csv", ("scheduler", "num_cues", "seed", "user_kind", "stat", "value_mbps")),
    "outage": ("outage.csv", ("scheduler", "num_cues", "seed", "outage_prob")),
    "rb-cdf": ("rb_cdf.csv", ("scheduler", "num_cues", "seed", "scope", "rbs", "cdf")),
    "bue-rate-cdf": ("sumrate.csv", ("scheduler", "num_cues", "seed", "user_kind", "stat", "value_mbps")),
}

_STYLE = {"figsize": (6.0, 4.0), "grid_alpha": 0.3}


class SchemaError(ValueError):
    """Input CSV does not match the documented contract."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    input_dirs: Tuple[str, ...]
    output_path: str
    user_kind: str = "cue"          # delay-cdf filter
    scope: str = "per_cue_grant"    # rb-cdf filter
    dpi: int = 120

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}")
        if not self.input_dirs:
            raise ValueError("at least one input directory is required")


def read_rows(path: Path, required: Sequence[str]) -> List[dict]:
    if not path.exists():
        raise SchemaError(f"{path}: file not found")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise SchemaError(f"{path}: missing column {column!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _load(spec: FigureSpec) -> List[dict]:
    filename, required = _SOURCES[spec.kind]
    rows: List[dict] = []
    for d in spec.input_dirs:
        rows.extend(read_rows(Path(d) / filename, required))
    return rows


def validate_cdf(xs: Sequence[float], ys: Sequence[float], label: str) -> None:
    y = np.asarray(ys, dtype=float)
    x = np.asarray(xs, dtype=float)
    if np.any(np.diff(x) < 0) or np.any(np.diff(y) < -1e-12):
        raise ValueError(f"CDF curve {label!r} is not monotone non-decreasing")
    if y.size and abs(y[-1] - 1.0) > 1e-9:
        raise ValueError(f"CDF curve {label!r} ends at {y[-1]}, expected 1")


def _group(rows, keys) -> Dict[tuple, List[dict]]:
    out: Dict[tuple, List[dict]] = {}
    for row in rows:
        out.setdefault(tuple(row[k] for k in keys), []).append(row)
    return out


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=_STYLE["figsize"])
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=_STYLE["grid_alpha"])
    return fig, ax


def _empirical_cdf(samples: Sequence[float]):
    arr = np.sort(np.asarray(samples, dtype=float))
    values, counts = np.unique(arr, return_counts=True)
    return values, np.cumsum(counts) / arr.size


def _draw_plr(spec, rows, ax):
    rows = [r for r in rows if r["user_kind"] == "cue"]
    if not rows:
        raise SchemaError("plr.csv holds no cellular-user rows")
    for sched, group in sorted(_group(rows, ("scheduler",)).items()):
        points: Dict[int, List[float]] = {}
        for r in group:
            points.setdefault(int(r["num_cues"]), []).append(float(r["plr"]))
        xs = sorted(points)
        ys = [float(np.mean(points[x])) for x in xs]
        ax.plot(xs, ys, marker="o", label=sched[0])
    ax.set_ylim(bottom=0)


def _draw_curve_cdf(spec, rows, ax, x_field, filters):
    rows = [r for r in rows if all(r[k] == v for k, v in filters.items())]
    if not rows:
        raise SchemaError(f"no rows match {filters}")
    seen_labels = set()
    for (sched, seed), group in sorted(_group(rows, ("scheduler", "seed")).items()):
        xs = [float(r[x_field]) for r in group]
        ys = [float(r["cdf"]) for r in group]
        order = np.argsort(xs, kind="stable")
        xs = list(np.asarray(xs)[order])
        ys = list(np.asarray(ys)[order])
        validate_cdf(xs, ys, f"{sched}/{seed}")
        label = sched if sched not in seen_labels else None
        seen_labels.add(sched)
        ax.plot(xs, ys, drawstyle="steps-post", label=label)
    ax.set_ylim(0, 1.02)


def _draw_sumrate(spec, rows, ax):
    rows = [r for r in rows if r["user_kind"] == "cue" and r["stat"] == "mean_mbps"]
    if not rows:
        raise SchemaError("sumrate.csv holds no cellular mean-rate rows")
    groups = sorted(_group(rows, ("scheduler",)).items())
    names = [g[0][0] for g in groups]
    means = [float(np.mean([float(r["value_mbps"]) for r in g[1]])) for g in groups]
    stds = [float(np.std([float(r["value_mbps"]) for r in g[1]])) for g in groups]
    ax.bar(names, means, yerr=stds, capsize=4)


def _draw_outage(spec, rows, ax):
    for sched, group in sorted(_group(rows, ("scheduler",)).items()):
        points: Dict[int, List[float]] = {}
        for r in group:
            points.setdefault(int(r["num_cues"]), []).append(float(r["outage_prob"]))
        xs = sorted(points)
        ys = [float(np.mean(points[x])) for x in xs]
        ax.plot(xs, ys, marker="s", label=sched[0])
    ax.set_ylim(bottom=0)


def _draw_bue_rate_cdf(spec, rows, ax):
    rows = [r for r in rows if r["user_kind"] == "bue" and r["stat"] == "tti_mbps"]
    if not rows:
        raise SchemaError("sumrate.csv holds no best-effort per-TTI samples")
    for sched, group in sorted(_group(rows, ("scheduler",)).items()):
        samples = [float(r["value_mbps"]) for r in group]
        xs, ys = _empirical_cdf(samples)
        validate_cdf(xs, ys, f"bue-rate/{sched[0]}")
        ax.plot(xs, ys, drawstyle="steps-post", label=sched[0])
    ax.set_ylim(0, 1.02)


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the written path.

    Raises SchemaError before anything is written when the inputs do not match
    the contract, and ValueError when a CDF input is malformed. Output is
    deterministic for identical inputs (fixed style, pinned PNG metadata).
    """
    rows = _load(spec)
    titles = {
        "plr": ("cellular users", "packet loss ratio", "Packet loss ratio vs. load"),
        "delay-cdf": ("delay (ms)", "P[delay <= x]", f"Packet delay CDF ({spec.user_kind})"),
        "sumrate": ("scheduler", "mean sum rate (Mbps)", "Cellular sum rate"),
        "outage": ("cellular users", "outage probability", "Sidelink outage vs. load"),
        "rb-cdf": ("resource blocks", "P[RBs <= x]", f"RB occupancy CDF ({spec.scope})"),
        "bue-rate-cdf": ("rate (Mbps)", "P[rate <= x]", "Best-effort rate CDF"),
    }
    xlabel, ylabel, title = titles[spec.kind]
    fig, ax = _new_axes(xlabel, ylabel)
    try:
        if spec.kind == "plr":
            _draw_plr(spec, rows, ax)
        elif spec.kind == "delay-cdf":
            _draw_curve_cdf(spec, rows, ax, "delay_ms", {"user_kind": spec.user_kind})
        elif spec.kind == "sumrate":
            _draw_sumrate(spec, rows, ax)
        elif spec.kind == "outage":
            _draw_outage(spec, rows, ax)
        elif spec.kind == "rb-cdf":
            _draw_curve_cdf(spec, rows, ax, "rbs", {"scope": spec.scope})
        else:
            _draw_bue_rate_cdf(spec, rows, ax)
        ax.set_title(title)
        if ax.get_legend_handles_labels()[0]:
            ax.legend()
        fig.tight_layout()
        out = Path(spec.output_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=spec.dpi, metadata={"Software": "v2xplots"})
        return out
    finally:
        plt.close(fig)
