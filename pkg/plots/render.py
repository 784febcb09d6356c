"""Render figures from experiment CSV artifacts.

Two figure kinds. ``heatmap`` takes the grid CSV (mu, epsilon, delta,
a_delta, h, on_boundary) and draws one panel of h over (delta, epsilon)
per mu, with the boundary curve epsilon = 2 A_delta dashed on top.
``delay_curve`` takes sweep CSVs (one or more) and draws worst-case delay
against average run length, one line per (detector, epsilon), log x.

Rendering is a pure function of the CSV rows: nothing is recomputed, and
a CSV whose header does not match the expected schema exactly is refused.
Output is SVG, written deterministically so regenerated figures diff
clean.

    python plots/render.py --kind {heatmap|delay} --in <csv> [--in <csv> ...] --out <svg>
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "dpcusum-plots"

import matplotlib.pyplot as plt
import numpy as np

HEATMAP_HEADER = "mu,epsilon,delta,a_delta,h,on_boundary"
SWEEP_HEADER = "detector,model,mu,epsilon,delta,b,arl_est,arl_se,wadd_est,wadd_se,trials,seed"

BOUNDARY_GID = "boundary-eps-2adelta"


class SchemaError(RuntimeError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple
    kind: str
    out: str
    log_x: bool = True

    def __post_init__(self):
        if self.kind not in ("heatmap", "delay_curve"):
            raise SchemaError(f"unknown figure kind: {self.kind!r}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def read_rows(path, expected_header):
    """Rows as dicts; comment lines skipped, header checked verbatim."""
    with open(path, newline="") as f:
        lines = [ln for ln in f.read().splitlines() if not ln.startswith("#")]
    if not lines:
        raise SchemaError(f"{path}: empty CSV, no header")
    if lines[0] != expected_header:
        raise SchemaError(f"{path}: header mismatch, got: {lines[0]}")
    rows = list(csv.DictReader(lines[1:], fieldnames=expected_header.split(",")))
    if not rows:
        raise SchemaError(f"{path}: empty CSV body")
    return rows


def _save(fig, out):
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_heatmap(spec):
    rows = []
    for path in spec.inputs:
        rows.extend(read_rows(path, HEATMAP_HEADER))
    mus = sorted({float(r["mu"]) for r in rows})
    fig, axes = plt.subplots(1, len(mus), figsize=(4.2 * len(mus), 3.6), squeeze=False)
    for ax, mu in zip(axes[0], mus):
        cells = [r for r in rows if float(r["mu"]) == mu]
        eps = np.array(sorted({float(r["epsilon"]) for r in cells}))
        deltas = np.array(sorted({float(r["delta"]) for r in cells}))
        h = np.full((len(eps), len(deltas)), np.nan)
        bound = {}
        for r in cells:
            i = np.searchsorted(eps, float(r["epsilon"]))
            j = np.searchsorted(deltas, float(r["delta"]))
            h[i, j] = float(r["h"])
            bound[j] = 2.0 * float(r["a_delta"])
        mesh = ax.pcolormesh(deltas, eps, h, shading="nearest", vmin=0.0, vmax=1.0)
        curve = np.array([bound[j] for j in range(len(deltas))])
        inside = curve <= eps.max()
        line, = ax.plot(deltas[inside], curve[inside], "r--", linewidth=1.4)
        line.set_gid(f"{BOUNDARY_GID}-mu{mu}")
        ax.set_title(f"mu = {mu}")
        ax.set_xlabel("delta")
        ax.set_ylabel("epsilon")
        fig.colorbar(mesh, ax=ax, label="h")
    fig.tight_layout()
    _save(fig, spec.out)


def _series_label(detector, epsilon):
    return detector if epsilon == "" else f"{detector} eps={epsilon}"


def render_delay_curve(spec):
    series = {}
    order = []
    for path in spec.inputs:
        for r in read_rows(path, SWEEP_HEADER):
            key = (r["detector"], r["epsilon"])
            if key not in series:
                series[key] = []
                order.append(key)
            series[key].append((float(r["arl_est"]), float(r["wadd_est"])))
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    for key in order:
        pts = sorted(series[key])
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                marker="o", markersize=3.5, linewidth=1.2,
                label=_series_label(*key))
    if spec.log_x:
        ax.set_xscale("log")
    ax.set_xlabel("average run length")
    ax.set_ylabel("worst-case average delay")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, spec.out)


def render(spec):
    if spec.kind == "heatmap":
        render_heatmap(spec)
    else:
        render_delay_curve(spec)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="render", description="CSV artifacts to SVG figures")
    parser.add_argument("--kind", required=True, choices=["heatmap", "delay"])
    parser.add_argument("--in", dest="inputs", action="append", required=True, metavar="CSV")
    parser.add_argument("--out", required=True, metavar="SVG")
    parser.add_argument("--linear-x", action="store_true", help="linear ARL axis for delay curves")
    args = parser.parse_args(argv)
    kind = "delay_curve" if args.kind == "delay" else args.kind
    try:
        render(FigureSpec(tuple(args.inputs), kind, args.out, log_x=not args.linear_x))
    except (SchemaError, OSError) as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
