"""Render publication figures from ncglab CSV bundles.

Four figure kinds, each reading one CSV product of the primary CLI:

  spectrum-compare   spectrum.csv       two panels: spectra overlay, difference
  heatmap            heatmap*.csv       matrix element map, scale symmetric at 0
  family-spectra     family_spectra.csv eigenvalues per cutoff, both operators
  estimates          estimates.csv      dimension / volume / beta convergence

The scripts only render; no physics is recomputed.  Rendering is
deterministic: fixed figure sizes, fixed color scales, PNG output without
embedded timestamps, rows consumed in file order.

Exit codes: 0 success, 2 missing inputs or malformed columns.
"""

import argparse
import csv
import os
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("spectrum-compare", "heatmap", "family-spectra", "estimates")

FIGSIZE = (6.4, 4.8)
DPI = 150


class RenderError(Exception):
    """Bad or missing input; mapped to exit code 2."""


def _read_rows(path, required):
    if not os.path.exists(path):
        raise RenderError(f"input not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [c for c in required if c not in fields]
        if missing:
            raise RenderError(
                f"{path}: missing columns {missing}, found {fields}")
        rows = list(reader)
    if not rows:
        raise RenderError(f"{path}: no data rows")
    return rows


def _save(fig, path):
    fig.savefig(path, dpi=DPI, metadata={"Software": "render_figures"})
    plt.close(fig)


def render_spectrum_compare(bundle, out):
    rows = _read_rows(os.path.join(bundle, "spectrum.csv"),
                      ["index", "eigenvalue", "source"])
    by_source = defaultdict(list)
    for row in rows:
        by_source[row["source"]].append(
            (int(row["index"]), float(row["eigenvalue"])))
    for need in ("best", "exact"):
        if need not in by_source:
            raise RenderError(
                f"spectrum.csv: no rows with source '{need}'")
    fig, (top, bottom) = plt.subplots(
        2, 1, figsize=FIGSIZE, sharex=True,
        gridspec_kw={"height_ratios": [2, 1]})
    markers = {"best": "o", "average": "s", "exact": "+"}
    for source in ("exact", "best", "average"):
        if source not in by_source:
            continue
        pts = sorted(by_source[source])
        top.plot([i for i, _ in pts], [v for _, v in pts],
                 markers.get(source, "."), ms=4, label=source,
                 fillstyle="none")
    top.set_ylabel("eigenvalue")
    top.legend(loc="upper left")
    best = np.array([v for _, v in sorted(by_source["best"])])
    exact = np.array([v for _, v in sorted(by_source["exact"])])
    if len(best) != len(exact):
        raise RenderError("spectrum.csv: best and exact spectra differ in size")
    bottom.plot(np.arange(len(best)), best - exact, "o", ms=3)
    bottom.axhline(0.0, color="0.6", lw=0.8)
    bottom.set_xlabel("index")
    bottom.set_ylabel("difference")
    path = os.path.join(out, "spectrum-compare.png")
    _save(fig, path)
    return [path]


def _read_heatmap_grid(path):
    """Real-part grid of an ncglab heatmap CSV ('# key,value' metadata lines,
    then '# part: ...' sections of matrix rows)."""
    grids, meta = {}, {}
    current, rows = None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# part: "):
                if current is not None:
                    grids[current] = np.array(rows, dtype=float)
                current, rows = line[len("# part: "):], []
            elif line.startswith("# "):
                key, _, val = line[2:].partition(",")
                meta[key] = val
            else:
                rows.append([float(x) for x in line.split(",")])
    if current is not None:
        grids[current] = np.array(rows, dtype=float)
    if "real" not in grids:
        raise RenderError(f"{path}: missing columns ['part: real'], "
                          f"found parts {sorted(grids)}")
    return meta, grids["real"]


def render_heatmap(bundle, out):
    names = sorted(n for n in os.listdir(bundle)
                   if n.startswith("heatmap") and n.endswith(".csv"))
    if not names:
        raise RenderError(f"input not found: {os.path.join(bundle, 'heatmap*.csv')}")
    written = []
    for name in names:
        meta, grid = _read_heatmap_grid(os.path.join(bundle, name))
        vmax = float(np.max(np.abs(grid))) or 1.0
        fig, ax = plt.subplots(figsize=FIGSIZE)
        im = ax.imshow(grid, cmap="RdBu_r", vmin=-vmax, vmax=vmax,
                       interpolation="nearest")
        fig.colorbar(im, ax=ax)
        ax.set_title(f"{meta.get('model', '?')} defect, "
                     f"cutoff {meta.get('cutoff', '?')}")
        path = os.path.join(out, name[:-4] + ".png")
        _save(fig, path)
        written.append(path)
    return written


def render_family_spectra(bundle, out):
    rows = _read_rows(os.path.join(bundle, "family_spectra.csv"),
                      ["cutoff", "index", "eigenvalue", "operator"])
    by_op = defaultdict(lambda: defaultdict(list))
    for row in rows:
        by_op[row["operator"]][int(row["cutoff"])].append(
            float(row["eigenvalue"]))
    fig, ax = plt.subplots(figsize=FIGSIZE)
    markers = {"sphere": "+", "family": "o"}
    for op in sorted(by_op):
        xs, ys = [], []
        for cutoff, vals in sorted(by_op[op].items()):
            xs += [cutoff] * len(vals)
            ys += sorted(vals)
        ax.plot(xs, ys, markers.get(op, "."), ms=4, label=op,
                fillstyle="none")
    ax.set_xlabel("cutoff")
    ax.set_ylabel("eigenvalue")
    ax.legend(loc="upper left")
    path = os.path.join(out, "family-spectra.png")
    _save(fig, path)
    return [path]


def render_estimates(bundle, out):
    rows = _read_rows(os.path.join(bundle, "estimates.csv"),
                      ["cutoff", "operator", "dimension", "volume", "beta"])
    series = defaultdict(lambda: defaultdict(list))
    for row in rows:
        for col in ("dimension", "volume", "beta"):
            series[col][row["operator"]].append(
                (int(row["cutoff"]), float(row[col])))
    fig, axes = plt.subplots(3, 1, figsize=(FIGSIZE[0], 7.2), sharex=True)
    targets = {"dimension": 2.0, "volume": 4 * np.pi, "beta": None}
    for ax, col in zip(axes, ("dimension", "volume", "beta")):
        for op in sorted(series[col]):
            pts = sorted(series[col][op])
            ax.plot([c for c, _ in pts], [v for _, v in pts], "o-",
                    ms=4, label=op, fillstyle="none")
        if targets[col] is not None:
            ax.axhline(targets[col], color="0.6", lw=0.8)
        ax.set_ylabel(col)
        ax.legend(loc="best")
    axes[-1].set_xlabel("cutoff")
    path = os.path.join(out, "estimates.png")
    _save(fig, path)
    return [path]


RENDERERS = {
    "spectrum-compare": render_spectrum_compare,
    "heatmap": render_heatmap,
    "family-spectra": render_family_spectra,
    "estimates": render_estimates,
}

# bundle files whose presence selects a kind when --kinds is not given
_KIND_INPUTS = {
    "spectrum-compare": "spectrum.csv",
    "heatmap": "heatmap.csv",
    "family-spectra": "family_spectra.csv",
    "estimates": "estimates.csv",
}


def _detect_kinds(bundle):
    kinds = []
    for kind, name in _KIND_INPUTS.items():
        if kind == "heatmap":
            present = any(n.startswith("heatmap") and n.endswith(".csv")
                          for n in os.listdir(bundle))
        else:
            present = os.path.exists(os.path.join(bundle, name))
        if present:
            kinds.append(kind)
    return kinds


def run_command(argv):
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="render figures from an ncglab CSV bundle")
    parser.add_argument("--bundle", required=True, help="input CSV directory")
    parser.add_argument("--out", required=True, help="output image directory")
    parser.add_argument("--kinds", nargs="+", choices=KINDS,
                        help="figure kinds to render (default: all with "
                             "inputs present)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    if not os.path.isdir(args.bundle):
        print(f"error: bundle directory not found: {args.bundle}",
              file=sys.stderr)
        return 2
    kinds = args.kinds or _detect_kinds(args.bundle)
    if not kinds:
        print(f"error: no renderable inputs in {args.bundle} "
              f"(expected one of {sorted(_KIND_INPUTS.values())})",
              file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    try:
        for kind in kinds:
            for path in RENDERERS[kind](args.bundle, args.out):
                print(path)
    except (RenderError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
