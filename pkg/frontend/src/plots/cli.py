"""Render every figure a simulation bundle supports.

Usage: render --manifest PATH --out DIR

The manifest is the one the simulation CLI wrote next to its CSVs; the
figure set is chosen from the recorded command (a sweep bundle yields
the share-curve family, trajectory bundles yield time-series and, for
3+ strategies, simplex orbit plots).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .figures import FigureSpec, PlotError, read_trajectory, render


def figures_for_manifest(manifest_path, out_dir) -> list[FigureSpec]:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    bundle_dir = manifest_path.parent
    out_dir = Path(out_dir)
    csvs = sorted(
        bundle_dir / name for name in manifest.get("checksums", {}) if name.endswith(".csv")
    )
    specs: list[FigureSpec] = []
    share_tables = [p for p in csvs if p.name == "share_curve.csv"]
    trajectories = [p for p in csvs if p.name != "share_curve.csv"]
    for table in share_tables:
        specs.append(
            FigureSpec(
                kind="share_curve",
                inputs=(str(table),),
                output=str(out_dir / "share_curve.png"),
            )
        )
    if trajectories:
        arity = read_trajectory(trajectories[0]).states.shape[1]
        specs.append(
            FigureSpec(
                kind="time_series",
                inputs=tuple(str(p) for p in trajectories),
                output=str(out_dir / "time_series.png"),
            )
        )
        if arity >= 3:
            specs.append(
                FigureSpec(
                    kind="simplex_orbit",
                    inputs=tuple(str(p) for p in trajectories),
                    output=str(out_dir / "simplex_orbit.png"),
                )
            )
    if not specs:
        raise PlotError(f"{manifest_path}: bundle contains no plottable CSVs")
    return specs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="render", description=__doc__)
    parser.add_argument("--manifest", required=True, help="manifest.json of a simulation bundle")
    parser.add_argument("--out", required=True, help="directory for the rendered images")
    args = parser.parse_args(argv)
    try:
        specs = figures_for_manifest(args.manifest, args.out)
        written = [render(spec) for spec in specs]
    except (PlotError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
