"""Eigenvalue surfaces of h0 (bare) and hm (with the real counter-diabatic term).

Writes one grid CSV per operator plus the trajectory overlay and a manifest.
"""

import argparse
import math
import time
from pathlib import Path

from nhsta.experiments import spectrum_surface, write_manifest
from nhsta.trajectory import TrajectorySpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/spectrum", help="output directory")
    ap.add_argument("--res", type=int, default=201, help="cells per axis")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs = {
        "h0": ("h0", TrajectorySpec(1.5, math.pi / 10, math.pi, "original")),
        "hm": ("hm", TrajectorySpec(1.5, math.pi / 10, math.pi, "modified")),
    }
    for name, (which, traj) in runs.items():
        started = time.perf_counter()
        grid = spectrum_surface(which, traj, res=args.res)
        files = [grid.to_csv(out / f"{name}.csv"), grid.overlay_to_csv(out / f"{name}_trajectory.csv")]
        write_manifest(out / f"{name}.json", {"which": which, "trajectory": traj.describe(), "res": args.res},
                       files, time.perf_counter() - started, notes=grid.notes)
        ok = ~grid.missing
        print(f"{name}: {ok.sum()} cells, min gap {grid.gap[ok].min():.3e}")


if __name__ == "__main__":
    main()
