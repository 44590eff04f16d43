"""Terminal F_+ under multiplicative deviations of two quantities at a time.

Defaults: r = 1.5, omega = 100 pi, phi0 = pi, +-5 %, 41 x 41 cells per grid.
"""

import argparse
import os
import time
from pathlib import Path

import numpy as np

from nhsta.experiments import SweepSpec, sensitivity_sweep, write_manifest

PAIRS = [("r", "omega"), ("k", "epsilon"), ("k", "omega_c"), ("epsilon", "omega_c")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/sensitivity", help="output directory")
    ap.add_argument("--range", type=float, default=0.05)
    ap.add_argument("--res", type=int, default=41)
    ap.add_argument("--jobs", type=int, default=min(8, os.cpu_count() or 1))
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for axes in PAIRS:
        started = time.perf_counter()
        grid = sensitivity_sweep(SweepSpec(axes=axes, range=args.range, res=args.res), jobs=args.jobs)
        path = grid.to_csv(out / f"{axes[0]}_{axes[1]}.csv")
        write_manifest(path.with_suffix(".json"), grid.manifest["spec"], [path],
                       time.perf_counter() - started, jobs=args.jobs)
        f = grid.f_plus
        print(f"{axes[0]:>7s} x {axes[1]:<7s}  min {np.nanmin(f):.6f}  max {np.nanmax(f):.6f}  "
              f"spread {np.nanmax(f) - np.nanmin(f):.2e}  ({time.perf_counter() - started:.1f}s)")


if __name__ == "__main__":
    main()
