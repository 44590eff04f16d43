"""Time series of k, kappa, epsilon, delta and Omega along the modified loop."""

import argparse
import math
from pathlib import Path

from nhsta.experiments import shapes, shapes_to_csv
from nhsta.trajectory import TrajectorySpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/shapes.csv")
    ap.add_argument("--samples", type=int, default=2001)
    args = ap.parse_args()

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    data = shapes(TrajectorySpec(1.5, math.pi / 10, math.pi, "modified"), args.samples)
    shapes_to_csv(data, args.out)
    for name in ("k", "kappa", "epsilon", "delta", "omega_c"):
        print(f"{name:8s} [{data[name].min():+.5f}, {data[name].max():+.5f}]")


if __name__ == "__main__":
    main()
