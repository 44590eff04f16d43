"""Conventional (h0 only, original loop) and shortcut (hm, modified loop) transfer runs."""

import argparse
import time
from pathlib import Path

from nhsta.experiments import conventional_configs, sta_configs, transfer_experiment, write_manifest


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/transfer", help="output directory")
    ap.add_argument("--periods", type=float, default=2.0, help="run length in periods")
    args = ap.parse_args()

    configs = {**conventional_configs(n_periods=1.0), **sta_configs(n_periods=args.periods)}
    started = time.perf_counter()
    results = transfer_experiment(configs, args.out)
    out = Path(args.out)
    write_manifest(out / "manifest.json", {"periods": args.periods}, [out / f"{n}.csv" for n in results],
                   time.perf_counter() - started, final={n: s.final for n, s in results.items()})
    for name, series in results.items():
        f = series.final
        print(f"{name:24s} t={f['t']:9.4f}  f_minus={f['f_minus']:.6f}  f_plus={f['f_plus']:.6f}")


if __name__ == "__main__":
    main()
