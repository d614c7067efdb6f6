"""Write synthetic gt_<year>.csv files with the public per-year record counts.

Useful for smoke-testing the pipeline when the real data is not at hand.
The numbers are invented; no conclusions carry over to the real turbine.
"""

import argparse
from pathlib import Path

from noxcast import synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scale", type=float, default=1.0, help="fraction of the public per-year counts")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for path in synthetic.write_csvs(args.out, seed=args.seed, scale=args.scale):
        print(path)


if __name__ == "__main__":
    main()
