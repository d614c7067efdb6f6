"""Run every CLI stage for both split strategies, then write report.md."""

import argparse
import sys

from noxcast.cli import main as cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", nargs="+", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-epochs", type=int)
    ap.add_argument("--force", action="store_true")
    args = ap.parse_args(argv)

    head = ["--out", args.out] + (["--force"] if args.force else [])
    common = ["--data", *args.data, "--seed", str(args.seed)]
    epochs = []
    if args.max_epochs:
        epochs = ["--max-epochs", str(args.max_epochs), "--patience", str(min(100, args.max_epochs))]

    steps = [["ingest", *common], ["stats", *common]]
    for strategy in ("temporal", "stratified"):
        s = ["--strategy", strategy]
        steps += [["split", *common, *s], ["train", *common, *s, *epochs], ["evaluate", *common, *s]]
    steps += [["importance", *common], ["profile", *common], ["optimize", *common], ["report"]]

    for step in steps:
        print("noxcast", " ".join(step), flush=True)
        if cli(head + step) != 0:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
