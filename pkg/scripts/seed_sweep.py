"""Train the stratified split under several global seeds and print R² per partition.

Seeds are derived exactly as the CLI derives them, so any row can be
reproduced with `noxcast split/train --seed G`.
"""

import argparse
from pathlib import Path

from noxcast.cli import SEED_OFFSETS
from noxcast.dataset import find_data_files, load_csv
from noxcast.trainer import PARTITIONS, TrainConfig, evaluate, split_stratified, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("data", type=Path)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--max-epochs", type=int, default=2000)
    args = ap.parse_args()

    ds = load_csv(find_data_files(args.data))
    print("seed\t" + "\t".join(p.value for p in PARTITIONS) + "\tepoch\tstop")
    for g in args.seeds:
        split = split_stratified(ds, (0.6, 0.2, 0.2), g + SEED_OFFSETS["split"])
        cfg = TrainConfig(seed=g + SEED_OFFSETS["train"], max_epochs=args.max_epochs,
                          patience=min(100, args.max_epochs))
        net, hist = train(ds, split, cfg)
        r2 = [evaluate(net, ds, split, p).r_square for p in PARTITIONS]
        print(f"{g}\t" + "\t".join(f"{r:.4f}" for r in r2) + f"\t{hist.best_epoch}\t{hist.stop_reason}")


if __name__ == "__main__":
    main()
