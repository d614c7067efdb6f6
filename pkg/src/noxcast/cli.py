"""``noxcast`` command line: ingest, stats, split, train, evaluate, importance, profile, optimize, report.

Every subcommand reads the data files it needs and writes fixed-name
artifacts under the output directory (``--out``, else ``$NOXCAST_OUT``, else
``./noxcast_out``)::

    dataset_summary.json
    stats/correlation.csv, stats/column_summary.json
    <strategy>/split.csv, split.json
    <strategy>/model.json, history.csv
    <strategy>/metrics.json, metrics_<partition>.json, residuals_<partition>.csv
    <strategy>/importance.csv, importance.json
    <strategy>/profile_<VAR>.csv, profiles.json
    <strategy>/optimize.json, optimize_trace.csv
    report.md

Artifacts are write-once; pass ``--force`` to replace them. Seeds derive from
one global ``--seed`` plus a fixed offset per subsystem (see SEED_OFFSETS).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from noxcast import analysis, optimizer, stats
from noxcast.dataset import (
    DEFAULT_SCHEMA,
    PREDICTORS,
    DataError,
    find_data_files,
    load_csv,
    load_schema,
)
from noxcast.io import read_csv, read_json, write_csv, write_json, write_text_atomic
from noxcast.network import load_network, model_label, save_network
from noxcast.report import generate_report
from noxcast.trainer import (
    PARTITIONS,
    SplitAssignment,
    Strategy,
    TrainConfig,
    TrainingDiverged,
    as_partition,
    evaluate,
    split_stratified,
    split_temporal,
    train,
)

log = logging.getLogger("noxcast")

SEED_OFFSETS = {"split": 1, "train": 2, "importance": 3, "optimize": 4}
STRATEGY_DIRS = {"temporal": Strategy.TEMPORAL, "stratified": Strategy.STRATIFIED}


class CliError(Exception):
    pass


def derived_seed(global_seed: int, subsystem: str) -> int:
    return int(global_seed) + SEED_OFFSETS[subsystem]


# ---------------------------------------------------------------------------
# helpers


def out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get("NOXCAST_OUT", "noxcast_out"))


def _claim(args, path: Path) -> Path:
    if path.exists() and not args.force:
        raise CliError(f"{path} already exists; artifacts are write-once (use --force to replace)")
    return path


def load_data(args):
    if not args.data:
        raise CliError("no data given; pass --data <files or directory>")
    files = []
    for p in args.data:
        p = Path(p)
        if p.is_dir():
            found = find_data_files(p)
            if not found:
                raise CliError(f"no per-year CSV files in {p}")
            files.extend(found)
        elif p.is_file():
            files.append(p)
        else:
            raise CliError(f"data path not found: {p}")
    schema = load_schema(args.schema) if args.schema else DEFAULT_SCHEMA
    ds = load_csv(files, schema, years=args.year, strict=not args.lenient)
    for d in ds.diagnostics:
        log.warning("rejected %s", d)
    log.info("loaded %d records from %d files", len(ds), len(files))
    return ds


def strategy_dir(args) -> Path:
    return out_dir(args) / args.strategy


def read_split(args, ds) -> SplitAssignment:
    d = strategy_dir(args)
    if not (d / "split.csv").exists():
        raise CliError(f"missing {d / 'split.csv'}; run `noxcast split --strategy {args.strategy}` first")
    meta = read_json(d / "split.json")
    _, rows = read_csv(d / "split.csv")
    if len(rows) != len(ds):
        raise CliError(f"split has {len(rows)} rows but the data has {len(ds)} records")
    names = {p.value: i for i, p in enumerate(PARTITIONS)}
    labels = np.array([names[r[2]] for r in rows], dtype=np.int8)
    return SplitAssignment(labels, meta["strategy"], meta["parameters"], meta.get("seed"))


def read_model(args):
    path = strategy_dir(args) / "model.json"
    if not path.exists():
        raise CliError(f"missing {path}; run `noxcast train --strategy {args.strategy}` first")
    return load_network(path)


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args):
    ds = load_data(args)
    summary = ds.summary()
    summary["rejected"] = [str(d) for d in ds.diagnostics]
    summary["sources"] = [Path(s).name for s in ds.sources]
    path = write_json(_claim(args, out_dir(args) / "dataset_summary.json"), summary)
    print(json.dumps({k: summary[k] for k in ("n_records", "per_year")}))
    log.info("wrote %s", path)


def cmd_stats(args):
    ds = load_data(args)
    d = out_dir(args) / "stats"
    cm = stats.pearson_matrix(ds)
    write_text_atomic(_claim(args, d / "correlation.csv"), cm.to_csv())
    write_json(_claim(args, d / "column_summary.json"), {
        "n_records": len(ds),
        "bins": args.bins,
        "quartile_rule": "linear interpolation at (n-1)p",
        "columns": stats.column_report(ds, args.bins),
        "strong_pairs": [[a, b, r] for a, b, r in stats.strong_pairs(cm)],
    })
    if not (out_dir(args) / "dataset_summary.json").exists():
        write_json(out_dir(args) / "dataset_summary.json", ds.summary())
    print(cm.to_csv(digits=4), end="")


def cmd_split(args):
    ds = load_data(args)
    strategy = STRATEGY_DIRS[args.strategy]
    seed = derived_seed(args.seed, "split")
    if strategy is Strategy.TEMPORAL:
        split = split_temporal(ds, args.train_years, args.val_years, args.test_years)
    else:
        split = split_stratified(ds, args.fractions, seed)
    d = strategy_dir(args)
    write_csv(_claim(args, d / "split.csv"), ["ordinal", "year", "label"],
              zip(range(len(ds)), ds.years.tolist(), split.label_names()))
    write_json(_claim(args, d / "split.json"), {
        "strategy": split.strategy.value,
        "parameters": split.parameters,
        "seed": split.seed,
        "global_seed": args.seed,
        "counts": split.counts(),
    })
    print(json.dumps(split.counts()))


def _train_config(args) -> TrainConfig:
    cfg = {}
    if args.train_config:
        cfg.update(read_json(args.train_config))
    for key in ("learning_rate", "max_epochs", "patience", "penalty"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    cfg.setdefault("seed", derived_seed(args.seed, "train"))
    return TrainConfig.from_json(cfg)


def cmd_train(args):
    ds = load_data(args)
    split = read_split(args, ds)
    config = _train_config(args)
    d = strategy_dir(args)
    model_path = _claim(args, d / "model.json")
    hist_path = _claim(args, d / "history.csv")
    net, hist = train(ds, split, config)
    net.meta["global_seed"] = args.seed
    save_network(net, model_path)
    write_csv(hist_path, ["epoch", "train_loss", "validation_sse"], hist.rows())
    print(json.dumps({"best_epoch": hist.best_epoch, "stop_reason": hist.stop_reason,
                      "epochs": len(hist.train_loss), "validation_sse": hist.val_sse[hist.best_epoch - 1]}))


def cmd_evaluate(args):
    ds = load_data(args)
    split = read_split(args, ds)
    net = read_model(args)
    d = strategy_dir(args)
    combined = {"strategy": split.strategy.value, "model": model_label(net.layers),
                "seed": net.seed, "global_seed": args.seed, "partitions": {}}
    for part in PARTITIONS:
        if len(split.indices(part)) == 0:
            continue
        m = evaluate(net, ds, split, part).to_json()
        combined["partitions"][part.value] = m
        write_json(_claim(args, d / f"metrics_{part.value.lower()}.json"),
                   {**m, "strategy": split.strategy.value, "seed": net.seed})
        table = analysis.residual_table(net, ds, split, part)
        write_csv(_claim(args, d / f"residuals_{part.value.lower()}.csv"),
                  ["ordinal", "actual", "predicted", "residual"], table.rows())
    write_json(_claim(args, d / "metrics.json"), combined)
    print(json.dumps({p: round(m["RSquare"], 4) for p, m in combined["partitions"].items()}))


def cmd_importance(args):
    ds = load_data(args)
    split = read_split(args, ds)
    net = read_model(args)
    seed = derived_seed(args.seed, "importance")
    part = as_partition(args.partition)
    ranking = analysis.partition_importance(net, ds, split, part, args.repeats, seed)
    d = strategy_dir(args)
    write_csv(_claim(args, d / "importance.csv"), ["variable", "score", "std", "rank"],
              [(e.variable, e.score, e.std, e.rank) for e in ranking])
    write_json(_claim(args, d / "importance.json"), {
        "partition": part.value, "repeats": args.repeats, "seed": seed, "global_seed": args.seed,
        "metric": "mean R² drop under column permutation",
        "ranking": [e.__dict__ for e in ranking],
    })
    for e in ranking:
        print(f"{e.rank:2d} {e.variable:5s} {e.score:.5f} ± {e.std:.5f}")


def _base_point(args, ds):
    if args.base is None:
        return None
    if len(args.base) != len(PREDICTORS):
        raise CliError(f"--base needs {len(PREDICTORS)} values in order {', '.join(PREDICTORS)}")
    return np.array(args.base, dtype=np.float64)


def cmd_profile(args):
    ds = load_data(args)
    net = read_model(args)
    base = _base_point(args, ds)
    variables = args.variables or list(PREDICTORS)
    d = strategy_dir(args)
    ranges = {}
    curve = None
    for var in variables:
        curve = analysis.profile(net, ds, var, base, args.grid_n)
        write_csv(_claim(args, d / f"profile_{var}.csv"), ["grid", "prediction"],
                  zip(curve.grid.tolist(), curve.predictions.tolist()))
        ranges[var] = curve.range
    nox_iqr = stats.five_number_summary(ds.nox).iqr
    write_json(_claim(args, d / "profiles.json"), {
        "grid_n": args.grid_n,
        "base": dict(zip(PREDICTORS, curve.base.tolist())),
        "base_rule": "medians" if base is None else "explicit",
        "ranges": ranges,
        "nox_iqr": nox_iqr,
        "seed": net.seed,
    })
    for var, r in ranges.items():
        print(f"{var:5s} range {r:.4f} mg/m³ ({100 * r / nox_iqr:.1f}% of NOx IQR)")


def cmd_optimize(args):
    ds = load_data(args)
    net = read_model(args)
    seed = derived_seed(args.seed, "optimize")
    box = optimizer.BoxConstraints.from_dataset(ds)
    spec = optimizer.DesirabilitySpec(optimizer.Mode.MINIMIZE, float(ds.nox.min()), float(ds.nox.max()))
    res = optimizer.minimize_response(net, box, args.n_starts, seed, ds, spec)
    d = strategy_dir(args)
    write_json(_claim(args, d / "optimize.json"), {
        "x_star": res.settings(),
        "predicted_nox": res.predicted_nox,
        "desirability": res.desirability,
        "desirability_spec": {"mode": spec.mode.value, "y_low": spec.y_low, "y_high": spec.y_high, "s": spec.s},
        "box": {n: [lo, hi] for n, lo, hi in zip(PREDICTORS, box.lower.tolist(), box.upper.tolist())},
        "n_starts": res.n_starts,
        "n_evaluations": res.n_evaluations,
        "seed": seed,
        "global_seed": args.seed,
    })
    write_csv(_claim(args, d / "optimize_trace.csv"),
              ["start", "origin", "start_value", "final_value", "iterations"] + [f"x_{n}" for n in PREDICTORS],
              [(t.index, t.origin, t.start_value, t.final_value, t.iterations, *t.final.tolist())
               for t in res.trace])
    print(json.dumps({"predicted_nox": round(res.predicted_nox, 4), "x_star": res.settings()}))


def cmd_report(args):
    path = generate_report(out_dir(args))
    print(path)


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--data", nargs="+", help="per-year CSV files or directories holding them")
    p.add_argument("--schema", help="JSON column schema (canonical name -> source_name, unit)")
    p.add_argument("--year", type=int, help="year tag for the data files (overrides the file name)")
    p.add_argument("--lenient", action="store_true", help="drop malformed rows instead of failing")
    p.add_argument("--seed", type=int, default=0, help="global seed (default 0)")


def _strategy(p, default="stratified"):
    p.add_argument("--strategy", choices=sorted(STRATEGY_DIRS), default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noxcast", description=__doc__.splitlines()[0])
    parser.add_argument("--out", help="output directory (default $NOXCAST_OUT or ./noxcast_out)")
    parser.add_argument("--config", help="JSON file whose keys replace command-line flags")
    parser.add_argument("--force", action="store_true", help="overwrite existing artifacts")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load and validate the data, write dataset_summary.json")
    _common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="correlation matrix, boxplot summaries and histograms")
    _common(p)
    p.add_argument("--bins", type=int, default=30)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="assign records to train/validation/test")
    _common(p)
    _strategy(p)
    p.add_argument("--train-years", type=int, nargs="+", default=[2011, 2012, 2013])
    p.add_argument("--val-years", type=int, nargs="+", default=[2014])
    p.add_argument("--test-years", type=int, nargs="+", default=[2015])
    p.add_argument("--fractions", type=float, nargs=3, default=[0.6, 0.2, 0.2])
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="fit the network on a split")
    _common(p)
    _strategy(p)
    p.add_argument("--train-config", help="JSON TrainConfig")
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--penalty", type=float)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics and residuals per partition")
    _common(p)
    _strategy(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="permutation importance ranking")
    _common(p)
    _strategy(p)
    p.add_argument("--partition", default="Validation")
    p.add_argument("--repeats", type=int, default=10, help="permutations per variable (K)")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("profile", help="prediction profiler curves")
    _common(p)
    _strategy(p)
    p.add_argument("--grid-n", type=int, default=50)
    p.add_argument("--variables", nargs="+", choices=PREDICTORS)
    p.add_argument("--base", type=float, nargs="+", help="explicit base point (9 values)")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("optimize", help="search the box for the minimum predicted NOx")
    _common(p)
    _strategy(p)
    p.add_argument("--n-starts", type=int, default=32)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("report", help="assemble report.md from the artifacts")
    p.set_defaults(func=cmd_report)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            parser.error(f"config file not found: {path}")
        cfg = read_json(path)
        explicit = {a for a in (argv if argv is not None else sys.argv[1:]) if a.startswith("--")}
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            if not hasattr(args, dest):
                parser.error(f"unknown config key {key!r} for {args.command}")
            if "--" + dest.replace("_", "-") not in explicit:
                setattr(args, dest, value)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (CliError, DataError, TrainingDiverged, ValueError, KeyError, FileNotFoundError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"noxcast {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
