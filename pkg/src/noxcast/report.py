"""Markdown report assembled from the artifacts of a run directory.

The report only reads artifacts and contains no timestamps, so regenerating
it from unchanged artifacts gives the same bytes.
"""

from __future__ import annotations

from pathlib import Path

from noxcast.io import read_csv, read_json, write_text_atomic

METRIC_ROWS = ("RSquare", "RMSE", "Mean Abs Dev", "-LogLikelihood", "SSE", "Sum Freq")
STRATEGIES = (("temporal", "TemporalByYear"), ("stratified", "StratifiedByYear"))


def _fmt(v, digits=4):
    if isinstance(v, int):
        return str(v)
    return f"{v:.{digits}f}"


def _table(header, rows):
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines)


def _not_run(what, how):
    return f"_Not run._ Missing {what}; run `{how}`."


def _caption(split_meta) -> str:
    p = split_meta["parameters"]
    if split_meta["strategy"] == "TemporalByYear":
        years = lambda ys: "Y" + "-".join(str(y) for y in ([ys[0], ys[-1]] if len(ys) > 1 else ys))
        return (f"Trained with {years(p['train_years'])} data, validated with {years(p['val_years'])} data, "
                f"tested with {years(p['test_years'])} data")
    f = [round(100 * x) for x in p["fractions"]]
    return (f"Stratified by year: {f[0]}% training, {f[1]}% validation, {f[2]}% test "
            f"(seed {split_meta.get('seed')})")


def _data_section(root: Path) -> list[str]:
    out = ["## Data", ""]
    path = root / "dataset_summary.json"
    if not path.exists():
        return out + [_not_run("dataset_summary.json", "noxcast ingest --data <files>"), ""]
    s = read_json(path)
    out.append(f"{s['n_records']} records. Source: `{path.name}`.")
    out.append("")
    out.append(_table(["Year", "Records"], sorted(s["per_year"].items())))
    out.append("")
    rows = [(n, c.get("unit", ""), _fmt(c["min"]), _fmt(c["mean"]), _fmt(c["max"])) for n, c in s["columns"].items()]
    out.append(_table(["Column", "Unit", "Min", "Mean", "Max"], rows))
    return out + [""]


def _stats_section(root: Path) -> list[str]:
    out = ["## Correlation analysis of process response and process variables", ""]
    cpath = root / "stats" / "correlation.csv"
    if not cpath.exists():
        return out + [_not_run("stats/correlation.csv", "noxcast stats --data <files>"), ""]
    header, rows = read_csv(cpath)
    out.append(_table(["", *header[1:]], [[r[0], *(f"{float(v):.4f}" for v in r[1:])] for r in rows]))
    out += ["", f"Source: `stats/{cpath.name}`.", ""]
    spath = root / "stats" / "column_summary.json"
    if spath.exists():
        s = read_json(spath)
        pairs = ", ".join(f"{a}-{b} ({r:.4f})" for a, b, r in s["strong_pairs"])
        out += [f"Pairs with correlation above 0.8: {pairs or 'none'}.", ""]
        out.append("### Boxplot summaries")
        out.append("")
        rows = []
        for name, c in s["columns"].items():
            b = c["boxplot"]
            rows.append((name, _fmt(b["q1"]), _fmt(b["median"]), _fmt(b["q3"]), _fmt(b["lower_fence"]),
                         _fmt(b["upper_fence"]), b["n_outliers"]))
        out.append(_table(["Column", "Q1", "Median", "Q3", "Lower fence", "Upper fence", "Outside fences"], rows))
        out += ["", f"Histogram counts ({s['bins']} bins) in `stats/{spath.name}`.", ""]
    return out


def _metrics_section(root: Path) -> list[str]:
    out = ["## Training, validation and test results", ""]
    columns, captions = [], []
    for dirname, _ in STRATEGIES:
        mpath = root / dirname / "metrics.json"
        spath = root / dirname / "split.json"
        if not (mpath.exists() and spath.exists()):
            captions.append(f"- **{dirname}**: " + _not_run(f"{dirname}/metrics.json",
                                                              f"noxcast split/train/evaluate --strategy {dirname}"))
            continue
        m = read_json(mpath)
        captions.append(f"- **{dirname}**: {_caption(read_json(spath))}. Model {m['model']}. "
                        f"Source: `{dirname}/{mpath.name}`.")
        for part, values in m["partitions"].items():
            columns.append((f"{dirname} {part}", values))
    out += captions + [""]
    if columns:
        rows = []
        for key in METRIC_ROWS:
            digits = 7 if key == "RSquare" else 4
            rows.append([key, *(_fmt(vals[key], digits) for _, vals in columns)])
        out.append(_table(["Measure", *(c for c, _ in columns)], rows))
        out.append("")
    return out


def _importance_section(root: Path) -> list[str]:
    out = ["## Ranking of process variable importance", ""]
    path = root / "stratified" / "importance.csv"
    if not path.exists():
        return out + [_not_run("stratified/importance.csv", "noxcast importance --strategy stratified"), ""]
    meta = read_json(root / "stratified" / "importance.json")
    _, rows = read_csv(path)
    out.append(_table(["Rank", "Variable", "Mean R² drop", "Std"],
                      [(r[3], r[0], f"{float(r[1]):.5f}", f"{float(r[2]):.5f}") for r in rows]))
    out += ["", f"{meta['repeats']} permutations per variable on the {meta['partition']} partition, "
                f"seed {meta['seed']}. Source: `stratified/{path.name}`.", ""]
    return out


def _profile_section(root: Path) -> list[str]:
    out = ["## Prediction profile", ""]
    path = root / "stratified" / "profiles.json"
    if not path.exists():
        return out + [_not_run("stratified/profiles.json", "noxcast profile --strategy stratified"), ""]
    p = read_json(path)
    iqr = p["nox_iqr"]
    rows = [(v, _fmt(p["base"][v]), _fmt(r), f"{100 * r / iqr:.1f}%", f"`stratified/profile_{v}.csv`")
            for v, r in p["ranges"].items()]
    out.append(_table(["Variable", "Base value", "Curve range (mg/m³)", "Range / NOx IQR", "Curve data"], rows))
    out += ["", f"Base point: {p['base_rule']}; {p['grid_n']} grid points per curve.", ""]
    return out


def _optimum_section(root: Path) -> list[str]:
    out = ["## Settings for minimum predicted NOx", ""]
    path = root / "stratified" / "optimize.json"
    if not path.exists():
        return out + [_not_run("stratified/optimize.json", "noxcast optimize --strategy stratified"), ""]
    o = read_json(path)
    out.append(f"Predicted NOx at the optimum: **{o['predicted_nox']:.4f} mg/m³** "
               f"(desirability {o['desirability']:.4f}, {o['n_starts']} starts, seed {o['seed']}).")
    out.append("")
    out.append(_table(["Variable", "Setting", "Box lower", "Box upper"],
                      [(n, _fmt(x), _fmt(o["box"][n][0]), _fmt(o["box"][n][1])) for n, x in o["x_star"].items()]))
    out += ["", "Source: `stratified/optimize.json`; per-start trace in `stratified/optimize_trace.csv`.", ""]
    return out


def _diagnostics_section(root: Path) -> list[str]:
    out = ["## Actual vs predicted and residuals", ""]
    found = False
    for dirname, _ in STRATEGIES:
        files = sorted((root / dirname).glob("residuals_*.csv")) if (root / dirname).exists() else []
        if files:
            found = True
            out.append(f"- {dirname}: " + ", ".join(f"`{dirname}/{f.name}`" for f in files))
    if not found:
        out.append(_not_run("residual tables", "noxcast evaluate"))
    out.append("")
    out.append("Each residual file lists ordinal, actual, predicted and residual (actual - predicted) per record.")
    return out + [""]


def render_report(root) -> str:
    root = Path(root)
    lines = ["# NOx prediction report", ""]
    for section in (_data_section, _stats_section, _metrics_section, _importance_section,
                    _profile_section, _optimum_section, _diagnostics_section):
        lines += section(root)
    return "\n".join(lines).rstrip() + "\n"


def generate_report(root) -> Path:
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"run directory not found: {root}; run `noxcast ingest` or `noxcast stats` first")
    return write_text_atomic(root / "report.md", render_report(root))
