"""Command line harness: ``run``, ``summarize``, ``plot`` and ``monitor``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import metrics
from .config import ConfigError, ExperimentConfig, load_config
from .problems import problem as get_problem
from .records import RunRecord, read_records, write_records
from .strategies import StrategyConfig, train
from .svgplot import Series, errorbar_svg, line_svg

log = logging.getLogger("ritzbc")

METRICS = ("rel_l2_dirichlet", "rel_h1_dirichlet", "rel_l2_robin", "rel_h1_robin")
RECORDS_FILE = "records.csv"
CONFIG_FILE = "config.json"


# ---------------------------------------------------------------- run


def run_job(exp: ExperimentConfig, index: int, cfg: StrategyConfig) -> RunRecord:
    model = train(cfg)
    prob = get_problem(cfg.problem)
    errs = {m: None for m in METRICS}
    if not model.failed:
        u = model.model()
        rep = metrics.relative_errors(u, prob.dirichlet_ref, prob.domain, exp.error_samples, exp.error_seed)
        errs["rel_l2_dirichlet"], errs["rel_h1_dirichlet"] = rep.rel_l2, rep.rel_h1
        if prob.has_robin and cfg.strategy != "exactbc":
            rep = metrics.relative_errors(u, prob.robin_ref(cfg.lam), prob.domain, exp.error_samples,
                                          exp.error_seed, reference_label="robin")
            errs["rel_l2_robin"], errs["rel_h1_robin"] = rep.rel_l2, rep.rel_h1
    final = model.final_loss
    return RunRecord(
        run_index=index,
        problem=cfg.problem,
        strategy=cfg.strategy,
        lam=cfg.lam if cfg.strategy != "exactbc" else None,
        lam_p=cfg.lam_p if cfg.strategy == "pretrain" else None,
        distance=cfg.distance if cfg.strategy == "exactbc" else None,
        seed=cfg.seed,
        final_loss=final if math.isfinite(final) else None,
        failed=model.failed,
        failed_at=model.failed_at,
        iterations=cfg.total_iterations,
        wall_time=round(model.wall_time, 3),
        preset=exp.preset,
        config_hash=exp.config_hash,
        **errs,
    )


def _run_job_args(args):
    return run_job(*args)


def execute(exp: ExperimentConfig, jobs: int = 1) -> tuple[list[RunRecord], list[tuple[int, str]]]:
    """Run every job; returns records sorted by run index and ``(index, error)`` failures."""
    work = [(exp, i, cfg) for i, cfg in exp.jobs()]
    records, errors = [], []
    if jobs <= 1:
        for item in work:
            try:
                records.append(run_job(*item))
            except Exception as exc:  # keep completed rows
                errors.append((item[1], repr(exc)))
            log.info("run %d/%d done", item[1] + 1, len(work))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(item[1], pool.submit(_run_job_args, item)) for item in work]
            for index, fut in futures:
                try:
                    records.append(fut.result())
                except Exception as exc:
                    errors.append((index, repr(exc)))
    records.sort(key=lambda r: r.run_index)
    return records, errors


def cmd_run(args) -> int:
    exp = load_config(args.config, preset=args.preset, output=args.out)
    out = Path(exp.output)
    if (out / RECORDS_FILE).exists() and not args.force:
        print(f"error: {out / RECORDS_FILE} exists; pass --force to overwrite", file=sys.stderr)
        return 2
    out.mkdir(parents=True, exist_ok=True)
    resolved = exp.to_dict() | {"config_hash": exp.config_hash}
    (out / CONFIG_FILE).write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    records, errors = execute(exp, args.jobs)
    write_records(out / RECORDS_FILE, records)
    print(f"wrote {len(records)} records to {out / RECORDS_FILE}")
    for index, err in errors:
        print(f"run {index} raised: {err}", file=sys.stderr)
    return 1 if errors else 0


# ---------------------------------------------------------------- summarize

_SUPERSCRIPT = str.maketrans("-0123456789", "⁻⁰¹²³⁴⁵⁶⁷⁸⁹")


def format_pm(mean: float, std: float) -> str:
    """``(3.00 ± 1.41)·10⁻²`` with the exponent taken from the mean."""
    if mean == 0 or not math.isfinite(mean):
        return f"{mean:.2f} ± {std:.2f}"
    e = math.floor(math.log10(abs(mean)))
    scale = 10.0**e
    return f"({mean / scale:.2f} ± {std / scale:.2f})·10{str(e).translate(_SUPERSCRIPT)}"


def _setting_key(setting):
    # penalty settings sort numerically, distance ids alphabetically
    return (0, setting, "") if isinstance(setting, float) else (1, 0.0, str(setting))


def summarize(records: list[RunRecord]):
    """Per (problem, strategy, setting) statistics and the best setting per metric."""
    if not records:
        raise ValueError("no records to summarize")
    groups = defaultdict(list)
    for r in records:
        groups[(r.problem, r.strategy, r.setting)].append(r)
    rows = []
    for (prob, strat, setting), rs in sorted(groups.items(), key=lambda kv: (kv[0][:2], _setting_key(kv[0][2]))):
        row = {"problem": prob, "strategy": strat, "setting": setting, "n_runs": len(rs),
               "n_failed": sum(r.failed for r in rs)}
        for m in METRICS:
            vals = [None if r.failed else getattr(r, m) for r in rs]
            if all(v is None for v in vals):
                row[m] = None
                continue
            row[m] = metrics.ensemble(vals)
        rows.append(row)
    best = []
    by_ps = defaultdict(list)
    for row in rows:
        by_ps[(row["problem"], row["strategy"])].append(row)
    for (prob, strat), rs in by_ps.items():
        for m in METRICS:
            cands = [r for r in rs if r[m] is not None]
            if not cands:
                continue
            # ties go to the smaller λ (rows are already in ascending order)
            winner = min(cands, key=lambda r: r[m].mean)
            best.append({"problem": prob, "strategy": strat, "metric": m, "setting": winner["setting"],
                         "mean": winner[m].mean, "sample_std": winner[m].sample_std})
    return rows, best


def _setting_str(s):
    return f"{s:g}" if isinstance(s, float) else str(s)


def summary_text(rows, best) -> str:
    lines = []
    header = f"{'problem':8} {'strategy':9} {'setting':>13} {'runs':>4} {'fail':>4}  " + "  ".join(
        f"{m:>24}" for m in METRICS)
    lines.append(header)
    for r in rows:
        cells = [format_pm(r[m].mean, r[m].sample_std) if r[m] is not None else "-" for m in METRICS]
        lines.append(f"{r['problem']:8} {r['strategy']:9} {_setting_str(r['setting']):>13} {r['n_runs']:>4} "
                     f"{r['n_failed']:>4}  " + "  ".join(f"{c:>24}" for c in cells))
    lines.append("")
    for b in best:
        what = "λ" if isinstance(b["setting"], float) else "distance"
        lines.append(f"best {b['problem']}/{b['strategy']} {b['metric']}: {format_pm(b['mean'], b['sample_std'])} "
                     f"achieved for {what} = {_setting_str(b['setting'])}")
    return "\n".join(lines) + "\n"


def summary_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["problem", "strategy", "setting", "n_runs", "n_failed"]
    for m in METRICS:
        head += [f"{m}_mean", f"{m}_std"]
    w.writerow(head)
    for r in rows:
        cells = [r["problem"], r["strategy"], _setting_str(r["setting"]), r["n_runs"], r["n_failed"]]
        for m in METRICS:
            cells += [repr(r[m].mean), repr(r[m].sample_std)] if r[m] is not None else ["", ""]
        w.writerow(cells)
    return buf.getvalue()


def cmd_summarize(args) -> int:
    records = read_records(args.records)
    if not records:
        print("error: no records", file=sys.stderr)
        return 2
    rows, best = summarize(records)
    text = summary_text(rows, best)
    out = Path(args.out) if args.out else Path(args.records).parent
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.txt").write_text(text)
    (out / "summary.csv").write_text(summary_csv(rows))
    print(text, end="")
    return 0


# ---------------------------------------------------------------- plot


def _plot_records(path):
    rows, _ = summarize(read_records(path))
    series = defaultdict(list)
    for r in rows:
        if not isinstance(r["setting"], float):
            continue
        for m in METRICS:
            if r[m] is not None:
                series[f"{r['problem']}/{r['strategy']} {m}"].append((r["setting"], r[m].mean, r[m].sample_std))
    out = []
    for label, pts in series.items():
        pts.sort()
        out.append(Series(label, tuple(p[0] for p in pts), tuple(p[1] for p in pts), tuple(p[2] for p in pts)))
    if not out:
        raise ValueError("no λ series to plot")
    return out, errorbar_svg(out, title="relative error vs penalization strength")


def _plot_monitor(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError("empty monitor file")
    s = Series("|loss - energy|", tuple(float(r["iteration"]) for r in rows),
               tuple(float(r["abs_diff"]) for r in rows))
    return [s], line_svg([s], title="loss vs energy")


def cmd_plot(args) -> int:
    path = Path(args.input)
    first = path.read_text().split("\n", 1)[0]
    try:
        series, svg = _plot_records(path) if first.startswith("# schema:") else _plot_monitor(path)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "x", "y", "yerr"])
    for s in series:
        for k, (x, y) in enumerate(zip(s.x, s.y)):
            w.writerow([s.label, repr(x), repr(y), repr(s.err[k]) if s.err else "0.0"])
    out.with_suffix(".csv").write_text(buf.getvalue())
    print(f"wrote {out} and {out.with_suffix('.csv')}")
    return 0


# ---------------------------------------------------------------- monitor


def cmd_monitor(args) -> int:
    exp = load_config(args.config, preset=args.preset, output=args.out)
    if exp.monitor_every == 0:
        from dataclasses import replace
        exp = replace(exp, monitor_every=10)
    jobs = exp.jobs()
    if len(exp.strategies) != 1 or len(exp.settings(exp.strategies[0])) != 1:
        print("error: monitor needs exactly one strategy and one λ/distance", file=sys.stderr)
        return 2
    out = Path(exp.output)
    target = out / "monitor.csv"
    if target.exists() and not args.force:
        print(f"error: {target} exists; pass --force to overwrite", file=sys.stderr)
        return 2
    _, cfg = jobs[0]
    model = train(cfg)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "loss", "energy", "abs_diff"])
    for it, loss, energy in model.monitor_trace:
        w.writerow([it, repr(loss), repr(energy), repr(abs(loss - energy))])
    target.write_text(buf.getvalue())
    summary = metrics.monitor_divergence(model.monitor_trace)
    info = {"max_abs_diff": summary.max_abs_diff, "final_abs_diff": summary.final_abs_diff,
            "rows": len(model.monitor_trace), "failed": model.failed, "config_hash": exp.config_hash}
    (out / "monitor_summary.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    print(json.dumps(info, sort_keys=True))
    return 1 if model.failed else 0


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ritzbc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a λ × seed × strategy sweep")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--force", action="store_true")
    r.add_argument("--preset", choices=("paper", "desk"))
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("summarize", help="mean ± std tables from a records CSV")
    s.add_argument("records")
    s.add_argument("--out")
    s.set_defaults(func=cmd_summarize)

    pl = sub.add_parser("plot", help="SVG error-bar chart (records) or line chart (monitor CSV)")
    pl.add_argument("input")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)

    m = sub.add_parser("monitor", help="one training with loss-vs-energy monitoring")
    m.add_argument("--config", required=True)
    m.add_argument("--out")
    m.add_argument("--force", action="store_true")
    m.add_argument("--preset", choices=("paper", "desk"))
    m.set_defaults(func=cmd_monitor)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
