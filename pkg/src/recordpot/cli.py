"""Command-line interface.

Subcommands: ingest, mrl, fit, diagnose, forecast, correct, simulate.
Machine-readable output is JSON (seconds); human time renders as HH:MM:SS.
Exit codes: 0 success, 1 computational failure, 2 usage or schema error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace

import numpy as np

from . import load_reference_model
from .dataio import (
    dedup_best,
    load_results,
    mean_residual_life,
    read_exceedance_sets,
    select_threshold_by_count,
    write_exceedance_sets,
)
from .diagnostics import count_calibration, qq_exponential
from .errors import RecordPotError, SchemaError
from .forecast import (
    AftMode,
    RecordRef,
    aft_corrected_time,
    earliest_year_at_confidence,
    earliest_year_sub_threshold,
    equivalent_time,
    expected_new_record,
    expected_waiting_time,
    prob_record_before_year,
    prob_record_in_year,
    prob_sub_threshold,
    prob_sub_threshold_before_year,
    ultimate_time,
)
from .inference import FitConfig, aic, fit
from .model import GlobalModel
from .simgen import SimConfig, simulate, simulate_records
from .timefmt import format_hms, parse_time

FORECAST_ACTIONS = (
    "ultimate", "expected-record", "record-prob", "record-before",
    "earliest-year", "waiting-time", "sub-threshold", "equivalent",
)


def _open_in(path):
    return sys.stdin if path == "-" else open(path, "r")


def _emit(payload, out):
    text = json.dumps(payload, indent=2)
    if out in (None, "-"):
        print(text)
    else:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def _load_model(spec_path):
    """Load a model file; the literal name "paper" resolves to the committed
    published-estimate model."""
    if spec_path == "paper":
        return load_reference_model()
    with open(spec_path) as fh:
        payload = json.load(fh)
    model = GlobalModel.from_dict(payload["model"] if "model" in payload else payload)
    records = {
        d: RecordRef(discipline=d, seconds=float(r["seconds"]), year_set=int(r["year"]))
        for d, r in payload.get("records", {}).items()
    }
    return model, records


def _parse_range(text):
    lo, _, hi = text.partition(":")
    return int(lo), int(hi)


def _read_config_file(path):
    if not path:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise SchemaError("config file must contain a JSON object")
    return cfg


# ---------------------------------------------------------------------------
# subcommands

def cmd_ingest(args):
    result = load_results(_open_in(args.input))
    records = dedup_best(result.records)
    disciplines = args.disciplines or sorted({r.discipline for r in records})
    horizon = _parse_range(args.horizon) if args.horizon else None
    sets, thresholds = [], {}
    for d in disciplines:
        u, es = select_threshold_by_count(records, d, args.target, horizon)
        thresholds[d] = u
        sets.append(es)
    config = {
        "input": args.input, "target": args.target,
        "horizon": args.horizon, "disciplines": disciplines,
    }
    if args.out in (None, "-"):
        write_exceedance_sets(sys.stdout, sets, thresholds, extra={"config": config})
        print()
    else:
        write_exceedance_sets(args.out, sets, thresholds, extra={"config": config})
    if args.rejects and result.rejects:
        with open(args.rejects, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["line", "reason", "raw"])
            for r in result.rejects:
                w.writerow([r.line, r.reason, r.raw])
    if result.rejects:
        print(f"rejected {len(result.rejects)} row(s)", file=sys.stderr)
    return 0


def cmd_mrl(args):
    result = load_results(_open_in(args.input))
    records = dedup_best(result.records)
    seconds = np.array(
        [r.seconds for r in records if r.discipline == args.discipline]
    )
    if seconds.size == 0:
        raise SchemaError(f"no records for discipline {args.discipline!r}")
    # grid given as times (fast:slow:n); perf scale is negated and ascending
    fast, slow, n = args.grid.split(":")
    grid = -np.linspace(parse_time(slow), parse_time(fast), int(n))
    curve = mean_residual_life(-seconds, grid)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold_seconds", "mean_excess", "ci_half_width", "count"])
        for v, m, c, k in zip(curve.grid, curve.mean_excess, curve.ci_half_width,
                              curve.counts):
            w.writerow([-v, m, c, k])
    if args.svg:
        _plot_mrl(curve, args.svg, args.discipline)
    return 0


def _plot_mrl(curve, path, discipline):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ok = np.isfinite(curve.mean_excess)
    t = -curve.grid[ok]
    ax.plot(t, curve.mean_excess[ok], "k-")
    ax.fill_between(t, curve.mean_excess[ok] - curve.ci_half_width[ok],
                    curve.mean_excess[ok] + curve.ci_half_width[ok], alpha=0.3)
    ax.set_xlabel("threshold time (s)")
    ax.set_ylabel("mean excess (s)")
    ax.set_title(f"Mean residual life: {discipline}")
    ax.invert_xaxis()
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)


def cmd_fit(args):
    sets, thresholds = read_exceedance_sets(args.data)
    file_cfg = _read_config_file(args.config)
    cfg = FitConfig(
        max_evals=args.max_evals or file_cfg.get("max_evals", 40000),
        tol=args.tol or file_cfg.get("tol", 1e-6),
        multistart=args.multistart or file_cfg.get("multistart", 8),
        shared_xi=not args.per_discipline_xi
        if args.per_discipline_xi is not None else file_cfg.get("shared_xi", True),
        use_gamma=not args.no_gamma if args.no_gamma else file_cfg.get("use_gamma", True),
        use_delta=not args.no_delta if args.no_delta else file_cfg.get("use_delta", True),
        seed=args.seed if args.seed is not None else file_cfg.get("seed", 0),
        aft_start_year=file_cfg.get("aft_start_year", 2018),
        year_origin=file_cfg.get("year_origin", 2000),
    )
    thresholds.update(file_cfg.get("thresholds", {}))
    result = fit(sets, thresholds, cfg)
    payload = result.to_dict()
    payload["aic"] = aic(result)
    payload["config"] = {
        "max_evals": cfg.max_evals, "tol": cfg.tol, "multistart": cfg.multistart,
        "shared_xi": cfg.shared_xi, "use_gamma": cfg.use_gamma,
        "use_delta": cfg.use_delta, "seed": cfg.seed,
        "aft_start_year": cfg.aft_start_year, "year_origin": cfg.year_origin,
    }
    _emit(payload, args.out)
    return 0 if result.converged else 1


def cmd_diagnose(args):
    model, _ = _load_model(args.model)
    sets, _ = read_exceedance_sets(args.data)
    series = qq_exponential(model, sets, seed=args.seed)
    prefix = args.out_prefix
    with open(f"{prefix}_qq.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theoretical", "observed", "lower", "upper"])
        for row in zip(series.theoretical, series.observed, series.lower, series.upper):
            w.writerow(row)
    rows = count_calibration(model, sets)
    with open(f"{prefix}_counts.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["discipline", "year", "observed", "expected", "lower", "upper"])
        for r in rows:
            w.writerow([r.discipline, r.year, r.observed, r.expected, r.lower, r.upper])
    if args.svg:
        _plot_diagnostics(series, rows, prefix)
    return 0


def _plot_diagnostics(series, rows, prefix):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(series.theoretical, series.observed, "k.", ms=3)
    ax.plot(series.theoretical, series.theoretical, "r-", lw=1)
    ax.fill_between(series.theoretical, series.lower, series.upper, alpha=0.25)
    ax.set_xlabel("Exp(1) quantiles")
    ax.set_ylabel("transformed exceedances")
    fig.savefig(f"{prefix}_qq.svg", format="svg", bbox_inches="tight")
    plt.close(fig)

    disciplines = sorted({r.discipline for r in rows})
    fig, axes = plt.subplots(len(disciplines), 1,
                             figsize=(6, 2.2 * len(disciplines)), squeeze=False)
    for ax, d in zip(axes.ravel(), disciplines):
        sub = [r for r in rows if r.discipline == d]
        years = [r.year for r in sub]
        ax.plot(years, [r.expected for r in sub], "ko", ms=3, label="expected")
        ax.plot(years, [r.observed for r in sub], "rx", ms=4, label="observed")
        ax.vlines(years, [r.lower for r in sub], [r.upper for r in sub],
                  colors="k", lw=0.6)
        ax.set_ylabel(d)
    axes.ravel()[0].legend(loc="upper left", fontsize=8)
    fig.savefig(f"{prefix}_counts.svg", format="svg", bbox_inches="tight")
    plt.close(fig)


def _record_ref(args, records):
    if args.record is not None:
        if args.record_year is None:
            raise SchemaError("--record requires --record-year")
        return RecordRef(discipline=args.discipline,
                         seconds=parse_time(args.record), year_set=args.record_year)
    if args.discipline in records:
        return records[args.discipline]
    raise SchemaError(
        f"no record for {args.discipline!r} in the model file; pass --record/--record-year"
    )


def cmd_forecast(args):
    model, records = _load_model(args.model)
    mode = AftMode(args.mode)
    file_cfg = _read_config_file(args.config)
    origin = args.origin_year or file_cfg.get("forecast_origin_year", 2020)
    query = {
        "action": args.action, "discipline": args.discipline, "mode": mode.value,
        "model": args.model, "origin_year": origin,
    }
    out = {"query": query, "interval": None}

    if args.action == "ultimate":
        secs = ultimate_time(model, args.discipline, args.year, mode)
        out.update(year=args.year, seconds=secs, hms=format_hms(secs))
    elif args.action == "expected-record":
        rec = _record_ref(args, records)
        secs = expected_new_record(model, rec, args.year, mode)
        out.update(year=args.year, record_seconds=rec.seconds,
                   seconds=secs, hms=format_hms(secs))
    elif args.action == "record-prob":
        rec = _record_ref(args, records)
        out.update(year=args.year, record_seconds=rec.seconds,
                   probability=prob_record_in_year(model, rec, args.year, mode))
    elif args.action == "record-before":
        rec = _record_ref(args, records)
        out.update(year=args.year, record_seconds=rec.seconds,
                   probability=prob_record_before_year(model, rec, args.year, mode,
                                                       origin_year=origin))
    elif args.action == "earliest-year":
        rec = _record_ref(args, records)
        out.update(level=args.level, record_seconds=rec.seconds,
                   year=earliest_year_at_confidence(model, rec, args.level, mode,
                                                    origin_year=origin))
    elif args.action == "waiting-time":
        rec = _record_ref(args, records)
        wt = expected_waiting_time(model, rec, mode, origin_year=origin)
        out.update(record_seconds=rec.seconds, years=wt.years,
                   truncated_at_year=wt.truncated_at_year,
                   truncation_mass=wt.truncation_mass)
    elif args.action == "sub-threshold":
        if args.target is None:
            raise SchemaError("sub-threshold requires --target")
        target = parse_time(args.target)
        out.update(target_seconds=target, year=args.year,
                   probability=prob_sub_threshold(model, args.discipline, target,
                                                  args.year, mode))
        if args.year > origin:
            out["cumulative_probability"] = prob_sub_threshold_before_year(
                model, args.discipline, target, args.year, mode, origin_year=origin)
        if args.level:
            out["earliest_year_at_level"] = earliest_year_sub_threshold(
                model, args.discipline, target, args.level, mode, origin_year=origin)
    elif args.action == "equivalent":
        if args.target_discipline is None or args.time is None:
            raise SchemaError("equivalent requires --target-discipline and --time")
        secs = equivalent_time(model, args.discipline, args.target_discipline,
                               parse_time(args.time), args.year, mode)
        out.update(year=args.year, source_seconds=parse_time(args.time),
                   target_discipline=args.target_discipline,
                   seconds=secs, hms=format_hms(secs))
    _emit(out, args.out)
    return 0


def cmd_correct(args):
    model, _ = _load_model(args.model)
    seconds = parse_time(args.time)
    corrected = aft_corrected_time(model, args.discipline, args.year, seconds)
    _emit(
        {
            "query": {"action": "correct", "discipline": args.discipline,
                      "year": args.year, "time_seconds": seconds,
                      "model": args.model},
            "seconds": corrected,
            "hms": format_hms(corrected),
            "correction_seconds": corrected - seconds,
        },
        args.out,
    )
    return 0


def cmd_simulate(args):
    model, _ = _load_model(args.model)
    cfg = SimConfig(model=model, horizon=_parse_range(args.horizon), seed=args.seed,
                    athlete_pool=args.athlete_pool)
    if args.records:
        records = simulate_records(cfg)
        stream = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
        w = csv.writer(stream)
        w.writerow(["discipline", "athlete", "year", "seconds"])
        for r in records:
            w.writerow([r.discipline, r.athlete, r.year, f"{r.seconds:.3f}"])
        if stream is not sys.stdout:
            stream.close()
    else:
        sets = simulate(cfg)
        extra = {"config": {"seed": args.seed, "horizon": args.horizon,
                            "athlete_pool": args.athlete_pool, "model": args.model}}
        if args.out in (None, "-"):
            write_exceedance_sets(sys.stdout, sets.values(), model.thresholds, extra)
            print()
        else:
            write_exceedance_sets(args.out, sets.values(), model.thresholds, extra)
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="recordpot", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="CSV results -> deduped exceedance-set JSON")
    p.add_argument("--input", default="-")
    p.add_argument("--out", default="-")
    p.add_argument("--target", type=int, default=200)
    p.add_argument("--horizon", help="inclusive year range lo:hi")
    p.add_argument("--disciplines", nargs="*")
    p.add_argument("--rejects", help="CSV path for the rejected-row report")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("mrl", help="mean residual life diagnostic")
    p.add_argument("--input", default="-")
    p.add_argument("--discipline", required=True)
    p.add_argument("--grid", required=True,
                   help="fastest:slowest:n candidate threshold times")
    p.add_argument("--out", required=True)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_mrl)

    p = sub.add_parser("fit", help="joint maximum-likelihood fit")
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--config")
    p.add_argument("--max-evals", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--multistart", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--per-discipline-xi", action="store_true", default=None)
    p.add_argument("--no-gamma", action="store_true")
    p.add_argument("--no-delta", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="QQ and count-calibration diagnostics")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("forecast", help="derived forecasts from a fitted model")
    p.add_argument("action", choices=FORECAST_ACTIONS)
    p.add_argument("--model", default="paper")
    p.add_argument("--discipline", required=True)
    p.add_argument("--mode", choices=[m.value for m in AftMode],
                   default=AftMode.WITH_AFT.value)
    p.add_argument("--year", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--target", help="target time for sub-threshold")
    p.add_argument("--time", help="source time for equivalent")
    p.add_argument("--target-discipline")
    p.add_argument("--record", help="record time, HH:MM:SS or seconds")
    p.add_argument("--record-year", type=int)
    p.add_argument("--origin-year", type=int)
    p.add_argument("--config")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("correct", help="AFT-corrected equivalent time")
    p.add_argument("--model", default="paper")
    p.add_argument("--discipline", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--time", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("simulate", help="seeded synthetic seasons from a model")
    p.add_argument("--model", default="paper")
    p.add_argument("--horizon", required=True, help="inclusive year range lo:hi")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--athlete-pool", type=int, default=500)
    p.add_argument("--records", action="store_true",
                   help="emit raw PerformanceRecord CSV instead of exceedance JSON")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RecordPotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
