"""``lob`` command line front end.

Subcommands: shape, spread-forecast (alias forecast), calibrate,
queue-value, simulate.  Model parameters come from an optional TOML file
(``--config``) and are overridden by flags.  See docs/cli.md.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .calibration import DailyObservation, ForecastRow, fit_shape, forecast_report
from .distributions import jump_law_from_config, volume_law_from_config
from .equilibrium import EquilibriumBook, MarketParams
from .simulator import SimConfig, run
from .ticked_book import QUEUE_CONVENTIONS, DiscreteBook, TickGrid

SHAPE_HEADER = ["side", "index", "price_offset", "level_volume", "cumulative_volume", "level_gain", "queue_value"]


class CliError(Exception):
    pass


def fmt(x: float) -> str:
    """Fixed 12-significant-digit scientific form used in every CSV."""
    return f"{x:.11e}"


def _check(name: str, value: float, lo: float | None = None, strict: bool = True) -> float:
    if not math.isfinite(value):
        raise CliError(f"{name} must be finite, got {value!r}")
    if lo is not None and (value <= lo if strict else value < lo):
        rel = ">" if strict else ">="
        raise CliError(f"{name} must be {rel} {lo:g}, got {value!r}")
    return value


# Configuration


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise CliError(f"{path}: {exc}") from None


def _group(cfg: dict, name: str) -> dict:
    g = cfg.get(name, {})
    if not isinstance(g, dict):
        raise CliError(f"config group [{name}] must be a table")
    return dict(g)


def _override(group: dict, key: str, value: Any) -> None:
    if value is not None:
        group[key] = value


def build_params(args: argparse.Namespace, cfg: dict) -> MarketParams:
    jump = _group(cfg, "jump")
    jump.setdefault("family", "pareto")
    _override(jump, "k", args.k)
    _override(jump, "x0", args.x0)
    volume = _group(cfg, "volume")
    volume.setdefault("family", "normal")
    _override(volume, "sigma", args.sigma)
    market = _group(cfg, "market")
    _override(market, "r", args.r)
    _override(market, "lambda_i", getattr(args, "lambda_i", None))
    _override(market, "lambda_u", getattr(args, "lambda_u", None))

    if jump.get("family") == "pareto":
        if "k" in jump:
            _check("--k", float(jump["k"]), 2.0)
        if "x0" in jump:
            _check("--x0", float(jump["x0"]), 0.0)
    if "sigma" in volume:
        _check("--sigma", float(volume["sigma"]), 0.0)
    try:
        law = jump_law_from_config(jump)
        vol = volume_law_from_config(volume)
    except ValueError as exc:
        raise CliError(str(exc)) from None

    if "r" in market:
        r = float(market["r"])
        if not 0.0 < r < 1.0:
            raise CliError(f"--r must lie in (0, 1), got {r!r}")
        return MarketParams(r, law, vol)
    if "lambda_i" in market and "lambda_u" in market:
        li = _check("--lambda-i", float(market["lambda_i"]), 0.0)
        lu = _check("--lambda-u", float(market["lambda_u"]), 0.0)
        return MarketParams.from_rates(li, lu, law, vol)
    raise CliError("market parameter missing: give --r (or lambda_i and lambda_u in [market])")


def build_grid(args: argparse.Namespace, cfg: dict, allow_zero: bool = False) -> tuple[float, float]:
    tick = _group(cfg, "tick")
    _override(tick, "alpha", args.tick)
    _override(tick, "d", getattr(args, "d", None))
    if "alpha" not in tick:
        raise CliError("tick size missing: give --tick or [tick] alpha")
    alpha = float(tick["alpha"])
    _check("--tick", alpha, 0.0, strict=not allow_zero)
    d = float(tick.get("d", 0.0))
    if alpha > 0 and not 0.0 <= d < alpha:
        raise CliError(f"--d must lie in [0, tick) = [0, {alpha:g}), got {d!r}")
    return alpha, d


# Output helpers


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def to_json(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def read_csv(path: str, required: Sequence[str], optional: Sequence[str] = ()) -> list[tuple[int, dict]]:
    """Rows as (line number, dict); the header must name every required column."""
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise CliError(f"input file not found: {path}") from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise CliError(f"{path}:1: empty file, expected header {','.join(required)}")
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise CliError(f"{path}:1: header lacks column(s) {','.join(missing)}")
        unknown = [c for c in header if c not in required and c not in optional]
        if unknown:
            raise CliError(f"{path}:1: unexpected column(s) {','.join(unknown)}")
        reader.fieldnames = header
        rows = []
        for rec in reader:
            if None in rec:
                raise CliError(f"{path}:{reader.line_num}: too many fields")
            rows.append((reader.line_num, {k: (v or "").strip() for k, v in rec.items()}))
        return rows


def _num(path: str, line: int, field: str, text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise CliError(f"{path}:{line}: {field} must be a number, got {text!r}") from None
    if not math.isfinite(v):
        raise CliError(f"{path}:{line}: {field} must be finite, got {text!r}")
    return v


# Subcommands


def cmd_shape(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    params = build_params(args, cfg)
    alpha, d = build_grid(args, cfg)
    n = args.levels if args.levels is not None else 10
    if n < 1:
        raise CliError(f"--levels must be >= 1, got {n}")
    book = DiscreteBook(TickGrid(alpha, d), EquilibriumBook.solve(params), n_levels=n)
    levels = book.levels(n)
    if args.format == "json":
        emit(to_json({"mu": book.equilibrium.mu, "spread": book.spread, "k_r": book.k_r, "k_l": book.k_l,
                      "levels": [asdict(lv) for lv in levels]}), args.out)
        return
    rows = [[getattr(lv, h) for h in SHAPE_HEADER] for lv in levels]
    emit(csv_text(SHAPE_HEADER, rows), args.out)


def _parse_levels(text: str) -> list[int]:
    try:
        if ":" in text:
            a, b = text.split(":")
            out = list(range(int(a), int(b) + 1))
        else:
            out = [int(t) for t in text.split(",")]
    except ValueError:
        raise CliError(f"--limits must look like 1:4 or 1,2,3, got {text!r}") from None
    if not out or 0 in out:
        raise CliError(f"--limits must be non-empty and exclude 0, got {text!r}")
    return out


def cmd_queue_value(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    params = build_params(args, cfg)
    alpha, d_cfg = build_grid(args, cfg)
    if args.d_ticks:
        ds = [f * alpha for f in args.d_ticks]
    elif args.d_list:
        ds = list(args.d_list)
    else:
        ds = [d_cfg]
    for d in ds:
        if not 0.0 <= d < alpha:
            raise CliError(f"--d-list value {d!r} outside [0, tick)")
    limits = _parse_levels(args.limits)
    eq = EquilibriumBook.solve(params)
    rows = []
    for d in ds:
        book = DiscreteBook(TickGrid(alpha, d), eq, n_levels=max(abs(i) for i in limits))
        for i in limits:
            rows.append({"d": d, "limit": i, "price_offset": book.offset(i),
                         "queue_value": book.queue_value(i, args.convention)})
    if args.format == "json":
        emit(to_json({"mu": eq.mu, "tick": alpha, "convention": args.convention, "rows": rows}), args.out)
    else:
        header = ["d", "limit", "price_offset", "queue_value"]
        emit(csv_text(header, [[r[h] for h in header] for r in rows]), args.out)


def cmd_forecast(args: argparse.Namespace) -> None:
    path = args.input
    recs = read_csv(path, ["name", "spread_old", "tick_old", "tick_new"], ["spread_actual"])
    rows = []
    for line, rec in recs:
        actual = rec.get("spread_actual", "")
        rows.append(ForecastRow(
            rec["name"],
            _num(path, line, "spread_old", rec["spread_old"]),
            _num(path, line, "tick_old", rec["tick_old"]),
            _num(path, line, "tick_new", rec["tick_new"]),
            _num(path, line, "spread_actual", actual) if actual else None,
        ))
    report = forecast_report(rows)
    for (line, _), ln in zip(recs, report.lines):
        if ln.error:
            ln.error = f"{path}:{line}: {ln.error}"
            print(f"lob: warning: skipped {ln.error}", file=sys.stderr)
    header = ["name", "spread_old", "tick_old", "tick_new", "spread_actual", "forecast", "relative_error",
              "naive_relative_error", "error"]
    if args.csv:
        Path(args.csv).write_text(csv_text(header, [[getattr(ln, h) if getattr(ln, h) is not None else ""
                                                      for h in header] for ln in report.lines]))
    if args.format == "text":
        out = []
        for ln in report.lines:
            if ln.error:
                out.append(f"{ln.name}: skipped ({ln.error})")
            else:
                act = "" if ln.spread_actual is None else f" actual {ln.spread_actual:.3f}"
                out.append(f"{ln.name}: forecast {ln.forecast:.3f}{act}")
        mre, naive = report.mean_relative_error, report.naive_mean_relative_error
        if mre is not None:
            out.append(f"mean relative error {mre:.1%}, constant-spread baseline {naive:.1%}")
        emit("\n".join(out) + "\n", args.out)
        return
    emit(to_json({
        "rows": [asdict(ln) for ln in report.lines],
        "n_valid": len(report.valid),
        "n_skipped": len(report.skipped),
        "mean_relative_error": report.mean_relative_error,
        "naive_mean_relative_error": report.naive_mean_relative_error,
    }), args.out)


def cmd_calibrate(args: argparse.Namespace) -> None:
    path = args.input
    alpha = _check("--tick", args.tick, 0.0)
    obs = []
    for line, rec in read_csv(path, ["date", "spread", "variance_per_trade"]):
        try:
            obs.append(DailyObservation(
                rec["date"],
                _num(path, line, "spread", rec["spread"]),
                _num(path, line, "variance_per_trade", rec["variance_per_trade"]),
            ))
        except ValueError as exc:
            raise CliError(f"{path}:{line}: {exc}") from None
    if not obs:
        raise CliError(f"{path}: no observations")
    try:
        res = fit_shape(obs, alpha)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    if res.at_boundary:
        print(f"lob: warning: shape k={res.k:g} sits at the search boundary", file=sys.stderr)
    emit(to_json(asdict(res)), args.out)


def cmd_simulate(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    params = build_params(args, cfg)
    alpha, _ = build_grid(args, cfg, allow_zero=True)
    sim = _group(cfg, "sim")
    _override(sim, "n_events", args.events)
    _override(sim, "seed", args.seed)
    _override(sim, "p0", args.p0)
    _override(sim, "n_levels", args.levels)
    _override(sim, "n_slices", args.slices)
    market = _group(cfg, "market")
    _override(market, "lambda_i", args.lambda_i)
    _override(market, "lambda_u", args.lambda_u)
    total = 1.0
    if args.r is None and "r" not in market and "lambda_i" in market and "lambda_u" in market:
        total = float(market["lambda_i"]) + float(market["lambda_u"])
    known = {"n_events", "seed", "p0", "n_levels", "n_slices", "d_bins"}
    extra = set(sim) - known
    if extra:
        raise CliError(f"unknown [sim] key(s): {', '.join(sorted(extra))}")
    kw = {k: (int(v) if k != "p0" else float(v)) for k, v in sim.items()}
    if kw.get("n_events", 1) < 1:
        raise CliError(f"--events must be >= 1, got {kw['n_events']}")
    try:
        config = SimConfig.from_r(params.r, params.jump, total, volume=params.volume, alpha=alpha, **kw)
        stats = run(config, trace_path=args.trace)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    if stats.truncation_biased:
        print(f"lob: warning: {stats.clip_fraction:.2e} of noise orders clipped; statistics truncation-biased",
              file=sys.stderr)
    emit(to_json({"config": config.to_dict(), "stats": stats.to_dict()}), args.out)


# Parser


def _model_flags(p: argparse.ArgumentParser, tick: bool = True) -> None:
    p.add_argument("--config", help="TOML file with [jump], [volume], [market], [tick], [sim] groups")
    p.add_argument("--k", type=float, help="Pareto shape of the jump size")
    p.add_argument("--x0", type=float, help="Pareto scale of the jump size")
    p.add_argument("--sigma", type=float, help="std dev of noise order sizes")
    p.add_argument("--r", type=float, help="share of events that are price jumps")
    if tick:
        p.add_argument("--tick", type=float, help="tick size alpha")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lob", description="Equilibrium limit order book toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shape", help="per-level equilibrium book table")
    _model_flags(p)
    p.add_argument("--d", type=float, help="offset from the efficient price to the next tick, in [0, tick)")
    p.add_argument("--levels", type=int, help="levels per side (default 10)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("queue-value", help="queue position values for several d and limits")
    _model_flags(p)
    p.add_argument("--d", type=float, help=argparse.SUPPRESS)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--d-list", type=float, nargs="+", help="offsets d in price units")
    g.add_argument("--d-ticks", type=float, nargs="+", help="offsets d as fractions of the tick")
    p.add_argument("--limits", default="1:4", help="limit range a:b or list a,b,c (default 1:4)")
    p.add_argument("--convention", choices=QUEUE_CONVENTIONS, default="materialized",
                   help="depth ahead of a limit whose inner neighbour is empty")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_queue_value)

    for name in ("spread-forecast", "forecast"):
        p = sub.add_parser(name, help="average spread after a tick change")
        p.add_argument("--input", required=True, help="CSV name,spread_old,tick_old,tick_new[,spread_actual]")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--csv", help="also write the per-row report as CSV")
        p.add_argument("--out")
        p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("calibrate", help="fit the Pareto shape to daily statistics")
    p.add_argument("--input", required=True, help="CSV date,spread,variance_per_trade")
    p.add_argument("--tick", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="Monte Carlo run, SimStats as JSON")
    _model_flags(p)
    p.add_argument("--lambda-i", type=float, dest="lambda_i")
    p.add_argument("--lambda-u", type=float, dest="lambda_u")
    p.add_argument("--events", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--p0", type=float)
    p.add_argument("--levels", type=int)
    p.add_argument("--slices", type=int)
    p.add_argument("--trace", help="write a per-event CSV trace here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        print(f"lob: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
