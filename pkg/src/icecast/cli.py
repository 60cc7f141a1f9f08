"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error (parse, range,
integrity, fetch, lookup), 3 model error (fit or forecast failure).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

from . import kalman, risk, store
from .errors import IcecastError, ModelError, NotFoundError
from .grid import load_grid
from .ingest import (
    IceObservation,
    SeriesQuery,
    coerce_midnight,
    dedupe,
    fetch_series,
    format_timestamp,
    parse_records,
    parse_timestamp,
    serialize_records,
    to_daily_array,
    validate,
)
from .plotting import render_ascii, render_svg

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MODEL = 3

ENDPOINT_ENV = "ICECAST_ENDPOINT"


class UsageError(Exception):
    """Bad flag value caught after argparse."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; our contract reserves 2
    # for data errors, so funnel parse failures through UsageError instead.
    def error(self, message):
        raise UsageError(message)


def _parse_date(text: str, flag: str) -> datetime:
    try:
        day = datetime.strptime(text, "%Y-%m-%d")
    except ValueError:
        raise UsageError(f"{flag} expects YYYY-MM-DD, got {text!r}") from None
    return day.replace(tzinfo=timezone.utc)


def _date_range(args) -> SeriesQuery:
    from_day = _parse_date(args.from_day, "--from")
    to_day = _parse_date(args.to_day, "--to")
    if to_day < from_day:
        raise UsageError("--to is before --from")
    return SeriesQuery(args.point, from_day, to_day)


def _write_text(path_text: str, body: str) -> None:
    Path(path_text).write_text(body, encoding="utf-8")


# -- subcommands --------------------------------------------------------


def cmd_ingest(args) -> int:
    text = Path(args.file).read_text(encoding="utf-8")
    records = parse_records(text, source=args.file)
    if args.coerce_midnight:
        records = [coerce_midnight(r) for r in records]
    for rec in records:
        validate(rec)
    records = dedupe(sorted(records, key=lambda r: (r.point_id, r.timestamp)))
    st = store.open_store(args.store)
    appended = st.append_records(records)
    print(f"appended {appended} skipped {len(records) - appended}")
    return EXIT_OK


def cmd_fetch(args) -> int:
    endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV)
    if not endpoint:
        raise UsageError(f"no endpoint: pass --endpoint or set {ENDPOINT_ENV}")
    query = _date_range(args)
    records = fetch_series(endpoint, query)
    records = dedupe(sorted(records, key=lambda r: (r.point_id, r.timestamp)))
    st = store.open_store(args.store)
    appended = st.append_records(records)
    print(f"appended {appended} skipped {len(records) - appended}")
    return EXIT_OK


def cmd_query(args) -> int:
    st = store.open_store(args.store)
    records = st.query_range(_date_range(args))
    if args.format == "obs":
        sys.stdout.write(serialize_records(records))
    else:
        rows = [
            {
                "timestamp": format_timestamp(r.timestamp),
                "point_id": r.point_id,
                "concentration": r.concentration,
            }
            for r in records
        ]
        print(json.dumps(rows, indent=2))
    return EXIT_OK


def cmd_plot(args) -> int:
    st = store.open_store(args.store)
    query = _date_range(args)
    records = st.query_range(query)
    if not records:
        raise NotFoundError(
            f"no observations for point {query.point_id} "
            f"in {query.from_day}..{query.to_day}"
        )
    if args.ascii:
        print(render_ascii(records))
    else:
        _write_text(args.out, render_svg(records))
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    if args.seasonal < 0:
        raise UsageError("--seasonal must be >= 0")
    query = _date_range(args)
    st = store.open_store(args.store)
    records = st.query_range(query)
    y = to_daily_array(records, query.from_day, query.to_day)
    point_model = kalman.fit_point(
        args.point,
        y,
        query.from_day,
        query.to_day,
        kind=args.kind,
        seasonal_harmonics=args.seasonal,
        seasonal_period=args.period,
    )
    kalman.save_model(point_model, args.out)
    print(
        f"fitted point {args.point} kind={args.kind}"
        f" loglik={point_model.log_likelihood:.9g}"
        f" iterations={point_model.iterations}"
        f" converged={point_model.converged}"
    )
    return EXIT_OK


def cmd_forecast(args) -> int:
    if args.horizon < 1:
        raise UsageError("--horizon must be >= 1")
    point_model = kalman.load_model(args.model)
    forecasts = kalman.forecast(point_model.state, point_model.model, args.horizon)
    lines = ["#forecast v1"]
    for fc in forecasts:
        lines.append(
            f"{fc.horizon},{fc.mean:.9g},{fc.variance:.9g},{fc.mean_clipped:.9g}"
        )
    body = "\n".join(lines) + "\n"
    if args.out:
        _write_text(args.out, body)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(body)
    return EXIT_OK


def cmd_risk(args) -> int:
    if args.horizon < 1:
        raise UsageError("--horizon must be >= 1")
    if not 0.0 < args.threshold < 1.0:
        raise UsageError("--threshold must be inside (0, 1)")
    grid = load_grid(Path(args.grid).read_text(encoding="utf-8"))
    point_models = {}
    for path in args.model:
        pm = kalman.load_model(path)
        if pm.point_id in point_models:
            raise UsageError(f"two model files for point {pm.point_id}")
        point_models[pm.point_id] = pm
    field = risk.build_risk_field(
        grid, point_models, args.horizon, threshold=args.threshold
    )
    body = risk.dump_risk_field(field)
    if args.out:
        _write_text(args.out, body)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(body)
    return EXIT_OK


def cmd_route(args) -> int:
    grid = load_grid(Path(args.grid).read_text(encoding="utf-8"))
    field = risk.load_risk_field(Path(args.field).read_text(encoding="utf-8"))
    route = risk.best_route(grid, field, args.start, args.goal)
    print(risk.format_route(route))
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.days < 1:
        raise UsageError("--days must be >= 1")
    if args.seasonal < 0:
        raise UsageError("--seasonal must be >= 0")
    if args.q < 0 or args.r < 0:
        raise UsageError("--q and --r must be >= 0")
    model = kalman.build_model(
        kind=args.kind,
        seasonal_harmonics=args.seasonal,
        seasonal_period=args.period,
        q_diag=[args.q] * (2 if args.kind == "trend" else 1)
        + [args.q] * (2 * args.seasonal),
        r=args.r,
    )
    x0 = [args.level]
    if args.kind == "trend":
        x0.append(args.slope)
    for j in range(args.seasonal):
        x0.extend([args.amplitude if j == 0 else 0.0, 0.0])
    y = kalman.simulate(model, x0, args.days, args.seed)
    start = _parse_date(args.start, "--start")
    records = []
    for i, value in enumerate(y):
        clipped = min(1.0, max(0.0, float(value)))
        records.append(
            IceObservation(args.point, start + timedelta(days=i), clipped, "synth")
        )
    _write_text(args.out, serialize_records(records))
    print(f"wrote {len(records)} observations to {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = store.verify_store(args.store)
    print(f"segments checked: {report.segments_checked}")
    print(f"records checked: {report.records_checked}")
    print(f"failures: {len(report.failures)}")
    for failure in report.failures:
        print(f"{failure.file}:{failure.line_no}: {failure.reason}")
    return EXIT_OK if report.clean else EXIT_DATA


# -- parser wiring ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="icecast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    store_flags = _Parser(add_help=False)
    store_flags.add_argument("--store", required=True, help="store directory")

    range_flags = _Parser(add_help=False)
    range_flags.add_argument("--point", type=int, required=True)
    range_flags.add_argument("--from", dest="from_day", required=True)
    range_flags.add_argument("--to", dest="to_day", required=True)

    p = sub.add_parser("ingest", parents=[store_flags], help="append a file of observations")
    p.add_argument("file")
    p.add_argument("--coerce-midnight", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fetch", parents=[store_flags, range_flags], help="pull a series over http")
    p.add_argument("--endpoint", default=None)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("query", parents=[store_flags, range_flags], help="print a stored series")
    p.add_argument("--format", choices=("obs", "json"), default="obs")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("plot", parents=[store_flags, range_flags], help="render a stored series")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--out", help="svg output path")
    group.add_argument("--ascii", action="store_true")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("fit", parents=[store_flags, range_flags], help="fit a state-space model")
    p.add_argument("--kind", choices=kalman.KINDS, default="level")
    p.add_argument("--seasonal", type=int, default=0, help="seasonal harmonics")
    p.add_argument("--period", type=float, default=kalman.DEFAULT_PERIOD)
    p.add_argument("--out", required=True, help="model output path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="forecast from a saved model")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("risk", help="turn forecasts into a hazard field")
    p.add_argument("--grid", required=True, help="grid file")
    p.add_argument("--model", action="append", required=True, help="model file, repeatable")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--threshold", type=float, default=risk.DEFAULT_THRESHOLD)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("route", help="minimum-risk path across a hazard field")
    p.add_argument("--grid", required=True, help="grid file")
    p.add_argument("--field", required=True, help="risk field file")
    p.add_argument("--start", type=int, required=True)
    p.add_argument("--goal", type=int, required=True)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("synth", help="simulate a synthetic series")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--days", type=int, required=True)
    p.add_argument("--point", type=int, default=1)
    p.add_argument("--start", default="2012-01-01", help="first day, YYYY-MM-DD")
    p.add_argument("--kind", choices=kalman.KINDS, default="level")
    p.add_argument("--seasonal", type=int, default=0)
    p.add_argument("--period", type=float, default=kalman.DEFAULT_PERIOD)
    p.add_argument("--level", type=float, default=0.5)
    p.add_argument("--slope", type=float, default=0.0)
    p.add_argument("--amplitude", type=float, default=0.0)
    p.add_argument("--q", type=float, default=1e-4)
    p.add_argument("--r", type=float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", parents=[store_flags], help="checksum sweep over a store")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except IcecastError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
