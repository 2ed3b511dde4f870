"""Command-line front end: ingest, score, rank, filter, holes, report, serve.

Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to stderr;
data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import geo, qoi, report
from .content import ContentError
from .ingest import (
    DEFAULT_DAY_OFFSET_HOURS,
    IngestConfig,
    IngestError,
    build_index,
    canonical_json_bytes,
    open_index,
    parse_detections,
    parse_records,
    persist_index,
)
from .spatial import SpatialError
from .temporal import TemporalError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage -> 1
        raise UsageError(message)


_DOW = {"mon": 0, "tue": 1, "wed": 2, "thu": 3, "fri": 4, "sat": 5, "sun": 6}


def _parse_dow(token: str) -> int:
    t = token.strip().lower()
    if t[:3] in _DOW:
        return _DOW[t[:3]]
    try:
        v = int(t)
    except ValueError:
        raise UsageError(f"unknown day of week {token!r}") from None
    if not 0 <= v <= 6:
        raise UsageError("day of week must be in 0..6 (Monday=0)")
    return v


def _weights(text: str) -> qoi.Weights:
    try:
        return qoi.parse_weights(text)
    except qoi.QoiError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> _Parser:
    p = _Parser(prog="svqoi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("ingest", help="parse and index records against a street network")
    q.add_argument("--records", required=True, help="records file (JSONL, or CSV by extension/--format)")
    q.add_argument("--detections", help="detections JSONL")
    q.add_argument("--network", required=True, help="street network GeoJSON")
    q.add_argument("--regions", required=True, help="region polygons GeoJSON")
    q.add_argument("--out", required=True, help="output index directory")
    q.add_argument("--format", choices=["jsonl", "csv"], help="records format (default: by extension)")
    q.add_argument("--cell-len", type=float, default=geo.DEFAULT_CELL_LENGTH_M, help="grid cell length, m (default %(default)s)")
    q.add_argument("--snap-radius", type=float, default=geo.DEFAULT_SNAP_RADIUS_M, help="snap radius, m (default %(default)s)")
    q.add_argument("--day-offset", type=float, default=DEFAULT_DAY_OFFSET_HOURS, help="day-boundary offset from UTC, hours (default %(default)s)")
    q.add_argument("--lenient", action="store_true", help="skip and count malformed lines instead of aborting")

    q = sub.add_parser("score", help="score every region over a window")
    q.add_argument("--index", required=True)
    q.add_argument("--metric", choices=list(qoi.METRICS), default="jsd")
    q.add_argument("--weights", default="1,1,1", help="alpha,beta,gamma each in 0..5")
    q.add_argument("--from", dest="from_ts", type=int)
    q.add_argument("--to", dest="to_ts", type=int)
    q.add_argument("--seed", type=int, default=0, help="seed for the sliced metric")
    q.add_argument("--threads", type=int, default=1)
    q.add_argument("--out", help="output file (default: stdout)")

    q = sub.add_parser("rank", help="re-rank an existing scores file under new weights")
    q.add_argument("--scores", required=True)
    q.add_argument("--weights", required=True)

    q = sub.add_parser("filter", help="write the subset matching quality predicates")
    q.add_argument("--index", required=True)
    q.add_argument("--region", action="append", dest="regions")
    q.add_argument("--from", dest="from_ts", type=int)
    q.add_argument("--to", dest="to_ts", type=int)
    q.add_argument("--dow", action="append", help="day of week (mon..sun or 0..6), repeatable")
    q.add_argument("--hod", action="append", type=int, help="hour of day 0..23, repeatable")
    q.add_argument("--min-brightness", type=float)
    q.add_argument("--min-S", type=float, dest="min_s")
    q.add_argument("--min-T", type=float, dest="min_t")
    q.add_argument("--min-C", type=float, dest="min_c")
    q.add_argument("--out", required=True, help="output JSONL")

    q = sub.add_parser("holes", help="locate unsampled runs of street cells")
    q.add_argument("--index", required=True)
    q.add_argument("--region", required=True)
    q.add_argument("--min-run", type=int, default=2)
    q.add_argument("--out", required=True, help="output GeoJSON")

    q = sub.add_parser("report", help="render a scores file as csv, json, or svg")
    q.add_argument("--scores", required=True)
    q.add_argument("--format", choices=list(report.FORMATS), default="csv")
    q.add_argument("--out", help="output file (default: stdout)")
    q.add_argument("--out-dir", help="write report.csv, report.json, and report.svg here")

    q = sub.add_parser("serve", help="serve the HTTP API and dashboard")
    q.add_argument("--index", required=True)
    q.add_argument("--host", default="127.0.0.1")
    q.add_argument("--port", type=int, default=8000)
    return p


def _emit(data: bytes, out: str | None) -> None:
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


def _cmd_ingest(args) -> int:
    fmt = args.format or ("csv" if args.records.lower().endswith(".csv") else "jsonl")
    with open(args.records, "r", encoding="utf-8") as fh:
        records, errors = parse_records(fh, fmt, strict=not args.lenient)
    for e in errors:
        print(e, file=sys.stderr)
    detections = {}
    if args.detections:
        with open(args.detections, "r", encoding="utf-8") as fh:
            detections, det_errors = parse_detections(fh, strict=not args.lenient)
        for e in det_errors:
            print(e, file=sys.stderr)
    with open(args.network, "r", encoding="utf-8") as fh:
        network = geo.load_network(json.load(fh))
    with open(args.regions, "r", encoding="utf-8") as fh:
        regions = geo.load_regions(json.load(fh))
    grids = {}
    for region in regions.regions:
        grid = geo.region_grid(network, region, regions, args.cell_len)
        if grid.n_cells == 0:
            print(f"region {region.region_id} has no street cells; skipped",
                  file=sys.stderr)
            continue
        grids[region.region_id] = grid
    config = IngestConfig(args.cell_len, args.snap_radius, args.day_offset)
    index = build_index(records, detections, grids, regions, config,
                        invalid_count=len(errors))
    persist_index(index, args.out)
    s = index.stats
    print(f"accepted={s['accepted']} outside_region={s['outside_region']} "
          f"unsnapped={s['unsnapped']} invalid={s['invalid']}", file=sys.stderr)
    return 0


def _cmd_score(args) -> int:
    index = open_index(args.index)
    payload = qoi.scores_payload(
        index, args.metric, _weights(args.weights),
        window=(args.from_ts, args.to_ts), seed=args.seed, threads=args.threads)
    _emit(canonical_json_bytes(payload), args.out)
    return 0


def _cmd_rank(args) -> int:
    with open(args.scores, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    weights = _weights(args.weights)
    scores = [
        qoi.QualityScore(seg["region_id"], None, seg["s_raw"], seg["t_raw"],
                         seg["c_raw"], seg["S"], seg["T"], seg["C"])
        for seg in payload["segments"]
    ]
    ranked = qoi.rank(scores, weights)
    payload["weights"] = weights.as_list()
    payload["segments"] = [
        {"region_id": s.region_id, "s_raw": s.s_raw, "t_raw": s.t_raw,
         "c_raw": s.c_raw, "S": s.S, "T": s.T, "C": s.C, "Q": s.Q, "rank": s.rank}
        for s in ranked
    ]
    _emit(canonical_json_bytes(payload), None)
    return 0


def _cmd_filter(args) -> int:
    index = open_index(args.index)
    spec = qoi.FilterSpec(
        region_ids=tuple(args.regions) if args.regions else None,
        t0=args.from_ts,
        t1=args.to_ts,
        days_of_week=tuple(_parse_dow(d) for d in args.dow) if args.dow else None,
        hours_of_day=tuple(args.hod) if args.hod else None,
        min_brightness=args.min_brightness,
        min_S=args.min_s,
        min_T=args.min_t,
        min_C=args.min_c,
    )
    with open(args.out, "wb") as fh:
        stats = qoi.filter_index(index, spec,
                                 sink=lambda rec: fh.write(canonical_json_bytes(rec)))
    print(f"kept={stats['kept_count']} input={stats['input_count']} "
          f"reduction={stats['reduction_pct']:.3f}%", file=sys.stderr)
    return 0


def _cmd_holes(args) -> int:
    index = open_index(args.index)
    grid = index.grid(args.region)
    counts = np.bincount(index.columns(args.region)["cell"], minlength=grid.n_cells)
    found = geo.find_holes(grid, counts, args.min_run)
    _emit(canonical_json_bytes(geo.holes_geojson(grid, found)), args.out)
    return 0


def _cmd_report(args) -> int:
    with open(args.scores, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        for fmt in report.FORMATS:
            with open(os.path.join(args.out_dir, f"report.{fmt}"), "wb") as fh:
                fh.write(report.render(payload, fmt))
        return 0
    _emit(report.render(payload, args.format), args.out)
    return 0


def _cmd_serve(args) -> int:
    from . import service

    index = open_index(args.index)
    service.serve(index, args.host, args.port)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "score": _cmd_score,
    "rank": _cmd_rank,
    "filter": _cmd_filter,
    "holes": _cmd_holes,
    "report": _cmd_report,
    "serve": _cmd_serve,
}

_DATA_ERRORS = (IngestError, geo.GeoError, SpatialError, TemporalError,
                ContentError, qoi.QoiError, report.ReportError,
                OSError, json.JSONDecodeError, KeyError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
