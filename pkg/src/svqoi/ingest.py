"""Parse, validate, and persist image metadata and detections into a
queryable per-region index binned by cell and day.

Index layout: `manifest.json` (parameters, grids, per-region counts, stats)
plus one `region_<id>.jsonl` of enriched records sorted by (cell_id, ts, id).
All serialization is canonical — sorted keys, compact separators, shortest
round-trip floats — so identical content yields identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import threading
import urllib.parse
from dataclasses import dataclass

import numpy as np

from . import geo

log = logging.getLogger(__name__)

INDEX_VERSION = 1
DEFAULT_DAY_OFFSET_HOURS = -5.0  # UTC-5 day boundaries


class IngestError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True, slots=True)
class ImageRecord:
    id: str
    lat: float
    lon: float
    ts: int
    brightness: float | None = None
    device_id: str | None = None


@dataclass(frozen=True, slots=True)
class DetectionSet:
    image_id: str
    objects: list  # of {"class": str, "confidence": float, "bbox": [4 nums]?}


@dataclass(frozen=True)
class IngestConfig:
    cell_length_m: float = geo.DEFAULT_CELL_LENGTH_M
    snap_radius_m: float = geo.DEFAULT_SNAP_RADIUS_M
    day_offset_hours: float = DEFAULT_DAY_OFFSET_HOURS


def canonical_json_bytes(obj) -> bytes:
    """Canonical JSON document bytes: sorted keys, compact separators,
    shortest round-trip floats, trailing newline."""
    return (json.dumps(obj, sort_keys=True, separators=(",", ":"),
                       allow_nan=False) + "\n").encode("utf-8")


def day_of(ts: int, day_offset_hours: float) -> int:
    return (int(ts) + int(round(day_offset_hours * 3600))) // 86400


def day_of_week(day: int) -> int:
    """Monday=0..Sunday=6 for an epoch-day number (day 0 was a Thursday)."""
    return (day + 3) % 7


def hour_of_day(ts: int, day_offset_hours: float) -> int:
    return ((int(ts) + int(round(day_offset_hours * 3600))) % 86400) // 3600


# ---------------------------------------------------------------------------
# Parsing


def _validate_record(d: dict, line: int) -> ImageRecord:
    for key in ("id", "lat", "lon", "ts"):
        if d.get(key) is None:
            raise IngestError(f"missing required field {key!r}", line)
    rid = d["id"]
    if not isinstance(rid, str) or not rid:
        raise IngestError("id must be a nonempty string", line)
    try:
        lat = float(d["lat"])
        lon = float(d["lon"])
    except (TypeError, ValueError):
        raise IngestError("lat/lon must be numbers", line) from None
    if not -90.0 <= lat <= 90.0 or math.isnan(lat):
        raise IngestError("lat out of range", line)
    if not -180.0 <= lon <= 180.0 or math.isnan(lon):
        raise IngestError("lon out of range", line)
    ts = d["ts"]
    if isinstance(ts, bool) or not isinstance(ts, (int, float)) or \
            (isinstance(ts, float) and not ts.is_integer()):
        raise IngestError("ts must be an integer", line)
    ts = int(ts)
    if ts <= 0:
        raise IngestError("ts must be > 0", line)
    brightness = d.get("brightness")
    if brightness is not None:
        try:
            brightness = float(brightness)
        except (TypeError, ValueError):
            raise IngestError("brightness must be a number", line) from None
        if not 0.0 <= brightness <= 1.0:
            raise IngestError("brightness out of range", line)
    device_id = d.get("device_id")
    if device_id is not None and not isinstance(device_id, str):
        raise IngestError("device_id must be a string", line)
    return ImageRecord(rid, lat, lon, ts, brightness, device_id)


def parse_records(stream, fmt: str = "jsonl", strict: bool = True):
    """Parse records from a text stream.

    Returns (records, errors): `errors` is a list of per-line messages and is
    always empty in strict mode, where the first bad line raises instead.
    """
    if isinstance(stream, (str, bytes)):
        stream = io.StringIO(stream.decode() if isinstance(stream, bytes) else stream)
    if fmt == "jsonl":
        rows = _jsonl_rows(stream)
    elif fmt == "csv":
        rows = _csv_rows(stream)
    else:
        raise IngestError(f"unknown record format {fmt!r}")

    records: list[ImageRecord] = []
    errors: list[str] = []
    for line_no, row, err in rows:
        if err is None:
            try:
                records.append(_validate_record(row, line_no))
                continue
            except IngestError as exc:
                err = str(exc)
        if strict:
            raise IngestError(err)
        errors.append(err)
    return records, errors


def _jsonl_rows(stream):
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError:
            yield line_no, None, f"line {line_no}: malformed JSON"
            continue
        if not isinstance(row, dict):
            yield line_no, None, f"line {line_no}: expected a JSON object"
            continue
        yield line_no, row, None


_CSV_HEADER = ["id", "lat", "lon", "ts", "brightness", "device_id"]


def _csv_rows(stream):
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        return
    if [h.strip() for h in header] != _CSV_HEADER:
        raise IngestError(f"csv header must be {','.join(_CSV_HEADER)}", 1)
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(_CSV_HEADER):
            yield line_no, None, f"line {line_no}: expected {len(_CSV_HEADER)} fields"
            continue
        d = dict(zip(_CSV_HEADER, row))
        out = {"id": d["id"]}
        try:
            out["lat"] = float(d["lat"]) if d["lat"] != "" else None
            out["lon"] = float(d["lon"]) if d["lon"] != "" else None
            out["ts"] = int(d["ts"]) if d["ts"] != "" else None
            out["brightness"] = float(d["brightness"]) if d["brightness"] != "" else None
        except ValueError:
            yield line_no, None, f"line {line_no}: non-numeric field"
            continue
        out["device_id"] = d["device_id"] or None
        yield line_no, out, None


def parse_detections(stream, strict: bool = True):
    """Parse detections JSONL into {image_id: DetectionSet}; duplicate
    image_id lines merge by concatenating object lists."""
    if isinstance(stream, (str, bytes)):
        stream = io.StringIO(stream.decode() if isinstance(stream, bytes) else stream)
    out: dict[str, DetectionSet] = {}
    errors: list[str] = []

    def fail(msg, line_no):
        if strict:
            raise IngestError(msg, line_no)
        errors.append(f"line {line_no}: {msg}")

    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError:
            fail("malformed JSON", line_no)
            continue
        image_id = row.get("image_id") if isinstance(row, dict) else None
        if not image_id or not isinstance(image_id, str):
            fail("missing image_id", line_no)
            continue
        objects = row.get("objects", [])
        ok = True
        for obj in objects:
            conf = obj.get("confidence") if isinstance(obj, dict) else None
            if not isinstance(conf, (int, float)) or isinstance(conf, bool) or \
                    not 0.0 <= conf <= 1.0:
                fail("confidence out of range", line_no)
                ok = False
                break
        if not ok:
            continue
        prev = out.get(image_id)
        if prev is None:
            out[image_id] = DetectionSet(image_id, list(objects))
        else:
            prev.objects.extend(objects)
    return out, errors


# ---------------------------------------------------------------------------
# Index


_COLUMNS = ("lat", "lon", "ts", "day", "cell", "brightness", "c", "n_obj")


class Index:
    """Immutable per-region view of the accepted records.

    Columns per region (all sorted by cell_id, ts, id):
      ids (list of str), device_ids (list of str|None), lat, lon (float64),
      ts, day, cell, n_obj (int64; n_obj = -1 without a detection entry),
      brightness, c (float64; NaN when absent).
    """

    def __init__(self, manifest: dict, region_data: dict | None = None,
                 path: str | None = None):
        self.manifest = manifest
        self._data = dict(region_data) if region_data else {}
        self._grids: dict[str, geo.StreetGrid] = {}
        self._lock = threading.Lock()
        self.path = path

    # -- manifest accessors

    @property
    def region_ids(self) -> list[str]:
        return list(self.manifest["region_ids"])

    @property
    def stats(self) -> dict:
        return dict(self.manifest["stats"])

    @property
    def config(self) -> IngestConfig:
        m = self.manifest
        return IngestConfig(m["cell_length_m"], m["snap_radius_m"], m["day_offset_hours"])

    def record_count(self, region_id: str) -> int:
        return self.manifest["counts"][region_id]

    def day_range(self, region_id: str | None = None):
        """[min_day, max_day] for one region, or across all regions (None
        when there are no records)."""
        if region_id is not None:
            return self.manifest["day_range"][region_id]
        spans = [s for s in self.manifest["day_range"].values() if s]
        if not spans:
            return None
        return [min(s[0] for s in spans), max(s[1] for s in spans)]

    def grid(self, region_id: str) -> geo.StreetGrid:
        if region_id not in self._grids:
            if region_id not in self.manifest["grids"]:
                raise IngestError(f"unknown region {region_id!r}")
            with self._lock:
                if region_id not in self._grids:
                    self._grids[region_id] = geo.StreetGrid.from_dict(
                        self.manifest["grids"][region_id])
        return self._grids[region_id]

    def regions_geojson(self) -> dict:
        return self.manifest["regions_geojson"]

    # -- record access

    def columns(self, region_id: str) -> dict:
        if region_id not in self._data:
            if region_id not in self.manifest["counts"]:
                raise IngestError(f"unknown region {region_id!r}")
            with self._lock:
                if region_id not in self._data:
                    self._data[region_id] = self._load_region(region_id)
        return self._data[region_id]

    def records(self, region_id: str):
        """Yield the region's records as plain dicts, optional fields omitted."""
        cols = self.columns(region_id)
        ids, device_ids = cols["ids"], cols["device_ids"]
        lat, lon, ts = cols["lat"], cols["lon"], cols["ts"]
        day, cell = cols["day"], cols["cell"]
        brightness, c, n_obj = cols["brightness"], cols["c"], cols["n_obj"]
        for i in range(len(ids)):
            rec = {
                "cell_id": int(cell[i]),
                "day": int(day[i]),
                "id": ids[i],
                "lat": float(lat[i]),
                "lon": float(lon[i]),
                "ts": int(ts[i]),
            }
            if not math.isnan(brightness[i]):
                rec["brightness"] = float(brightness[i])
            if device_ids[i] is not None:
                rec["device_id"] = device_ids[i]
            if n_obj[i] >= 0:
                rec["c"] = float(c[i])
                rec["n_obj"] = int(n_obj[i])
            yield rec

    def _load_region(self, region_id: str) -> dict:
        path = os.path.join(self.path or "", _region_filename(region_id))
        expected = self.manifest["counts"][region_id]
        ids, device_ids = [], []
        lat, lon, ts, day, cell, brightness, c, n_obj = ([] for _ in range(8))
        try:
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    row = json.loads(line)
                    ids.append(row["id"])
                    device_ids.append(row.get("device_id"))
                    lat.append(row["lat"])
                    lon.append(row["lon"])
                    ts.append(row["ts"])
                    day.append(row["day"])
                    cell.append(row["cell_id"])
                    brightness.append(row.get("brightness", math.nan))
                    c.append(row.get("c", math.nan))
                    n_obj.append(row.get("n_obj", -1))
        except FileNotFoundError:
            raise IngestError(f"region {region_id!r}: index file missing") from None
        except (json.JSONDecodeError, KeyError):
            raise IngestError(f"region {region_id!r}: index file corrupt or truncated") from None
        if len(ids) != expected:
            raise IngestError(
                f"region {region_id!r}: index file truncated "
                f"({len(ids)} records, manifest says {expected})"
            )
        return {
            "ids": ids,
            "device_ids": device_ids,
            "lat": np.asarray(lat, dtype=float),
            "lon": np.asarray(lon, dtype=float),
            "ts": np.asarray(ts, dtype=np.int64),
            "day": np.asarray(day, dtype=np.int64),
            "cell": np.asarray(cell, dtype=np.int64),
            "brightness": np.asarray(brightness, dtype=float),
            "c": np.asarray(c, dtype=float),
            "n_obj": np.asarray(n_obj, dtype=np.int64),
        }


def _region_filename(region_id: str) -> str:
    return f"region_{urllib.parse.quote(region_id, safe='')}.jsonl"


def build_index(records, detections, grids: dict, regions: geo.RegionSet,
                config: IngestConfig = IngestConfig(), invalid_count: int = 0) -> Index:
    """Assign every record a (region, cell, day); records outside all regions
    or beyond the snap radius are counted and excluded. Output is independent
    of input order. Duplicate ids abort, naming the first duplicate."""
    seen: set[str] = set()
    for r in records:
        if r.id in seen:
            raise IngestError(f"duplicate record id {r.id!r}")
        seen.add(r.id)
    del seen

    region_ids = sorted(grids.keys())
    n = len(records)
    lat = np.fromiter((r.lat for r in records), dtype=float, count=n)
    lon = np.fromiter((r.lon for r in records), dtype=float, count=n)
    ts = np.fromiter((r.ts for r in records), dtype=np.int64, count=n)

    # region ordinals over *all* loaded regions, then restricted to gridded ones
    all_ids = regions.ids()
    ordinal = geo.assign_region_many(lat, lon, regions) if n else np.empty(0, np.int64)

    day = (ts + int(round(config.day_offset_hours * 3600))) // 86400

    data: dict[str, dict] = {}
    counts: dict[str, int] = {}
    day_range: dict[str, list | None] = {}
    accepted = 0
    for rid in region_ids:
        grid = grids[rid]
        in_region = np.flatnonzero(ordinal == all_ids.index(rid)) if n else np.empty(0, np.int64)
        if len(in_region) and grid.n_cells:
            x, y = geo.project(lat[in_region], lon[in_region], grid.origin)
            cells = geo.snap_many(np.column_stack([x, y]), grid, config.snap_radius_m)
        else:
            cells = np.full(len(in_region), -1, dtype=np.int64)
        hit = cells >= 0
        idx = in_region[hit]
        cell = cells[hit]
        accepted += len(idx)

        rid_ids = [records[i].id for i in idx]
        order = np.lexsort((_rank_of(rid_ids), ts[idx], cell))
        idx = idx[order]
        cell = cell[order]
        det_of = [detections.get(records[i].id) for i in idx]
        data[rid] = {
            "ids": [records[i].id for i in idx],
            "device_ids": [records[i].device_id for i in idx],
            "lat": lat[idx],
            "lon": lon[idx],
            "ts": ts[idx],
            "day": day[idx],
            "cell": cell,
            "brightness": np.asarray(
                [math.nan if records[i].brightness is None else records[i].brightness
                 for i in idx], dtype=float),
            "c": np.asarray(
                [math.nan if d is None else _mean_confidence(d) for d in det_of],
                dtype=float),
            "n_obj": np.asarray(
                [-1 if d is None else len(d.objects) for d in det_of], dtype=np.int64),
        }
        counts[rid] = len(idx)
        dr = data[rid]["day"]
        day_range[rid] = [int(dr.min()), int(dr.max())] if len(dr) else None

    # records in a region that has no grid count as outside, not unsnapped
    gridded_ordinals = np.asarray(sorted(all_ids.index(rid) for rid in region_ids),
                                  dtype=np.int64)
    outside_region = int((~np.isin(ordinal, gridded_ordinals)).sum()) if n else 0
    unsnapped = n - accepted - outside_region

    manifest = {
        "version": INDEX_VERSION,
        "cell_length_m": config.cell_length_m,
        "snap_radius_m": config.snap_radius_m,
        "day_offset_hours": config.day_offset_hours,
        "region_ids": region_ids,
        "grids": {rid: grids[rid].to_dict() for rid in region_ids},
        "regions_geojson": geo.regions_geojson(regions),
        "counts": counts,
        "day_range": day_range,
        "stats": {
            "accepted": accepted,
            "outside_region": outside_region,
            "unsnapped": unsnapped,
            "invalid": invalid_count,
        },
    }
    return Index(manifest, data)


def _rank_of(ids: list[str]) -> np.ndarray:
    rank = np.empty(len(ids), dtype=np.int64)
    for r, i in enumerate(sorted(range(len(ids)), key=ids.__getitem__)):
        rank[i] = r
    return rank


def _mean_confidence(det: DetectionSet) -> float:
    if not det.objects:
        return 0.0
    return sum(o["confidence"] for o in det.objects) / len(det.objects)


def persist_index(index: Index, path: str) -> None:
    """Write manifest + per-region record files; canonical bytes throughout."""
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "manifest.json"), "wb") as fh:
        fh.write(canonical_json_bytes(index.manifest))
    for rid in index.region_ids:
        with open(os.path.join(path, _region_filename(rid)), "wb") as fh:
            for rec in index.records(rid):
                fh.write(canonical_json_bytes(rec))
    index.path = path


def open_index(path: str) -> Index:
    """Open a persisted index; region record files load lazily."""
    manifest_path = os.path.join(path, "manifest.json")
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise IngestError(f"no index at {path!r} (manifest.json missing)") from None
    except json.JSONDecodeError:
        raise IngestError("manifest.json is not valid JSON") from None
    version = manifest.get("version")
    if version != INDEX_VERSION:
        raise IngestError(f"unsupported index version {version!r}")
    return Index(manifest, path=path)
