"""Per-attribute normalization, period integration, the unified weighted
score, segment ranking, quality-predicate filtering, and the end-to-end
scoring pipeline over an index."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import content, ingest, spatial, temporal

log = logging.getLogger(__name__)

METRICS = ("jsd", "emd", "sliced")

_trapz = getattr(np, "trapezoid", None) or np.trapz


class QoiError(ValueError):
    pass


@dataclass(frozen=True)
class Weights:
    """Importance coefficients: integers 0..5; 0 disregards an attribute."""

    alpha: int
    beta: int
    gamma: int

    def __post_init__(self):
        for w in (self.alpha, self.beta, self.gamma):
            if isinstance(w, bool) or not isinstance(w, int) or not 0 <= w <= 5:
                raise QoiError("weight out of range 0..5")

    def as_list(self) -> list[int]:
        return [self.alpha, self.beta, self.gamma]


def parse_weights(text: str) -> Weights:
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 3:
        raise QoiError("weights must be three comma-separated integers")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise QoiError("weights must be three comma-separated integers") from None
    return Weights(*nums)


@dataclass(frozen=True)
class QualityScore:
    region_id: str
    window: tuple[int, int] | None
    s_raw: float  # spatial distance (meters or bits)
    t_raw: float
    c_raw: float
    S: float
    T: float
    C: float
    Q: float = 0.0
    rank: int = 0


@dataclass(frozen=True)
class FilterSpec:
    """Conjunctive predicates over index records. Quality thresholds apply at
    region-day granularity against scores normalized over the whole index."""

    region_ids: tuple[str, ...] | None = None
    t0: int | None = None
    t1: int | None = None
    days_of_week: tuple[int, ...] | None = None   # Monday=0 .. Sunday=6
    hours_of_day: tuple[int, ...] | None = None
    min_brightness: float | None = None
    bbox: tuple[float, float, float, float] | None = None  # west,south,east,north
    min_S: float | None = None
    min_T: float | None = None
    min_C: float | None = None

    def __post_init__(self):
        if self.t0 is not None and self.t1 is not None and not self.t0 < self.t1:
            raise QoiError("filter window requires t0 < t1")
        if self.days_of_week is not None:
            if any(not 0 <= d <= 6 for d in self.days_of_week):
                raise QoiError("days_of_week must be in 0..6 (Monday=0)")
        if self.hours_of_day is not None:
            if any(not 0 <= h <= 23 for h in self.hours_of_day):
                raise QoiError("hours_of_day must be in 0..23")
        if self.min_brightness is not None and not 0.0 <= self.min_brightness <= 1.0:
            raise QoiError("min_brightness must be in [0, 1]")
        if self.bbox is not None:
            w, s, e, n = self.bbox
            if not (w <= e and s <= n):
                raise QoiError("bbox must be west,south,east,north with west<=east, south<=north")
        for name, v in (("min_S", self.min_S), ("min_T", self.min_T), ("min_C", self.min_C)):
            if v is not None and not 0.0 <= v <= 1.0:
                raise QoiError(f"{name} must be in [0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "FilterSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise QoiError(f"unknown filter field {sorted(unknown)[0]!r}")

        def tup(key):
            v = d.get(key)
            return tuple(v) if v is not None else None

        return cls(
            region_ids=tup("region_ids"),
            t0=d.get("t0"),
            t1=d.get("t1"),
            days_of_week=tup("days_of_week"),
            hours_of_day=tup("hours_of_day"),
            min_brightness=d.get("min_brightness"),
            bbox=tup("bbox"),
            min_S=d.get("min_S"),
            min_T=d.get("min_T"),
            min_C=d.get("min_C"),
        )


# ---------------------------------------------------------------------------
# Normalization and aggregation


def normalize_spatial(distances) -> np.ndarray:
    """S = 1 - d/d_max per segment; all-zero distances normalize to all 1."""
    d = np.asarray(distances, dtype=float)
    if len(d) == 0:
        raise QoiError("normalize_spatial: no segments")
    if not np.isfinite(d).all():
        raise QoiError("normalize_spatial: non-finite distance")
    d_max = float(d.max())
    if d_max == 0.0:
        return np.ones_like(d)
    return 1.0 - d / d_max


def normalize_max(raws) -> np.ndarray:
    """v = raw / max(raws); an all-zero vector stays all zero."""
    r = np.asarray(raws, dtype=float)
    if (r < 0).any():
        raise QoiError("normalize_max: negative raw value")
    m = float(r.max()) if len(r) else 0.0
    return r / m if m > 0 else np.zeros_like(r)


def period_score(daily_values) -> float:
    """Trapezoidal integral of the day-indexed series divided by D-1, keeping
    the daily scale; a single day is its own score."""
    v = np.asarray(daily_values, dtype=float)
    if len(v) == 0:
        raise QoiError("period_score: empty series")
    if len(v) == 1:
        return float(v[0])
    return float(_trapz(v) / (len(v) - 1))


def unified(S: float, T: float, C: float, weights) -> float:
    w = weights if isinstance(weights, Weights) else Weights(*weights)
    return w.alpha * S + w.beta * T + w.gamma * C


def rank(scores, weights) -> list[QualityScore]:
    """Recompute Q under `weights` and order by descending Q, ties broken by
    ascending region_id; equal Q shares the smaller rank (1,1,3 style).

    Accepts arbitrary nonnegative weight triples so callers can rescale;
    range validation belongs to Weights/unified.
    """
    if isinstance(weights, Weights):
        a, b, g = weights.alpha, weights.beta, weights.gamma
    else:
        a, b, g = weights
    rescored = [replace(s, Q=a * s.S + b * s.T + g * s.C) for s in scores]
    rescored.sort(key=lambda s: (-s.Q, s.region_id))
    out: list[QualityScore] = []
    for i, s in enumerate(rescored):
        r = out[-1].rank if out and s.Q == out[-1].Q else i + 1
        out.append(replace(s, rank=r))
    return out


# ---------------------------------------------------------------------------
# Filtering


def region_day_quality(index: ingest.Index,
                       brightness_threshold: float = content.DEFAULT_BRIGHTNESS_THRESHOLD,
                       bin_width_s: float = temporal.DEFAULT_BIN_WIDTH_S) -> dict:
    """Normalized (S, T, C) per observed (region_id, day) over the whole
    index, using the JSD spatial measure. Basis for min_S/min_T/min_C."""
    keys, d_raw, t_raw, c_raw = [], [], [], []
    for rid in index.region_ids:
        grid = index.grid(rid)
        if grid.n_cells == 0:
            continue
        cols = index.columns(rid)
        ref = spatial.reference_uniform(grid)
        for day in np.unique(cols["day"]):
            m = cols["day"] == day
            counts = np.bincount(cols["cell"][m], minlength=grid.n_cells)
            obs = spatial.observed_histogram(counts, rid)
            keys.append((rid, int(day)))
            d_raw.append(spatial.spatial_distance(ref, obs, "jsd").distance)
            t_raw.append(temporal.temporal_raw(cols["cell"][m], cols["ts"][m], bin_width_s))
            c_raw.append(_content_sum(cols, m, brightness_threshold))
    if not keys:
        return {}
    S = normalize_spatial(d_raw)
    T = normalize_max(t_raw)
    C = normalize_max(c_raw)
    return {k: (float(S[i]), float(T[i]), float(C[i])) for i, k in enumerate(keys)}


def record_predicate(index: ingest.Index, spec: FilterSpec):
    """Build `allows(region_id, record_dict) -> bool` applying every spec
    predicate conjunctively. Quality thresholds are resolved against the
    index once, so the predicate is stable across repeated application."""
    offset = index.config.day_offset_hours
    regions = set(spec.region_ids) if spec.region_ids is not None else None
    dows = set(spec.days_of_week) if spec.days_of_week is not None else None
    hods = set(spec.hours_of_day) if spec.hours_of_day is not None else None
    quality = None
    if spec.min_S is not None or spec.min_T is not None or spec.min_C is not None:
        quality = region_day_quality(index)

    def allows(region_id: str, rec: dict) -> bool:
        if regions is not None and region_id not in regions:
            return False
        ts = rec["ts"]
        if spec.t0 is not None and ts < spec.t0:
            return False
        if spec.t1 is not None and ts >= spec.t1:
            return False
        if dows is not None and ingest.day_of_week(rec["day"]) not in dows:
            return False
        if hods is not None and ingest.hour_of_day(ts, offset) not in hods:
            return False
        if spec.min_brightness is not None:
            b = rec.get("brightness")
            if b is not None and b < spec.min_brightness:
                return False
        if spec.bbox is not None:
            w, s, e, n = spec.bbox
            if not (w <= rec["lon"] <= e and s <= rec["lat"] <= n):
                return False
        if quality is not None:
            stc = quality.get((region_id, rec["day"]))
            if stc is None:
                return False
            S, T, C = stc
            if spec.min_S is not None and S < spec.min_S:
                return False
            if spec.min_T is not None and T < spec.min_T:
                return False
            if spec.min_C is not None and C < spec.min_C:
                return False
        return True

    return allows


def filter_index(index: ingest.Index, spec: FilterSpec, sink=None) -> dict:
    """Stream the index through `spec`; call `sink(record)` for each kept
    record (records carry their region_id). Returns
    {input_count, kept_count, reduction_pct}."""
    allows = record_predicate(index, spec)
    input_count = 0
    kept_count = 0
    for rid in index.region_ids:
        input_count += index.record_count(rid)
        for rec in index.records(rid):
            if allows(rid, rec):
                kept_count += 1
                if sink is not None:
                    rec = dict(rec)
                    rec["region_id"] = rid
                    sink(rec)
    pct = 100.0 * (1.0 - kept_count / input_count) if input_count else 0.0
    return {"input_count": input_count, "kept_count": kept_count, "reduction_pct": pct}


# ---------------------------------------------------------------------------
# Scoring pipeline


def _content_sum(cols: dict, mask, threshold: float) -> float:
    b = cols["brightness"][mask]
    passes = np.isnan(b) | (b >= threshold)
    scored = passes & (cols["n_obj"][mask] >= 0)
    return float(cols["c"][mask][scored].sum())


def _resolve_window(index: ingest.Index, window):
    t0, t1 = window if window is not None else (None, None)
    if t0 is not None and t1 is not None and t1 <= t0:
        raise QoiError("empty window")
    offset = index.config.day_offset_hours
    span = index.day_range()
    day_lo = ingest.day_of(t0, offset) if t0 is not None else (span[0] if span else None)
    day_hi = ingest.day_of(t1 - 1, offset) if t1 is not None else (span[1] if span else None)
    if day_lo is None or day_hi is None or day_hi < day_lo:
        raise QoiError("empty window")
    shift = int(round(offset * 3600))
    from_ts = t0 if t0 is not None else day_lo * 86400 - shift
    to_ts = t1 if t1 is not None else (day_hi + 1) * 86400 - shift
    return day_lo, day_hi, from_ts, to_ts


def score_pipeline(index: ingest.Index, metric: str = "jsd", weights=(1, 1, 1),
                   window=None, *, seed: int = 0,
                   n_directions: int = spatial.DEFAULT_DIRECTIONS,
                   brightness_threshold: float = content.DEFAULT_BRIGHTNESS_THRESHOLD,
                   bin_width_s: float = temporal.DEFAULT_BIN_WIDTH_S,
                   threads: int = 1) -> list[QualityScore]:
    """Daily raw attributes per region -> trapezoidal period score ->
    cross-region normalization -> weighted Q -> ranked segments. Output is
    deterministic and independent of the worker-thread count."""
    w = weights if isinstance(weights, Weights) else Weights(*weights)
    if metric not in METRICS:
        raise QoiError(f"unknown metric {metric!r}; choose from {'|'.join(METRICS)}")
    day_lo, day_hi, from_ts, to_ts = _resolve_window(index, window)
    t0, t1 = (window if window is not None else (None, None))

    rids = [rid for rid in index.region_ids if index.grid(rid).n_cells > 0]
    for rid in index.region_ids:
        if rid not in rids:
            log.warning("region %s has no grid cells; skipped from scoring", rid)

    def region_raws(rid: str):
        grid = index.grid(rid)
        cols = index.columns(rid)
        ref = spatial.reference_uniform(grid)
        sel = np.ones(len(cols["ts"]), dtype=bool)
        if t0 is not None:
            sel &= cols["ts"] >= t0
        if t1 is not None:
            sel &= cols["ts"] < t1
        s_days, t_days, c_days = [], [], []
        for day in range(day_lo, day_hi + 1):
            m = sel & (cols["day"] == day)
            cells = cols["cell"][m]
            counts = np.bincount(cells, minlength=grid.n_cells)
            obs = spatial.observed_histogram(counts, rid)
            s_days.append(spatial.spatial_distance(
                ref, obs, metric, grid, n_directions=n_directions, seed=seed).distance)
            t_days.append(temporal.temporal_raw(cells, cols["ts"][m], bin_width_s))
            c_days.append(_content_sum(cols, m, brightness_threshold))
        return period_score(s_days), period_score(t_days), period_score(c_days)

    if threads > 1 and len(rids) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            raws = dict(zip(rids, ex.map(region_raws, rids)))
    else:
        raws = {rid: region_raws(rid) for rid in rids}

    if not rids:
        return []
    s_raw = [raws[r][0] for r in rids]
    t_raw = [raws[r][1] for r in rids]
    c_raw = [raws[r][2] for r in rids]
    S = normalize_spatial(s_raw)
    T = normalize_max(t_raw)
    C = normalize_max(c_raw)
    scores = [
        QualityScore(rid, (from_ts, to_ts), float(s_raw[i]), float(t_raw[i]),
                     float(c_raw[i]), float(S[i]), float(T[i]), float(C[i]))
        for i, rid in enumerate(rids)
    ]
    return rank(scores, w)


def scores_payload(index: ingest.Index, metric: str = "jsd", weights=(1, 1, 1),
                   window=None, *, seed: int = 0, threads: int = 1,
                   n_directions: int = spatial.DEFAULT_DIRECTIONS) -> dict:
    """The scores document: metric, weights, resolved window, and ranked
    segments. Serialize with `ingest.canonical_json_bytes` for byte-stable
    output."""
    w = weights if isinstance(weights, Weights) else Weights(*weights)
    scores = score_pipeline(index, metric, w, window, seed=seed, threads=threads,
                            n_directions=n_directions)
    if scores:
        from_ts, to_ts = scores[0].window
    else:
        _, _, from_ts, to_ts = _resolve_window(index, window)
    return {
        "metric": metric,
        "weights": w.as_list(),
        "window": {"from": from_ts, "to": to_ts},
        "segments": [
            {
                "region_id": s.region_id,
                "s_raw": s.s_raw,
                "t_raw": s.t_raw,
                "c_raw": s.c_raw,
                "S": s.S,
                "T": s.T,
                "C": s.C,
                "Q": s.Q,
                "rank": s.rank,
            }
            for s in scores
        ],
    }
