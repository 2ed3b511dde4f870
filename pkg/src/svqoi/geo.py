"""Street-network geometry: GeoJSON loading, local projection, grid cells,
point snapping, region assignment, and coverage-hole localization."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

log = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_378_137.0
DEFAULT_CELL_LENGTH_M = 10.0
DEFAULT_SNAP_RADIUS_M = 25.0

# Max perpendicular distance (degrees) for a point to count as "on" a
# polygon edge; ~0.1 micrometre, i.e. only exact-boundary points qualify.
_EDGE_EPS_DEG = 1e-9


class GeoError(ValueError):
    """Invalid geometry or GeoJSON input."""


@dataclass(frozen=True)
class StreetNetwork:
    region_id: str
    segments: list[np.ndarray]  # each (k, 2) of (lat, lon), k >= 2


@dataclass(frozen=True)
class Region:
    region_id: str
    # one entry per polygon; each polygon is a list of rings, each ring a
    # closed (k, 2) array of (lat, lon) with first vertex == last
    polygons: list[list[np.ndarray]]


@dataclass(frozen=True)
class RegionSet:
    regions: list[Region]

    def __post_init__(self):
        ids = [r.region_id for r in self.regions]
        if len(set(ids)) != len(ids):
            dup = sorted(i for i in set(ids) if ids.count(i) > 1)[0]
            raise GeoError(f"duplicate region_id {dup!r}")

    def ids(self) -> list[str]:
        return sorted(r.region_id for r in self.regions)


@dataclass(frozen=True)
class GridSegment:
    """One source polyline kept in a grid, with projected geometry."""

    latlon: np.ndarray  # (k, 2)
    xy: np.ndarray      # (k, 2) metres in the grid frame
    cum_m: np.ndarray   # (k,) cumulative arc length


@dataclass
class StreetGrid:
    """A street network discretized into fixed-length cells.

    Cell ids are dense 0..N-1 in segment-then-arc-length order. Each cell
    records its source segment, its position along that segment, and its
    arc interval [s0, s1] so hole runs and true lengths stay recoverable.
    """

    region_id: str
    cell_length_m: float
    origin: tuple[float, float]  # (lat0, lon0) of the local frame
    segments: list[GridSegment]
    seg_index: np.ndarray        # (n,) int32, index into segments
    seg_pos: np.ndarray          # (n,) int32, cell position along its segment
    s0_m: np.ndarray             # (n,) float64, arc start
    s1_m: np.ndarray             # (n,) float64, arc end
    centroid_xy: np.ndarray      # (n, 2) float64
    centroid_latlon: np.ndarray  # (n, 2) float64
    _tree: cKDTree | None = field(default=None, repr=False, compare=False)

    @property
    def n_cells(self) -> int:
        return len(self.seg_index)

    def cell_lengths_m(self) -> np.ndarray:
        return self.s1_m - self.s0_m

    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.centroid_xy)
        return self._tree

    def diameter_m(self) -> float:
        return _diameter(self.centroid_xy)

    def to_dict(self) -> dict:
        return {
            "region_id": self.region_id,
            "cell_length_m": self.cell_length_m,
            "origin": [self.origin[0], self.origin[1]],
            "segments": [s.latlon.tolist() for s in self.segments],
            "cells": {
                "seg_index": self.seg_index.tolist(),
                "seg_pos": self.seg_pos.tolist(),
                "s0_m": self.s0_m.tolist(),
                "s1_m": self.s1_m.tolist(),
                "centroid_xy": self.centroid_xy.tolist(),
                "centroid_latlon": self.centroid_latlon.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StreetGrid":
        origin = (float(d["origin"][0]), float(d["origin"][1]))
        segs = []
        for latlon in d["segments"]:
            ll = np.asarray(latlon, dtype=float).reshape(-1, 2)
            xy = np.column_stack(project(ll[:, 0], ll[:, 1], origin))
            segs.append(GridSegment(ll, xy, _cumlen(xy)))
        c = d["cells"]
        return cls(
            region_id=d["region_id"],
            cell_length_m=float(d["cell_length_m"]),
            origin=origin,
            segments=segs,
            seg_index=np.asarray(c["seg_index"], dtype=np.int32),
            seg_pos=np.asarray(c["seg_pos"], dtype=np.int32),
            s0_m=np.asarray(c["s0_m"], dtype=float),
            s1_m=np.asarray(c["s1_m"], dtype=float),
            centroid_xy=np.asarray(c["centroid_xy"], dtype=float).reshape(-1, 2),
            centroid_latlon=np.asarray(c["centroid_latlon"], dtype=float).reshape(-1, 2),
        )


@dataclass(frozen=True)
class CoverageHole:
    region_id: str
    segment_index: int
    cell_id_start: int
    cell_id_end: int  # inclusive
    length_m: float
    centroid_latlon: tuple[float, float]


# ---------------------------------------------------------------------------
# GeoJSON loading


def _check_latlon(lat: float, lon: float, where: str) -> None:
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise GeoError(f"{where}: coordinate ({lat}, {lon}) out of bounds")


def _coords_to_latlon(coords, where: str) -> np.ndarray:
    # GeoJSON positions are [lon, lat]
    arr = np.asarray(coords, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise GeoError(f"{where}: expected a coordinate sequence")
    latlon = arr[:, [1, 0]]
    lat, lon = latlon[:, 0], latlon[:, 1]
    if (np.abs(lat) > 90.0).any() or (np.abs(lon) > 180.0).any():
        raise GeoError(f"{where}: coordinate out of bounds")
    return latlon


def _features(geojson: dict, kind: str) -> list[dict]:
    if not isinstance(geojson, dict) or geojson.get("type") != "FeatureCollection":
        raise GeoError(f"{kind}: expected a GeoJSON FeatureCollection")
    return geojson.get("features") or []


def load_network(geojson: dict, region_id: str = "") -> StreetNetwork:
    """Load a street network from a LineString/MultiLineString FeatureCollection."""
    segments: list[np.ndarray] = []
    for idx, feat in enumerate(_features(geojson, "network")):
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        if gtype == "LineString":
            parts = [geom.get("coordinates")]
        elif gtype == "MultiLineString":
            parts = geom.get("coordinates") or []
        else:
            raise GeoError(f"network feature {idx}: unsupported geometry type {gtype!r}")
        for part in parts:
            latlon = _coords_to_latlon(part, f"network feature {idx}")
            if len(latlon) < 2:
                raise GeoError(f"network feature {idx}: polyline needs >= 2 vertices")
            segments.append(latlon)
    return StreetNetwork(region_id=region_id, segments=segments)


def load_regions(geojson: dict) -> RegionSet:
    """Load region polygons; each feature must carry a `region_id` property."""
    regions: list[Region] = []
    for idx, feat in enumerate(_features(geojson, "regions")):
        props = feat.get("properties") or {}
        rid = props.get("region_id")
        if rid is None:
            raise GeoError(f"region feature {idx}: missing region_id property")
        geom = feat.get("geometry") or {}
        gtype = geom.get("type")
        if gtype == "Polygon":
            polys = [geom.get("coordinates") or []]
        elif gtype == "MultiPolygon":
            polys = geom.get("coordinates") or []
        else:
            raise GeoError(f"region feature {idx}: unsupported geometry type {gtype!r}")
        out_polys = []
        for poly in polys:
            rings = []
            for ring in poly:
                latlon = _coords_to_latlon(ring, f"region feature {idx}")
                if len(latlon) < 4 or not np.array_equal(latlon[0], latlon[-1]):
                    raise GeoError(f"region feature {idx}: ring not closed")
                rings.append(latlon)
            out_polys.append(rings)
        regions.append(Region(region_id=str(rid), polygons=out_polys))
    return RegionSet(regions=regions)


# ---------------------------------------------------------------------------
# Projection


def project(lat, lon, origin: tuple[float, float]):
    """Equirectangular projection to metres about `origin` (lat0, lon0)."""
    lat0, lon0 = origin
    k = math.pi / 180.0
    x = EARTH_RADIUS_M * (np.asarray(lon, dtype=float) - lon0) * k * math.cos(lat0 * k)
    y = EARTH_RADIUS_M * (np.asarray(lat, dtype=float) - lat0) * k
    return x, y


def unproject(x, y, origin: tuple[float, float]):
    lat0, lon0 = origin
    k = math.pi / 180.0
    lat = np.asarray(y, dtype=float) / (EARTH_RADIUS_M * k) + lat0
    lon = np.asarray(x, dtype=float) / (EARTH_RADIUS_M * k * math.cos(lat0 * k)) + lon0
    return lat, lon


def region_centroid(region: Region) -> tuple[float, float]:
    """Mean of the outer-ring vertices (closing vertex excluded)."""
    pts = np.vstack([poly[0][:-1] for poly in region.polygons])
    return float(pts[:, 0].mean()), float(pts[:, 1].mean())


def _cumlen(xy: np.ndarray) -> np.ndarray:
    d = np.hypot(np.diff(xy[:, 0]), np.diff(xy[:, 1]))
    return np.concatenate([[0.0], np.cumsum(d)])


def _point_at(seg: GridSegment, s) -> np.ndarray:
    """Point(s) on a polyline at arc length s, linear in arc length."""
    s = np.asarray(s, dtype=float)
    x = np.interp(s, seg.cum_m, seg.xy[:, 0])
    y = np.interp(s, seg.cum_m, seg.xy[:, 1])
    return np.column_stack([x, y]) if s.ndim else np.array([x, y])


# ---------------------------------------------------------------------------
# Grid construction


def build_grid(
    network: StreetNetwork,
    cell_length_m: float = DEFAULT_CELL_LENGTH_M,
    origin: tuple[float, float] | None = None,
) -> StreetGrid:
    """Subdivide each polyline by arc length into cells of <= cell_length_m.

    Cell centroids sit at each cell's arc-length midpoint. Zero-length
    segments are skipped with a warning.
    """
    if cell_length_m <= 0:
        raise GeoError("cell_length_m must be > 0")
    if origin is None:
        if not network.segments:
            raise GeoError("cannot infer origin for an empty network")
        pts = np.vstack(network.segments)
        origin = (float(pts[:, 0].mean()), float(pts[:, 1].mean()))

    kept: list[GridSegment] = []
    seg_index, seg_pos, s0s, s1s, cxy, cll = [], [], [], [], [], []
    for raw_idx, latlon in enumerate(network.segments):
        xy = np.column_stack(project(latlon[:, 0], latlon[:, 1], origin))
        cum = _cumlen(xy)
        total = float(cum[-1])
        if total <= 0.0:
            log.warning(
                "network %s: segment %d has zero length, skipped",
                network.region_id or "<unnamed>", raw_idx,
            )
            continue
        seg = GridSegment(latlon, xy, cum)
        n = math.ceil(total / cell_length_m)
        bounds = np.minimum(np.arange(n + 1) * cell_length_m, total)
        mids = 0.5 * (bounds[:-1] + bounds[1:])
        pts = _point_at(seg, mids)
        lat, lon = unproject(pts[:, 0], pts[:, 1], origin)
        kept.append(seg)
        k = len(kept) - 1
        seg_index.extend([k] * n)
        seg_pos.extend(range(n))
        s0s.extend(bounds[:-1])
        s1s.extend(bounds[1:])
        cxy.append(pts)
        cll.append(np.column_stack([lat, lon]))

    return StreetGrid(
        region_id=network.region_id,
        cell_length_m=cell_length_m,
        origin=origin,
        segments=kept,
        seg_index=np.asarray(seg_index, dtype=np.int32),
        seg_pos=np.asarray(seg_pos, dtype=np.int32),
        s0_m=np.asarray(s0s, dtype=float),
        s1_m=np.asarray(s1s, dtype=float),
        centroid_xy=np.vstack(cxy) if cxy else np.empty((0, 2)),
        centroid_latlon=np.vstack(cll) if cll else np.empty((0, 2)),
    )


def region_grid(
    network: StreetNetwork,
    region: Region,
    regions: RegionSet,
    cell_length_m: float = DEFAULT_CELL_LENGTH_M,
) -> StreetGrid:
    """Build the grid for one region: the full network discretized in the
    region's local frame, keeping cells whose centroid the region owns under
    the same tie-break rule used for records."""
    origin = region_centroid(region)
    full = build_grid(network, cell_length_m, origin=origin)
    if full.n_cells == 0:
        return StreetGrid(
            region.region_id, cell_length_m, origin, [],
            np.empty(0, np.int32), np.empty(0, np.int32),
            np.empty(0), np.empty(0), np.empty((0, 2)), np.empty((0, 2)),
        )
    owner = assign_region_many(
        full.centroid_latlon[:, 0], full.centroid_latlon[:, 1], regions
    )
    keep = np.flatnonzero(owner == _region_ordinal(regions, region.region_id))
    old_seg = full.seg_index[keep]
    used = sorted(set(old_seg.tolist()))
    remap = {old: new for new, old in enumerate(used)}
    return StreetGrid(
        region_id=region.region_id,
        cell_length_m=cell_length_m,
        origin=origin,
        segments=[full.segments[i] for i in used],
        seg_index=np.asarray([remap[i] for i in old_seg], dtype=np.int32),
        seg_pos=full.seg_pos[keep],
        s0_m=full.s0_m[keep],
        s1_m=full.s1_m[keep],
        centroid_xy=full.centroid_xy[keep],
        centroid_latlon=full.centroid_latlon[keep],
    )


def _region_ordinal(regions: RegionSet, region_id: str) -> int:
    return regions.ids().index(region_id)


# ---------------------------------------------------------------------------
# Snapping


def snap(point_xy, grid: StreetGrid, radius_m: float = DEFAULT_SNAP_RADIUS_M):
    """Nearest cell centroid within radius_m, ties to the lower cell_id."""
    ids = snap_many(np.asarray([point_xy], dtype=float), grid, radius_m)
    return int(ids[0]) if ids[0] >= 0 else None


def snap_many(points_xy: np.ndarray, grid: StreetGrid, radius_m: float = DEFAULT_SNAP_RADIUS_M) -> np.ndarray:
    """Vectorized snap; returns cell ids, -1 where nothing is within radius."""
    out = np.full(len(points_xy), -1, dtype=np.int64)
    if grid.n_cells == 0 or len(points_xy) == 0:
        return out
    k = min(8, grid.n_cells)
    dist, idx = grid.tree().query(points_xy, k=k)
    if k == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    hit = dist[:, 0] <= radius_m
    # ties at the minimum distance go to the lowest cell id
    tied = dist == dist[:, [0]]
    best = np.where(tied, idx, np.iinfo(np.int64).max).min(axis=1)
    out[hit] = best[hit]
    return out


# ---------------------------------------------------------------------------
# Region assignment (even-odd point-in-polygon, boundary counts as inside)


def _contains(lat: np.ndarray, lon: np.ndarray, region: Region) -> np.ndarray:
    px, py = lon, lat
    inside = np.zeros(len(px), dtype=bool)
    on_edge = np.zeros(len(px), dtype=bool)
    for poly in region.polygons:
        for ring in poly:
            x1, y1 = ring[:-1, 1], ring[:-1, 0]
            x2, y2 = ring[1:, 1], ring[1:, 0]
            for e in range(len(x1)):
                ax, ay, bx, by = x1[e], y1[e], x2[e], y2[e]
                crosses = (ay > py) != (by > py)
                if crosses.any():
                    t = (py - ay) / (by - ay)
                    inside ^= crosses & (px < ax + t * (bx - ax))
                # boundary test: perpendicular distance and projection range
                ex, ey = bx - ax, by - ay
                L2 = ex * ex + ey * ey
                if L2 == 0.0:
                    near = (np.abs(px - ax) <= _EDGE_EPS_DEG) & (np.abs(py - ay) <= _EDGE_EPS_DEG)
                else:
                    cross = ex * (py - ay) - ey * (px - ax)
                    u = (ex * (px - ax) + ey * (py - ay)) / L2
                    near = (np.abs(cross) / math.sqrt(L2) <= _EDGE_EPS_DEG) & (u >= 0.0) & (u <= 1.0)
                on_edge |= near
    return inside | on_edge


def assign_region_many(lat: np.ndarray, lon: np.ndarray, regions: RegionSet) -> np.ndarray:
    """Region ordinal (index into regions.ids()) per point, -1 when outside
    all polygons. Overlaps resolve to the lexicographically lowest id."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    out = np.full(len(lat), -1, dtype=np.int64)
    by_id = {r.region_id: r for r in regions.regions}
    for ordinal, rid in enumerate(regions.ids()):
        undecided = out == -1
        if not undecided.any():
            break
        mask = _contains(lat[undecided], lon[undecided], by_id[rid])
        idxs = np.flatnonzero(undecided)[mask]
        out[idxs] = ordinal
    return out


def assign_region(lat: float, lon: float, regions: RegionSet) -> str | None:
    ords = assign_region_many(np.array([lat]), np.array([lon]), regions)
    return regions.ids()[ords[0]] if ords[0] >= 0 else None


# ---------------------------------------------------------------------------
# Coverage


def coverage_fraction(grid: StreetGrid, counts: np.ndarray) -> float:
    """Fraction of cells with at least one sample."""
    if grid.n_cells == 0:
        raise GeoError("coverage_fraction: empty grid")
    counts = np.asarray(counts)
    if len(counts) != grid.n_cells:
        raise GeoError("coverage_fraction: counts length != cell count")
    return float((counts >= 1).sum() / grid.n_cells)


def find_holes(grid: StreetGrid, counts: np.ndarray, min_run_cells: int = 2) -> list[CoverageHole]:
    """Maximal zero-count runs of >= min_run_cells consecutive cells within a
    segment, sorted by descending length."""
    if min_run_cells < 1:
        raise GeoError("min_run_cells must be >= 1")
    counts = np.asarray(counts)
    if len(counts) != grid.n_cells:
        raise GeoError("find_holes: counts length != cell count")
    holes: list[CoverageHole] = []
    lengths = grid.cell_lengths_m()
    i = 0
    n = grid.n_cells
    while i < n:
        if counts[i] != 0:
            i += 1
            continue
        j = i
        while (
            j + 1 < n
            and counts[j + 1] == 0
            and grid.seg_index[j + 1] == grid.seg_index[i]
            and grid.seg_pos[j + 1] == grid.seg_pos[j] + 1
        ):
            j += 1
        run = j - i + 1
        if run >= min_run_cells:
            seg = grid.segments[grid.seg_index[i]]
            mid_s = 0.5 * (grid.s0_m[i] + grid.s1_m[j])
            pt = _point_at(seg, mid_s)
            lat, lon = unproject(pt[0], pt[1], grid.origin)
            holes.append(CoverageHole(
                region_id=grid.region_id,
                segment_index=int(grid.seg_index[i]),
                cell_id_start=i,
                cell_id_end=j,
                length_m=float(lengths[i:j + 1].sum()),
                centroid_latlon=(float(lat), float(lon)),
            ))
        i = j + 1
    holes.sort(key=lambda h: (-h.length_m, h.segment_index, h.cell_id_start))
    return holes


def holes_geojson(grid: StreetGrid, holes: list[CoverageHole]) -> dict:
    """Holes as LineString features tracing the street between run ends."""
    feats = []
    for h in holes:
        seg = grid.segments[h.segment_index]
        s0 = float(grid.s0_m[h.cell_id_start])
        s1 = float(grid.s1_m[h.cell_id_end])
        inner = seg.cum_m[(seg.cum_m > s0) & (seg.cum_m < s1)]
        ss = np.concatenate([[s0], inner, [s1]])
        pts = _point_at(seg, ss)
        lat, lon = unproject(pts[:, 0], pts[:, 1], grid.origin)
        coords = [[float(lo), float(la)] for la, lo in zip(lat, lon)]
        feats.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {
                "region_id": h.region_id,
                "length_m": h.length_m,
                "cells": h.cell_id_end - h.cell_id_start + 1,
                "cell_id_start": h.cell_id_start,
                "cell_id_end": h.cell_id_end,
                "segment_index": h.segment_index,
            },
        })
    return {"type": "FeatureCollection", "features": feats}


def regions_geojson(regions: RegionSet) -> dict:
    feats = []
    for rid in regions.ids():
        region = next(r for r in regions.regions if r.region_id == rid)
        coords = [
            [[[float(lon), float(lat)] for lat, lon in ring] for ring in poly]
            for poly in region.polygons
        ]
        feats.append({
            "type": "Feature",
            "geometry": {"type": "MultiPolygon", "coordinates": coords},
            "properties": {"region_id": rid},
        })
    return {"type": "FeatureCollection", "features": feats}


def _diameter(xy: np.ndarray) -> float:
    """Max pairwise distance between points."""
    n = len(xy)
    if n < 2:
        return 0.0
    if n <= 2048:
        d2 = 0.0
        for i in range(0, n, 256):
            blk = xy[i:i + 256]
            diff = blk[:, None, :] - xy[None, :, :]
            d2 = max(d2, float((diff ** 2).sum(axis=2).max()))
        return math.sqrt(d2)
    from scipy.spatial import ConvexHull, QhullError
    try:
        hull = xy[ConvexHull(xy).vertices]
    except QhullError:
        # degenerate (collinear): extremes along the principal axis
        c = xy - xy.mean(axis=0)
        _, _, vt = np.linalg.svd(c, full_matrices=False)
        t = c @ vt[0]
        return float(t.max() - t.min())
    return _diameter(hull)
