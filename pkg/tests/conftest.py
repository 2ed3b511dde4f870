"""Shared fixtures: a small two-region city, record generators, and a
synthetic week of uniform captures."""

import json
import os

import numpy as np
import pytest

from svqoi import geo, ingest, qoi

# degrees per meter along a meridian (and along the equator at lat 0)
M = 1.0 / 111319.49079327358

DAY0_TS = 1_600_000_000  # 2020-09-13T12:26:40Z


def rect_ring(x_m, y_m, w_m, h_m):
    """Closed lon/lat ring of a rectangle given in meters at the equator."""
    x0, y0, x1, y1 = x_m * M, y_m * M, (x_m + w_m) * M, (y_m + h_m) * M
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]


def region_feature(region_id, x_m, y_m, w_m, h_m):
    return {"type": "Feature", "properties": {"region_id": region_id},
            "geometry": {"type": "Polygon", "coordinates": [rect_ring(x_m, y_m, w_m, h_m)]}}


def street_feature(x_m, y_m, length_m):
    return {"type": "Feature", "properties": {},
            "geometry": {"type": "LineString",
                         "coordinates": [[x_m * M, y_m * M], [(x_m + length_m) * M, y_m * M]]}}


def fc(features):
    return {"type": "FeatureCollection", "features": features}


def two_region_geojson():
    """Regions A and B, 500x500 m, side by side; two 400 m streets each."""
    regions = fc([region_feature("A", 0, 0, 500, 500),
                  region_feature("B", 600, 0, 500, 500)])
    network = fc([street_feature(50, 100, 400), street_feature(50, 300, 400),
                  street_feature(650, 100, 400), street_feature(650, 300, 400)])
    return network, regions


def build_city(cell_length_m=10.0):
    network_gj, regions_gj = two_region_geojson()
    regions = geo.load_regions(regions_gj)
    network = geo.load_network(network_gj)
    grids = {r.region_id: geo.region_grid(network, r, regions, cell_length_m)
             for r in regions.regions}
    return {"network_gj": network_gj, "regions_gj": regions_gj,
            "network": network, "regions": regions, "grids": grids}


def city_records(grids, days=3, start_ts=DAY0_TS):
    """Region A: every cell, every day, three 10-minute revisits, bright,
    high-confidence detections. Region B: half the cells, single dim visits,
    no detections. The quality ordering A > B is forced on all attributes."""
    records, detections = [], []
    k = 0
    for day in range(days):
        base = start_ts + day * 86400
        for rid, grid in sorted(grids.items()):
            if rid == "A":
                for ci in range(grid.n_cells):
                    lat, lon = grid.centroid_latlon[ci]
                    for rep in range(3):
                        rec_id = f"a{k}"
                        records.append({"id": rec_id, "lat": float(lat), "lon": float(lon),
                                        "ts": base + 3600 + rep * 600 + ci,
                                        "brightness": 0.8})
                        detections.append({"image_id": rec_id,
                                           "objects": [{"class": "car", "confidence": 0.9}]})
                        k += 1
            else:
                for ci in range(0, grid.n_cells, 2):
                    lat, lon = grid.centroid_latlon[ci]
                    records.append({"id": f"b{k}", "lat": float(lat), "lon": float(lon),
                                    "ts": base + 7200 + ci, "brightness": 0.05})
                    k += 1
    return records, detections


def dicts_to_records(dicts):
    text = "\n".join(json.dumps(d) for d in dicts)
    records, errors = ingest.parse_records(text, "jsonl")
    assert not errors
    return records


def build_city_index(days=3, cell_length_m=10.0):
    city = build_city(cell_length_m)
    rec_dicts, det_dicts = city_records(city["grids"], days=days)
    records = dicts_to_records(rec_dicts)
    detections, _ = ingest.parse_detections("\n".join(json.dumps(d) for d in det_dicts))
    index = ingest.build_index(records, detections, city["grids"], city["regions"],
                               ingest.IngestConfig(cell_length_m=cell_length_m))
    return city, index


def monday_on_or_after(day):
    while ingest.day_of_week(day) != 0:
        day += 1
    return day


def week_records(grid, per_day=21, start_day=None):
    """One Monday-to-Sunday week with exactly `per_day` records per day,
    spread over the grid cells at local mid-morning."""
    if start_day is None:
        start_day = monday_on_or_after(ingest.day_of(DAY0_TS, -5.0))
    shift = int(-5.0 * 3600)
    out = []
    k = 0
    for d in range(7):
        day = start_day + d
        for i in range(per_day):
            ci = (i * 7 + d) % grid.n_cells
            lat, lon = grid.centroid_latlon[ci]
            ts = day * 86400 - shift + 9 * 3600 + i * 60
            out.append({"id": f"w{k}", "lat": float(lat), "lon": float(lon),
                        "ts": ts, "brightness": 0.7})
            k += 1
    return out, start_day


def write_inputs(tmp_path, records=None, detections=None, network_gj=None, regions_gj=None):
    paths = {}
    if records is not None:
        p = os.path.join(tmp_path, "records.jsonl")
        with open(p, "w") as fh:
            for r in records:
                fh.write(json.dumps(r) + "\n")
        paths["records"] = p
    if detections is not None:
        p = os.path.join(tmp_path, "detections.jsonl")
        with open(p, "w") as fh:
            for d in detections:
                fh.write(json.dumps(d) + "\n")
        paths["detections"] = p
    if network_gj is not None:
        p = os.path.join(tmp_path, "network.json")
        with open(p, "w") as fh:
            json.dump(network_gj, fh)
        paths["network"] = p
    if regions_gj is not None:
        p = os.path.join(tmp_path, "regions.json")
        with open(p, "w") as fh:
            json.dump(regions_gj, fh)
        paths["regions"] = p
    return paths


@pytest.fixture(scope="session")
def city():
    return build_city()


@pytest.fixture(scope="session")
def city_index():
    _, index = build_city_index()
    return index


@pytest.fixture(scope="session")
def city_index_dir(tmp_path_factory):
    city, index = build_city_index()
    path = str(tmp_path_factory.mktemp("idx"))
    ingest.persist_index(index, path)
    return path


@pytest.fixture(scope="session")
def week_index():
    """Single-region index holding the synthetic Monday..Sunday week."""
    city = build_city()
    grids = {"A": city["grids"]["A"]}
    recs, start_day = week_records(grids["A"])
    records = dicts_to_records(recs)
    index = ingest.build_index(records, {}, grids, city["regions"],
                               ingest.IngestConfig())
    index.start_day = start_day
    return index


@pytest.fixture(scope="session")
def week_index_dir(tmp_path_factory, week_index):
    path = str(tmp_path_factory.mktemp("weekidx"))
    ingest.persist_index(week_index, path)
    return path
