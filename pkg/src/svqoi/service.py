"""Read-only HTTP API over an opened index: regions, scores, holes, per-cell
distributions, and filter previews. Scores responses are the same bytes the
CLI emits for identical parameters, served from a parameter-keyed cache."""

from __future__ import annotations

import json
import os
import threading

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import geo, qoi
from .ingest import Index, canonical_json_bytes

STATIC_DIR = os.path.join(os.path.dirname(__file__), "static")


def _err(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def _canonical(obj) -> Response:
    return Response(content=canonical_json_bytes(obj), media_type="application/json")


def build_app(index: Index, static_dir: str | None = STATIC_DIR) -> FastAPI:
    app = FastAPI(title="svqoi", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    scores_cache: dict[tuple, bytes] = {}
    cache_lock = threading.Lock()

    @app.get("/api/health")
    def health():
        return _canonical({"status": "ok"})

    @app.get("/api/regions")
    def regions():
        out = []
        for rid in sorted(index.region_ids):
            out.append({
                "region_id": rid,
                "cell_count": index.grid(rid).n_cells,
                "record_count": index.record_count(rid),
                "day_range": index.day_range(rid),
            })
        return _canonical(out)

    @app.get("/api/regions.geojson")
    def regions_geojson():
        return _canonical(index.regions_geojson())

    @app.get("/api/scores")
    def scores(request: Request):
        params = request.query_params
        try:
            weights = qoi.parse_weights(params.get("weights", "1,1,1"))
        except qoi.QoiError as exc:
            return _err(400, str(exc))
        metric = params.get("metric", "jsd")
        if metric not in qoi.METRICS:
            return _err(400, f"unknown metric {metric!r}")
        try:
            t0 = int(params["from"]) if "from" in params else None
            t1 = int(params["to"]) if "to" in params else None
            seed = int(params.get("seed", 0))
        except ValueError:
            return _err(400, "from/to/seed must be integers")
        key = (tuple(weights.as_list()), metric, t0, t1, seed)
        with cache_lock:
            body = scores_cache.get(key)
        if body is None:
            try:
                payload = qoi.scores_payload(index, metric, weights,
                                             window=(t0, t1), seed=seed)
            except qoi.QoiError as exc:
                msg = str(exc)
                return _err(422 if "window" in msg else 400, msg)
            body = canonical_json_bytes(payload)
            with cache_lock:  # last writer wins
                scores_cache[key] = body
        return Response(content=body, media_type="application/json")

    @app.get("/api/holes/{region_id}")
    def holes(region_id: str, request: Request):
        if region_id not in index.region_ids:
            return _err(404, f"unknown region {region_id!r}")
        try:
            min_run = int(request.query_params.get("min_run", 2))
        except ValueError:
            return _err(400, "min_run must be an integer")
        if min_run < 1:
            return _err(400, "min_run must be >= 1")
        grid = index.grid(region_id)
        counts = np.bincount(index.columns(region_id)["cell"], minlength=grid.n_cells)
        found = geo.find_holes(grid, counts, min_run)
        return _canonical(geo.holes_geojson(grid, found))

    @app.get("/api/distribution/{region_id}")
    def distribution(region_id: str, request: Request):
        if region_id not in index.region_ids:
            return _err(404, f"unknown region {region_id!r}")
        day = request.query_params.get("day")
        if day is not None:
            try:
                day = int(day)
            except ValueError:
                return _err(400, "day must be an integer")
        grid = index.grid(region_id)
        cols = index.columns(region_id)
        cells = cols["cell"] if day is None else cols["cell"][cols["day"] == day]
        counts = np.bincount(cells, minlength=grid.n_cells)
        features = []
        for i in range(grid.n_cells):
            lat, lon = grid.centroid_latlon[i]
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point",
                             "coordinates": [float(lon), float(lat)]},
                "properties": {"cell_id": i, "count": int(counts[i])},
            })
        return _canonical({"type": "FeatureCollection", "features": features})

    @app.post("/api/filter")
    async def filter_preview(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return _err(400, "request body must be JSON")
        if not isinstance(body, dict):
            return _err(400, "filter spec must be a JSON object")
        try:
            spec = qoi.FilterSpec.from_dict(body)
        except (qoi.QoiError, TypeError, ValueError) as exc:
            return _err(400, str(exc))
        return _canonical(qoi.filter_index(index, spec))

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app


def serve(index: Index, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(build_app(index), host=host, port=port, log_level="warning")
