"""HTTP API behavior: bodies, status codes, CLI byte-parity, and the cache."""

import json

import pytest
from fastapi.testclient import TestClient

from svqoi import ingest, qoi, service
from svqoi.cli import main


@pytest.fixture(scope="module")
def client(city_index_dir):
    index = ingest.open_index(city_index_dir)
    return TestClient(service.build_app(index, static_dir=None))


@pytest.fixture(scope="module")
def week_client(week_index_dir):
    index = ingest.open_index(week_index_dir)
    return TestClient(service.build_app(index, static_dir=None))


def test_health(client):
    r = client.get("/api/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok"}


def test_regions_sorted(client):
    r = client.get("/api/regions")
    assert r.status_code == 200
    body = r.json()
    assert [e["region_id"] for e in body] == ["A", "B"]
    for e in body:
        assert e["cell_count"] == 80
    assert body[0]["record_count"] == 720
    assert body[1]["record_count"] == 120
    assert body[0]["day_range"][1] - body[0]["day_range"][0] == 2


def test_regions_stable_across_instances(city_index_dir, client):
    fresh = TestClient(service.build_app(ingest.open_index(city_index_dir),
                                         static_dir=None))
    assert fresh.get("/api/regions").content == client.get("/api/regions").content


def test_regions_geojson(client):
    gj = client.get("/api/regions.geojson").json()
    assert gj["type"] == "FeatureCollection"
    assert [f["properties"]["region_id"] for f in gj["features"]] == ["A", "B"]


def test_scores_bytes_equal_cli(client, city_index_dir, tmp_path):
    out = str(tmp_path / "scores.json")
    assert main(["score", "--index", city_index_dir, "--metric", "sliced",
                 "--weights", "2,1,3", "--seed", "7", "--out", out]) == 0
    r = client.get("/api/scores",
                   params={"weights": "2,1,3", "metric": "sliced", "seed": "7"})
    assert r.status_code == 200
    assert r.content == open(out, "rb").read()


def test_scores_default_parameters(client):
    r = client.get("/api/scores")
    assert r.status_code == 200
    payload = r.json()
    assert payload["weights"] == [1, 1, 1]
    assert payload["metric"] == "jsd"
    assert [s["region_id"] for s in payload["segments"]] == ["A", "B"]


def test_scores_q_consistent_with_attributes(client):
    # Q returned must equal the weighted sum of the returned S, T, C
    for weights in ("1,1,1", "5,0,1", "0,3,2"):
        a, b, g = (int(w) for w in weights.split(","))
        payload = client.get("/api/scores", params={"weights": weights}).json()
        for seg in payload["segments"]:
            assert seg["Q"] == pytest.approx(
                a * seg["S"] + b * seg["T"] + g * seg["C"], abs=1e-12)
        ranks = {s["region_id"]: s["rank"] for s in payload["segments"]}
        qs = {s["region_id"]: s["Q"] for s in payload["segments"]}
        assert (ranks["A"] < ranks["B"]) == (qs["A"] > qs["B"])


def test_scores_invalid_weights_400(client):
    r = client.get("/api/scores", params={"weights": "1,6,1"})
    assert r.status_code == 400
    assert r.json() == {"error": "weight out of range 0..5"}


def test_scores_invalid_metric_400(client):
    r = client.get("/api/scores", params={"metric": "hausdorff"})
    assert r.status_code == 400
    assert "unknown metric" in r.json()["error"]


def test_scores_non_integer_window_400(client):
    r = client.get("/api/scores", params={"from": "abc"})
    assert r.status_code == 400
    assert "error" in r.json()


def test_scores_empty_window_422(client):
    r = client.get("/api/scores", params={"from": "100", "to": "100"})
    assert r.status_code == 422
    assert r.json() == {"error": "empty window"}


def test_scores_cache_serves_identical_bytes(client):
    params = {"weights": "3,2,1", "metric": "jsd"}
    first = client.get("/api/scores", params=params)
    second = client.get("/api/scores", params=params)
    assert first.content == second.content
    # different parameters do not collide in the cache
    other = client.get("/api/scores", params={"weights": "1,2,3"})
    assert other.json()["weights"] == [1, 2, 3]


def test_windowed_scores(client, city_index_dir):
    index = ingest.open_index(city_index_dir)
    t0 = index.day_range()[0] * 86400 + 5 * 3600
    r = client.get("/api/scores", params={"from": str(t0), "to": str(t0 + 86400)})
    assert r.status_code == 200
    assert r.json()["window"] == {"from": t0, "to": t0 + 86400}


def test_holes_endpoint(client):
    r = client.get("/api/holes/B", params={"min_run": "1"})
    assert r.status_code == 200
    gj = r.json()
    assert len(gj["features"]) == 40
    assert client.get("/api/holes/A", params={"min_run": "1"}).json()["features"] == []


def test_holes_unknown_region_404(client):
    r = client.get("/api/holes/ZZZ")
    assert r.status_code == 404
    assert r.json() == {"error": "unknown region 'ZZZ'"}


@pytest.mark.parametrize("value", ["0", "x"])
def test_holes_bad_min_run_400(client, value):
    assert client.get("/api/holes/B", params={"min_run": value}).status_code == 400


def test_distribution_endpoint(client, city_index_dir):
    r = client.get("/api/distribution/A")
    assert r.status_code == 200
    gj = r.json()
    assert len(gj["features"]) == 80
    counts = [f["properties"]["count"] for f in gj["features"]]
    assert all(c == 9 for c in counts)  # 3 revisits x 3 days per cell
    # restricted to one day
    day = ingest.open_index(city_index_dir).day_range("A")[0]
    gj_day = client.get("/api/distribution/A", params={"day": str(day)}).json()
    assert all(f["properties"]["count"] == 3 for f in gj_day["features"])


def test_distribution_unknown_region_404(client):
    assert client.get("/api/distribution/ZZZ").status_code == 404


def test_distribution_bad_day_400(client):
    assert client.get("/api/distribution/A", params={"day": "x"}).status_code == 400


def test_filter_preview_empty_spec(client):
    r = client.post("/api/filter", json={})
    assert r.status_code == 200
    assert r.json() == {"input_count": 840, "kept_count": 840, "reduction_pct": 0.0}


def test_filter_preview_friday_week(week_client):
    r = week_client.post("/api/filter", json={"days_of_week": [4]})
    assert r.status_code == 200
    stats = r.json()
    assert stats["kept_count"] == 21
    assert stats["input_count"] == 147
    assert stats["reduction_pct"] == pytest.approx(100 * 6 / 7)


def test_filter_preview_matches_library(client, city_index_dir):
    spec = {"min_brightness": 0.15}
    r = client.post("/api/filter", json=spec)
    expected = qoi.filter_index(ingest.open_index(city_index_dir),
                                qoi.FilterSpec.from_dict(spec))
    assert r.json() == json.loads(ingest.canonical_json_bytes(expected))


@pytest.mark.parametrize("body,snippet", [
    ("not json", "JSON"),
    ("[1,2]", "object"),
])
def test_filter_preview_malformed_400(client, body, snippet):
    r = client.post("/api/filter", content=body,
                    headers={"content-type": "application/json"})
    assert r.status_code == 400
    assert snippet in r.json()["error"]


def test_filter_preview_unknown_field_400(client):
    r = client.post("/api/filter", json={"dow": [4]})
    assert r.status_code == 400
    assert "unknown filter field" in r.json()["error"]


def test_filter_preview_bad_value_400(client):
    r = client.post("/api/filter", json={"min_brightness": 2.0})
    assert r.status_code == 400


def test_error_bodies_always_use_error_key(client):
    responses = [
        client.get("/api/scores", params={"weights": "9,9,9"}),
        client.get("/api/scores", params={"from": "100", "to": "50"}),
        client.get("/api/holes/ZZZ"),
        client.post("/api/filter", json={"nope": 1}),
    ]
    for r in responses:
        assert r.status_code >= 400
        assert set(r.json()) == {"error"}
        assert isinstance(r.json()["error"], str)


def test_static_dashboard_served(city_index_dir, tmp_path):
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<html><body>dash</body></html>")
    app = service.build_app(ingest.open_index(city_index_dir),
                            static_dir=str(static))
    client = TestClient(app)
    r = client.get("/")
    assert r.status_code == 200
    assert "dash" in r.text
    # API still routed ahead of the static mount
    assert client.get("/api/health").json() == {"status": "ok"}
