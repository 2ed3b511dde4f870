"""CLI exit codes, output bytes, and stderr diagnostics."""

import json
import os
import subprocess
import sys

import pytest

from svqoi import ingest, qoi
from svqoi.cli import main

from conftest import build_city, city_records, two_region_geojson, write_inputs


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --------------------------------------------------------------------- ingest

@pytest.fixture()
def input_files(tmp_path):
    city = build_city()
    records, detections = city_records(city["grids"], days=1)
    network_gj, regions_gj = two_region_geojson()
    return write_inputs(tmp_path, records, detections, network_gj, regions_gj)


def test_ingest_writes_index_and_stats(input_files, tmp_path, capsys):
    out = str(tmp_path / "idx")
    code, _, err = run(["ingest", "--records", input_files["records"],
                        "--detections", input_files["detections"],
                        "--network", input_files["network"],
                        "--regions", input_files["regions"],
                        "--out", out], capsys)
    assert code == 0
    assert "accepted=280 outside_region=0 unsnapped=0 invalid=0" in err
    assert os.path.exists(os.path.join(out, "manifest.json"))
    index = ingest.open_index(out)
    assert index.region_ids == ["A", "B"]


def test_ingest_strict_aborts_on_bad_line(input_files, tmp_path, capsys):
    with open(input_files["records"], "a") as fh:
        fh.write('{"id":"bad","lat":95,"lon":0,"ts":1}\n')
    code, _, err = run(["ingest", "--records", input_files["records"],
                        "--network", input_files["network"],
                        "--regions", input_files["regions"],
                        "--out", str(tmp_path / "idx")], capsys)
    assert code == 2
    assert "lat out of range" in err


def test_ingest_lenient_counts_invalid(input_files, tmp_path, capsys):
    with open(input_files["records"], "a") as fh:
        fh.write('{"id":"bad","lat":95,"lon":0,"ts":1}\n')
    out = str(tmp_path / "idx")
    code, _, err = run(["ingest", "--records", input_files["records"],
                        "--network", input_files["network"],
                        "--regions", input_files["regions"],
                        "--out", out, "--lenient"], capsys)
    assert code == 0
    assert "invalid=1" in err
    assert ingest.open_index(out).stats["invalid"] == 1


def test_ingest_missing_file_is_data_error(tmp_path, capsys):
    code, _, err = run(["ingest", "--records", str(tmp_path / "none.jsonl"),
                        "--network", "x", "--regions", "y",
                        "--out", str(tmp_path / "idx")], capsys)
    assert code == 2
    assert "error:" in err


# ---------------------------------------------------------------------- score

def test_score_to_file_matches_library(city_index_dir, tmp_path, capsys):
    out = str(tmp_path / "scores.json")
    code, _, _ = run(["score", "--index", city_index_dir, "--metric", "jsd",
                      "--weights", "1,1,1", "--out", out], capsys)
    assert code == 0
    expected = ingest.canonical_json_bytes(
        qoi.scores_payload(ingest.open_index(city_index_dir), "jsd", (1, 1, 1)))
    assert open(out, "rb").read() == expected


def test_score_stdout_equals_file(city_index_dir, tmp_path, capsysbinary):
    code = main(["score", "--index", city_index_dir])
    assert code == 0
    stdout = capsysbinary.readouterr().out
    out = str(tmp_path / "scores.json")
    assert main(["score", "--index", city_index_dir, "--out", out]) == 0
    assert stdout == open(out, "rb").read()


def test_score_threads_do_not_change_bytes(city_index_dir, tmp_path, capsys):
    outs = []
    for t in ("1", "8"):
        out = str(tmp_path / f"s{t}.json")
        code, _, _ = run(["score", "--index", city_index_dir, "--metric", "sliced",
                          "--threads", t, "--out", out], capsys)
        assert code == 0
        outs.append(open(out, "rb").read())
    assert outs[0] == outs[1]


def test_score_window_flags(city_index_dir, tmp_path, capsys):
    index = ingest.open_index(city_index_dir)
    t0 = index.day_range()[0] * 86400 + 5 * 3600
    out = str(tmp_path / "w.json")
    code, _, _ = run(["score", "--index", city_index_dir, "--from", str(t0),
                      "--to", str(t0 + 86400), "--out", out], capsys)
    assert code == 0
    payload = json.load(open(out))
    assert payload["window"] == {"from": t0, "to": t0 + 86400}
    assert [s["region_id"] for s in payload["segments"]] == ["A", "B"]


def test_weights_out_of_range_is_usage_error(city_index_dir, capsys):
    code, _, err = run(["score", "--index", city_index_dir,
                        "--weights", "1,6,1"], capsys)
    assert code == 1
    assert "error: weight out of range 0..5" in err


def test_unknown_metric_is_usage_error(city_index_dir, capsys):
    code, _, err = run(["score", "--index", city_index_dir,
                        "--metric", "hausdorff"], capsys)
    assert code == 1


def test_missing_index_is_data_error(tmp_path, capsys):
    code, _, err = run(["score", "--index", str(tmp_path / "none")], capsys)
    assert code == 2
    assert "manifest.json missing" in err


def test_empty_window_is_data_error(city_index_dir, capsys):
    code, _, err = run(["score", "--index", city_index_dir,
                        "--from", "100", "--to", "100"], capsys)
    assert code == 2
    assert "empty window" in err


def test_no_arguments_is_usage_error(capsys):
    assert run([], capsys)[0] == 1
    assert run(["frobnicate"], capsys)[0] == 1


# ----------------------------------------------------------------------- rank

def test_rank_recomputes_q(city_index_dir, tmp_path, capsysbinary):
    scores_file = str(tmp_path / "scores.json")
    assert main(["score", "--index", city_index_dir, "--out", scores_file]) == 0
    assert main(["rank", "--scores", scores_file, "--weights", "5,0,0"]) == 0
    payload = json.loads(capsysbinary.readouterr().out)
    assert payload["weights"] == [5, 0, 0]
    by_id = {s["region_id"]: s for s in payload["segments"]}
    for seg in payload["segments"]:
        assert seg["Q"] == pytest.approx(5 * seg["S"])
    assert by_id["A"]["rank"] == 1


def test_rank_rejects_bad_weights(city_index_dir, tmp_path, capsys):
    scores_file = str(tmp_path / "scores.json")
    run(["score", "--index", city_index_dir, "--out", scores_file], capsys)
    code, _, err = run(["rank", "--scores", scores_file, "--weights", "9,0,0"],
                       capsys)
    assert code == 1
    assert "weight out of range 0..5" in err


# --------------------------------------------------------------------- filter

def test_filter_friday_stats_line(week_index_dir, tmp_path, capsys):
    out = str(tmp_path / "subset.jsonl")
    code, _, err = run(["filter", "--index", week_index_dir, "--dow", "fri",
                        "--out", out], capsys)
    assert code == 0
    assert "kept=21 input=147 reduction=85.714%" in err
    lines = open(out).read().splitlines()
    assert len(lines) == 21
    assert all(json.loads(line)["region_id"] == "A" for line in lines)


@pytest.mark.parametrize("token", ["fri", "friday", "FRI", "4"])
def test_filter_dow_spellings(week_index_dir, tmp_path, capsys, token):
    out = str(tmp_path / "subset.jsonl")
    code, _, err = run(["filter", "--index", week_index_dir, "--dow", token,
                        "--out", out], capsys)
    assert code == 0
    assert "kept=21" in err


def test_filter_unknown_dow_is_usage_error(week_index_dir, tmp_path, capsys):
    code, _, err = run(["filter", "--index", week_index_dir, "--dow", "noday",
                        "--out", str(tmp_path / "s.jsonl")], capsys)
    assert code == 1
    assert "unknown day of week" in err


def test_filter_quality_thresholds(city_index_dir, tmp_path, capsys):
    out = str(tmp_path / "subset.jsonl")
    code, _, err = run(["filter", "--index", city_index_dir, "--min-S", "0.5",
                        "--min-T", "0.5", "--min-C", "0.5", "--out", out], capsys)
    assert code == 0
    assert "kept=720 input=840" in err


# ---------------------------------------------------------------------- holes

def test_holes_on_half_sampled_region(city_index_dir, tmp_path, capsys):
    out = str(tmp_path / "holes.geojson")
    code, _, _ = run(["holes", "--index", city_index_dir, "--region", "B",
                      "--min-run", "1", "--out", out], capsys)
    assert code == 0
    gj = json.load(open(out))
    assert gj["type"] == "FeatureCollection"
    assert len(gj["features"]) == 40  # every other 10 m cell is unsampled
    for f in gj["features"]:
        assert f["properties"]["cells"] == 1
        assert f["properties"]["length_m"] == pytest.approx(10.0)


def test_holes_default_min_run_two(city_index_dir, tmp_path, capsys):
    out = str(tmp_path / "holes.geojson")
    code, _, _ = run(["holes", "--index", city_index_dir, "--region", "B",
                      "--out", out], capsys)
    assert code == 0
    assert json.load(open(out))["features"] == []


def test_holes_unknown_region_is_data_error(city_index_dir, tmp_path, capsys):
    code, _, err = run(["holes", "--index", city_index_dir, "--region", "ZZZ",
                        "--out", str(tmp_path / "h.geojson")], capsys)
    assert code == 2
    assert "unknown region" in err


# --------------------------------------------------------------------- report

@pytest.fixture()
def scores_file(city_index_dir, tmp_path):
    path = str(tmp_path / "scores.json")
    assert main(["score", "--index", city_index_dir, "--out", path]) == 0
    return path


def test_report_csv(scores_file, capsys):
    code, out, _ = run(["report", "--scores", scores_file, "--format", "csv"],
                       capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "region_id,rank,s_raw,t_raw,c_raw,S,T,C,Q"
    assert len(lines) == 3
    assert lines[1].startswith("A,1,")


def test_report_json_round_trips_scores(scores_file, capsysbinary):
    assert main(["report", "--scores", scores_file, "--format", "json"]) == 0
    assert capsysbinary.readouterr().out == open(scores_file, "rb").read()


def test_report_svg(scores_file, capsysbinary):
    assert main(["report", "--scores", scores_file, "--format", "svg"]) == 0
    svg = capsysbinary.readouterr().out
    assert svg.startswith(b"<?xml")
    assert b"<svg" in svg


def test_report_out_dir_writes_all_formats(scores_file, tmp_path, capsys):
    out_dir = str(tmp_path / "rep")
    code, _, _ = run(["report", "--scores", scores_file, "--out-dir", out_dir],
                     capsys)
    assert code == 0
    assert sorted(os.listdir(out_dir)) == ["report.csv", "report.json", "report.svg"]


def test_report_missing_scores_is_data_error(tmp_path, capsys):
    code, _, _ = run(["report", "--scores", str(tmp_path / "none.json")], capsys)
    assert code == 2


# ------------------------------------------------------------- cross-process

def subprocess_run(argv):
    return subprocess.run([sys.executable, "-m", "svqoi.cli", *argv],
                          capture_output=True, timeout=120)


def test_score_bytes_stable_across_processes(city_index_dir):
    runs = [subprocess_run(["score", "--index", city_index_dir,
                            "--metric", "sliced", "--weights", "2,1,3"])
            for _ in range(2)]
    assert all(r.returncode == 0 for r in runs)
    assert runs[0].stdout == runs[1].stdout
    assert len(runs[0].stdout) > 0


def test_svg_bytes_stable_across_processes(city_index_dir, tmp_path):
    scores = str(tmp_path / "scores.json")
    assert subprocess_run(["score", "--index", city_index_dir,
                           "--out", scores]).returncode == 0
    runs = [subprocess_run(["report", "--scores", scores, "--format", "svg"])
            for _ in range(2)]
    assert all(r.returncode == 0 for r in runs)
    assert runs[0].stdout == runs[1].stdout
