"""Render a scores document as CSV, canonical JSON, or an SVG bar chart of
the per-attribute scores."""

from __future__ import annotations

import csv
import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .ingest import canonical_json_bytes  # noqa: E402

FORMATS = ("csv", "json", "svg")

_CSV_FIELDS = ["region_id", "rank", "s_raw", "t_raw", "c_raw", "S", "T", "C", "Q"]


class ReportError(ValueError):
    pass


def to_csv(payload: dict) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_FIELDS)
    for seg in payload.get("segments", []):
        writer.writerow([seg[f] for f in _CSV_FIELDS])
    return buf.getvalue().encode("utf-8")


def to_svg(payload: dict) -> bytes:
    """Grouped S/T/C bars per segment, in payload (rank) order. Byte-stable:
    fixed hash salt, no embedded date."""
    segments = payload.get("segments", [])
    labels = [s["region_id"] for s in segments]
    n = len(segments)
    with plt.rc_context({"svg.hashsalt": "svqoi", "figure.dpi": 96}):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * n + 2.0), 3.2))
        xs = range(n)
        width = 0.27
        for k, (attr, color) in enumerate(
                (("S", "#4c72b0"), ("T", "#dd8452"), ("C", "#55a868"))):
            ax.bar([x + (k - 1) * width for x in xs],
                   [s[attr] for s in segments], width, label=attr, color=color)
        ax.set_xticks(list(xs))
        ax.set_xticklabels(labels, rotation=30, ha="right")
        ax.set_ylim(0.0, 1.05)
        ax.set_ylabel("normalized score")
        w = payload.get("weights", [])
        ax.set_title(f"quality scores ({payload.get('metric', '?')}, "
                     f"weights {','.join(str(x) for x in w)})")
        ax.legend(loc="upper right", ncol=3, fontsize=8)
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def render(payload: dict, fmt: str) -> bytes:
    if fmt == "csv":
        return to_csv(payload)
    if fmt == "json":
        return canonical_json_bytes(payload)
    if fmt == "svg":
        return to_svg(payload)
    raise ReportError(f"unknown report format {fmt!r}")
