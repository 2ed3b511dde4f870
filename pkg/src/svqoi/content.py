"""Brightness-gated per-image content scoring: an image's content quality is
the mean confidence of its detected objects, and a slice aggregates by
summing over brightness-passing images that have a detection entry."""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_BRIGHTNESS_THRESHOLD = 0.15


class ContentError(ValueError):
    pass


@dataclass(frozen=True)
class ContentScore:
    image_id: str
    c: float              # mean detection confidence, 0 when no objects
    object_count: int
    passed_brightness: bool


def _brightness_of(record):
    if isinstance(record, dict):
        return record.get("brightness")
    return getattr(record, "brightness", None)


def passes_brightness(record, threshold: float = DEFAULT_BRIGHTNESS_THRESHOLD) -> bool:
    """Measured brightness below the threshold fails; missing brightness passes."""
    b = _brightness_of(record)
    return b is None or b >= threshold


def brightness_filter(records, threshold: float = DEFAULT_BRIGHTNESS_THRESHOLD):
    """Split records into (kept, dropped) by the brightness gate."""
    if not 0.0 <= threshold <= 1.0:
        raise ContentError("brightness threshold must be in [0, 1]")
    kept, dropped = [], []
    for r in records:
        (kept if passes_brightness(r, threshold) else dropped).append(r)
    return kept, dropped


def image_content_score(image_id: str, confidences,
                        passed_brightness: bool = True) -> ContentScore:
    """c = arithmetic mean of object confidences; zero objects -> c = 0."""
    confs = list(confidences)
    c = sum(confs) / len(confs) if confs else 0.0
    return ContentScore(image_id, c, len(confs), passed_brightness)


def content_raw(records, detections, threshold: float = DEFAULT_BRIGHTNESS_THRESHOLD) -> float:
    """Sum of per-image mean confidences over brightness-passing records that
    have a detection entry, accumulated in image_id order. Records without a
    detection entry are left out entirely: an unscanned image is not evidence
    of low quality.
    """
    kept, _ = brightness_filter(records, threshold)

    def rec_id(r):
        return r["id"] if isinstance(r, dict) else r.id

    total = 0.0
    for r in sorted(kept, key=rec_id):
        det = detections.get(rec_id(r))
        if det is None:
            continue
        confs = [o["confidence"] if isinstance(o, dict) else o.confidence
                 for o in (det["objects"] if isinstance(det, dict) else det.objects)]
        total += sum(confs) / len(confs) if confs else 0.0
    return total
