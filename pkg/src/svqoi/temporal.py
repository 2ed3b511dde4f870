"""Per-point revisit statistics and the temporal-quality aggregate: each
revisited cell contributes n / u, where u is the dominant inter-sample
interval in seconds, so frequently revisited points score high."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_BIN_WIDTH_S = 60.0


class TemporalError(ValueError):
    pass


@dataclass(frozen=True)
class RevisitStats:
    cell_id: int
    n: int                    # distinct sample times
    intervals_s: np.ndarray   # n - 1 consecutive gaps, all > 0
    u_s: float                # dominant inter-sample interval

    @property
    def contribution(self) -> float:
        return self.n / self.u_s


def revisit_stats(cell_timestamps, cell_id: int = -1,
                  bin_width_s: float = DEFAULT_BIN_WIDTH_S) -> RevisitStats | None:
    """Revisit statistics for one cell's timestamps within one window.

    Equal timestamps collapse to one sample (a burst is not a revisit);
    fewer than two distinct samples -> None.
    """
    ts = np.unique(np.asarray(cell_timestamps, dtype=np.int64))
    n = len(ts)
    if n < 2:
        return None
    intervals = np.diff(ts).astype(float)
    return RevisitStats(cell_id, n, intervals, dominant_interval(intervals, bin_width_s))


def dominant_interval(intervals_s, bin_width_s: float = DEFAULT_BIN_WIDTH_S) -> float:
    """Representative revisit gap: bin the intervals by nearest multiple of
    bin_width_s, take the most-populated bin (ties toward the smaller bin),
    and return the median of the intervals inside it."""
    iv = np.asarray(intervals_s, dtype=float)
    if len(iv) == 0:
        raise TemporalError("dominant_interval: no intervals")
    if bin_width_s <= 0:
        raise TemporalError("dominant_interval: bin width must be > 0")
    bins = np.rint(iv / bin_width_s).astype(np.int64)
    vals, counts = np.unique(bins, return_counts=True)
    modal = vals[np.argmax(counts)]  # vals ascending, argmax takes the first max
    return float(np.median(iv[bins == modal]))


def temporal_raw(cell_ids, timestamps, bin_width_s: float = DEFAULT_BIN_WIDTH_S) -> float:
    """Sum of n / u over revisited cells of one region-day slice, accumulated
    in cell_id order; 0.0 when nothing is revisited."""
    cell_ids = np.asarray(cell_ids, dtype=np.int64)
    ts = np.asarray(timestamps, dtype=np.int64)
    if len(cell_ids) != len(ts):
        raise TemporalError("temporal_raw: length mismatch")
    if len(cell_ids) == 0:
        return 0.0
    order = np.lexsort((ts, cell_ids))
    c = cell_ids[order]
    t = ts[order]
    starts = np.flatnonzero(np.concatenate([[True], c[1:] != c[:-1]]))
    ends = np.concatenate([starts[1:], [len(c)]])
    total = 0.0
    for s, e in zip(starts, ends):
        st = revisit_stats(t[s:e], cell_id=int(c[s]), bin_width_s=bin_width_s)
        if st is not None:
            total += st.contribution
    return total
