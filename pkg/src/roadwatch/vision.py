"""Motion detection: frame difference, threshold, smoothing, blob extraction.

The pipeline order is gray -> absolute difference -> threshold -> Gaussian
smooth -> re-threshold, producing a binary motion mask whose 8-connected
white components are reported as blobs. Every stage is a pure function over
immutable frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import Frame

DEFAULT_THRESHOLD = 25
DEFAULT_MIN_AREA = 8

REBINARIZE_LEVEL = 128  # restores a binary mask after smoothing


@dataclass(frozen=True)
class Blob:
    """One 8-connected white component of a motion mask.

    ``bbox`` is (min_x, min_y, max_x, max_y), inclusive. The centroid is the
    mean of pixel centers, each pixel (x, y) contributing (x + 0.5, y + 0.5).
    """

    area: int
    bbox: tuple[int, int, int, int]
    centroid: tuple[float, float]


def abs_diff(a: Frame, b: Frame) -> Frame:
    """Per-pixel absolute difference |a - b|."""
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    d = np.abs(a.pixels.astype(np.int16) - b.pixels.astype(np.int16))
    return Frame(d.astype(np.uint8))


def threshold(frame: Frame, t: int) -> Frame:
    """Binarize: 255 where value >= t, else 0."""
    if not 0 <= t <= 255:
        raise ValueError("threshold must lie in 0..255")
    out = (frame.pixels >= t).astype(np.uint8) * np.uint8(255)
    return Frame(out)


def gaussian_blur(frame: Frame) -> Frame:
    """Smooth with the fixed 3x3 kernel [[1,2,1],[2,4,2],[1,2,1]] / 16.

    Borders are handled by edge replication. The weighted sum is divided by
    16 rounding half-up, so exact .5 ties go to the larger value; a constant
    frame is reproduced exactly. Computed as two separable [1,2,1] passes,
    which gives the identical integer sum.
    """
    # max weighted sum is 255 * 16 = 4080, comfortably inside int16
    p = np.pad(frame.pixels, 1, mode="edge").astype(np.int16)
    v = p[:-2, :] + 2 * p[1:-1, :] + p[2:, :]
    s = v[:, :-2] + 2 * v[:, 1:-1] + v[:, 2:]
    return Frame(((s + 8) >> 4).astype(np.uint8))


def motion_mask(prev: Frame, curr: Frame, t: int = DEFAULT_THRESHOLD) -> Frame:
    """Binary mask of moved pixels between two consecutive frames.

    Difference, threshold at ``t``, Gaussian smooth, then re-threshold at 128
    so the output is binary again.
    """
    return threshold(gaussian_blur(threshold(abs_diff(prev, curr), t)), REBINARIZE_LEVEL)


def _row_runs(row_bool: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as (start, end) inclusive column indices."""
    xs = np.flatnonzero(row_bool)
    if xs.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(xs) > 1)
    starts = np.concatenate(([xs[0]], xs[breaks + 1]))
    ends = np.concatenate((xs[breaks], [xs[-1]]))
    return list(zip(starts.tolist(), ends.tolist()))


def extract_blobs(mask: Frame, min_area: int = DEFAULT_MIN_AREA) -> list[Blob]:
    """8-connected components of white pixels with area >= min_area.

    Uses row-run merging with union-find, so cost scales with the number of
    white runs rather than mask size. Blobs are ordered by (min_y, min_x) of
    their bounding boxes. Centroids are exact: per-run coordinate sums are
    kept as integers (doubled to stay integral) and divided once at the end.
    """
    if min_area < 1:
        raise ValueError("min_area must be >= 1")
    px = mask.pixels
    if np.any((px != 0) & (px != 255)):
        raise ValueError("mask is not binary (values must be 0 or 255)")
    white = px == 255

    parent: list[int] = []

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:  # path compression
            parent[i], i = root, parent[i]
        return root

    runs: list[tuple[int, int, int]] = []  # (y, start_x, end_x)
    prev_row: list[tuple[int, int, int]] = []  # (start_x, end_x, run_id)
    for y in np.flatnonzero(white.any(axis=1)).tolist():
        row = []
        for s, e in _row_runs(white[y]):
            rid = len(runs)
            runs.append((y, s, e))
            parent.append(rid)
            row.append((s, e, rid))
        # connect to the previous processed row only if vertically adjacent
        if prev_row and runs[prev_row[0][2]][0] == y - 1:
            for s, e, rid in row:
                for ps, pe, prid in prev_row:
                    if ps > e + 1:
                        break
                    if pe >= s - 1:  # 8-connectivity: column ranges within 1
                        ra, rb = find(rid), find(prid)
                        if ra != rb:
                            parent[rb] = ra
        prev_row = row

    groups: dict[int, list[int]] = {}
    for rid in range(len(runs)):
        groups.setdefault(find(rid), []).append(rid)

    blobs = []
    for members in groups.values():
        area = 0
        min_x = min_y = 1 << 30
        max_x = max_y = -1
        sum_cx2 = 0  # 2 * sum of (x + 0.5) over pixels
        sum_cy2 = 0  # 2 * sum of (y + 0.5) over pixels
        for rid in members:
            y, s, e = runs[rid]
            n = e - s + 1
            area += n
            min_x, max_x = min(min_x, s), max(max_x, e)
            min_y, max_y = min(min_y, y), max(max_y, y)
            sum_cx2 += (s + e + 1) * n
            sum_cy2 += (2 * y + 1) * n
        if area < min_area:
            continue
        blobs.append(
            Blob(
                area=area,
                bbox=(min_x, min_y, max_x, max_y),
                centroid=(sum_cx2 / (2 * area), sum_cy2 / (2 * area)),
            )
        )
    blobs.sort(key=lambda b: (b.bbox[1], b.bbox[0]))
    return blobs
