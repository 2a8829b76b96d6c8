"""Completed local binary patterns: sign (CLBP_S) and magnitude (CLBP_M) code maps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from .grid_ingest import DepthMap

ENCODINGS = ("riu2", "ri")


@dataclass(frozen=True)
class ClbpConfig:
    radius: int = 3
    samples: int = 8
    encoding: str = "riu2"

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("radius must be >= 1")
        if self.samples < 4:
            raise ValueError("samples must be >= 4")
        if self.samples > 24:
            raise ValueError("samples > 24 would need an oversized lookup table")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"encoding must be one of {ENCODINGS}, got {self.encoding!r}")

    @property
    def code_count(self) -> int:
        return code_count(self.encoding, self.samples)


@dataclass(frozen=True)
class ClbpMaps:
    s_map: np.ndarray
    m_map: np.ndarray
    # (row, col, height, width) of the valid interior in source-map coordinates
    valid_region: Tuple[int, int, int, int]
    config: ClbpConfig
    magnitude_threshold: float


def code_count(encoding: str, samples: int) -> int:
    if encoding == "riu2":
        return samples + 2
    if encoding == "ri":
        return 1 << samples
    raise ValueError(f"unknown encoding {encoding!r}")


@lru_cache(maxsize=None)
def encoding_table(encoding: str, samples: int) -> np.ndarray:
    """Lookup table from raw ``samples``-bit codes to encoded codes."""
    raw = np.arange(1 << samples, dtype=np.int64)
    mask = (1 << samples) - 1
    if encoding == "ri":
        best = raw.copy()
        rot = raw.copy()
        for _ in range(samples - 1):
            rot = ((rot >> 1) | ((rot & 1) << (samples - 1))) & mask
            best = np.minimum(best, rot)
        table = best
    elif encoding == "riu2":
        rotated = ((raw >> 1) | ((raw & 1) << (samples - 1))) & mask
        transitions = _popcount(raw ^ rotated)
        table = np.where(transitions <= 2, _popcount(raw), samples + 1)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    table = table.astype(np.int64)
    table.setflags(write=False)
    return table


def _popcount(values: np.ndarray) -> np.ndarray:
    count = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        count += v & 1
        v >>= 1
    return count


def _sample_offsets(radius: int, samples: int) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(samples) / samples
    offsets = np.stack([-radius * np.sin(angles), radius * np.cos(angles)], axis=1)
    # snap round-off (e.g. cos(pi/2) ~ 6e-17) so lattice samples hit pixels exactly
    snapped = np.round(offsets)
    return np.where(np.abs(offsets - snapped) < 1e-9, snapped, offsets)


def _neighbor_differences(values: np.ndarray, radius: int, samples: int) -> np.ndarray:
    h, w = values.shape
    ih, iw = h - 2 * radius, w - 2 * radius
    center = values[radius:radius + ih, radius:radius + iw]
    diffs = np.empty((samples, ih, iw))
    for k, (dy, dx) in enumerate(_sample_offsets(radius, samples)):
        y0, x0 = int(np.floor(dy)), int(np.floor(dx))
        fy, fx = dy - y0, dx - x0

        def window(oy, ox):
            r, c = radius + oy, radius + ox
            return values[r:r + ih, c:c + iw]

        if fy == 0.0 and fx == 0.0:
            sample = window(y0, x0)
        else:
            # difference form: exact on locally constant regions, unlike the weighted sum
            a, b = window(y0, x0), window(y0, x0 + 1)
            c, d = window(y0 + 1, x0), window(y0 + 1, x0 + 1)
            sample = a + fx * (b - a) + fy * (c - a) + fy * fx * (d - c - b + a)
        diffs[k] = sample - center
    return diffs


def clbp_maps(depth: DepthMap, config: ClbpConfig = ClbpConfig(),
              magnitude_threshold: Optional[float] = None) -> ClbpMaps:
    """Sign and magnitude CLBP codes for every pixel at least ``radius`` from the border.

    ``samples`` neighbors are read on a circle with bilinear interpolation;
    neighbor ``k`` sits at angle ``2*pi*k/samples``. The sign bit is set
    when a neighbor is >= the center; the magnitude bit when the absolute
    difference is >= the threshold, by default the mean absolute difference
    over the whole valid region (pass ``magnitude_threshold`` to compute it
    per patch instead).
    """
    values = depth.values
    r, n = config.radius, config.samples
    if values.shape[0] <= 2 * r or values.shape[1] <= 2 * r:
        raise ValueError(f"map of shape {values.shape} too small for radius {r}")
    diffs = _neighbor_differences(values, r, n)
    mags = np.abs(diffs)
    mu = float(mags.mean()) if magnitude_threshold is None else float(magnitude_threshold)
    weights = (1 << np.arange(n, dtype=np.int64))[:, None, None]
    s_raw = ((diffs >= 0) * weights).sum(axis=0)
    m_raw = ((mags >= mu) * weights).sum(axis=0)
    table = encoding_table(config.encoding, n)
    region = (r, r, values.shape[0] - 2 * r, values.shape[1] - 2 * r)
    return ClbpMaps(table[s_raw], table[m_raw], region, config, mu)


def clbp_to_patch(maps: ClbpMaps, which: str) -> DepthMap:
    """Reinterpret one code map as a scalar field (same shape as the valid region)."""
    if which == "s":
        return DepthMap(maps.s_map.astype(np.float64))
    if which == "m":
        return DepthMap(maps.m_map.astype(np.float64))
    raise ValueError(f"which must be 's' or 'm', got {which!r}")
