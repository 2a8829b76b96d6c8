"""Seeded synthetic rock surfaces with engraved groove regions.

The base is isotropic power-law noise; engravings are wide strokes whose
pixels are depressed with a cosine falloff toward the stroke border and
roughened by extra pecking noise. White noise is added everywhere.
Everything is a deterministic function of ``SyntheticSpec.seed``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy import ndimage

from .grid_ingest import DepthMap, LabelMask

Polyline = Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class SyntheticSpec:
    width: int = 512
    height: int = 512
    base_roughness: float = 1.2      # amplitude spectrum ~ |k| ** -base_roughness
    base_amplitude: float = 0.5      # std of the base surface
    groove_depth: float = 2.5
    groove_width: float = 40.0       # half-width in pixels; mask is dist < groove_width
    engraved_shapes: Tuple[Polyline, ...] = ()
    noise_amplitude: float = 0.15
    peck_amplitude: float = 0.2      # extra noise std inside grooves, scaled by sqrt(profile)
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be >= 1")
        if not self.groove_depth > 0:
            raise ValueError("groove_depth must be > 0")
        if not self.groove_width > 0:
            raise ValueError("groove_width must be > 0")
        shapes = tuple(tuple((float(r), float(c)) for r, c in line) for line in self.engraved_shapes)
        for line in shapes:
            for r, c in line:
                if not (0 <= r <= self.height - 1 and 0 <= c <= self.width - 1):
                    raise ValueError(f"stroke point {(r, c)} lies outside the map")
        object.__setattr__(self, "engraved_shapes", shapes)


def fractal_surface(height: int, width: int, exponent: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean, unit-std power-law noise."""
    white = rng.standard_normal((height, width))
    ky = np.fft.fftfreq(height)[:, None]
    kx = np.fft.rfftfreq(width)[None, :]
    k = np.hypot(ky, kx)
    k[0, 0] = np.inf
    surface = np.fft.irfft2(np.fft.rfft2(white) * k ** -exponent, s=(height, width))
    std = surface.std()
    return (surface - surface.mean()) / std if std > 0 else surface


def stroke_distance(height: int, width: int, shapes: Sequence[Polyline]) -> np.ndarray:
    """Euclidean distance from every pixel to the nearest rasterized stroke (inf without strokes)."""
    if not shapes:
        return np.full((height, width), np.inf)
    on_stroke = np.zeros((height, width), dtype=bool)
    for line in shapes:
        pts = np.asarray(line, dtype=np.float64)
        if len(pts) == 1:
            pts = np.vstack([pts, pts])
        for a, b in zip(pts[:-1], pts[1:]):
            steps = max(2, int(np.ceil(4 * np.hypot(*(b - a)))) + 1)
            t = np.linspace(0.0, 1.0, steps)[:, None]
            rc = np.rint(a + t * (b - a)).astype(int)
            on_stroke[rc[:, 0], rc[:, 1]] = True
    return ndimage.distance_transform_edt(~on_stroke)


def generate(spec: SyntheticSpec) -> Tuple[DepthMap, LabelMask]:
    """Depth map and ground-truth mask; class 1 is exactly the depressed support."""
    rng = np.random.default_rng(spec.seed)
    h, w = spec.height, spec.width
    base = spec.base_amplitude * fractal_surface(h, w, spec.base_roughness, rng)
    noise = rng.standard_normal((h, w))
    peck = rng.standard_normal((h, w))
    dist = stroke_distance(h, w, spec.engraved_shapes)
    inside = dist < spec.groove_width
    profile = np.where(inside, 0.5 * (1.0 + np.cos(np.pi * np.minimum(dist, spec.groove_width)
                                                    / spec.groove_width)), 0.0)
    depth = (base - spec.groove_depth * profile + spec.noise_amplitude * noise
             + spec.peck_amplitude * np.sqrt(profile) * peck)
    return DepthMap(depth), LabelMask(inside.astype(np.uint8))


def random_strokes(height: int, width: int, groove_width: float, target_fraction: float,
                   rng: np.random.Generator, tolerance: float = 0.01,
                   max_strokes: int = 200) -> Tuple[Polyline, ...]:
    """Random polylines whose dilated union covers ``target_fraction`` of the map.

    Strokes are added until coverage reaches the target; the last stroke is
    then shortened by bisection so coverage lands within ``tolerance``.
    """
    if not 0.0 <= target_fraction < 1.0:
        raise ValueError("target_fraction must lie in [0, 1)")
    if target_fraction == 0.0:
        return ()
    margin = groove_width * 0.5
    lo_r, hi_r, lo_c, hi_c = margin, height - 1 - margin, margin, width - 1 - margin

    def coverage(shapes) -> float:
        return float(np.mean(stroke_distance(height, width, shapes) < groove_width))

    def random_line():
        n_vertices = int(rng.integers(3, 6))
        pts = [(rng.uniform(lo_r, hi_r), rng.uniform(lo_c, hi_c))]
        heading = rng.uniform(0, 2 * np.pi)
        for _ in range(n_vertices - 1):
            heading += rng.normal(0.0, 0.9)
            length = rng.uniform(2.0, 4.0) * groove_width
            r = float(np.clip(pts[-1][0] + length * np.sin(heading), lo_r, hi_r))
            c = float(np.clip(pts[-1][1] + length * np.cos(heading), lo_c, hi_c))
            pts.append((r, c))
        return pts

    def truncate(pts, frac):
        seg = np.hypot(*np.diff(np.asarray(pts), axis=0).T)
        budget = frac * seg.sum()
        out = [pts[0]]
        for (a, b), s in zip(zip(pts[:-1], pts[1:]), seg):
            if budget >= s:
                out.append(b)
                budget -= s
            else:
                t = budget / s if s > 0 else 0.0
                out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
                break
        return tuple(out)

    shapes: list = []
    current = 0.0
    for _ in range(max_strokes):
        line = random_line()
        trial = coverage(shapes + [tuple(line)])
        if trial <= target_fraction + tolerance:
            shapes.append(tuple(line))
            current = trial
            if current >= target_fraction - tolerance:
                break
            continue
        lo, hi = 0.0, 1.0
        best = None
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            cov = coverage(shapes + [truncate(line, mid)])
            if abs(cov - target_fraction) <= tolerance:
                best = truncate(line, mid)
                break
            if cov < target_fraction:
                lo = mid
            else:
                hi = mid
        if best is not None:
            shapes.append(best)
            current = coverage(shapes)
            break
    if abs(current - target_fraction) > tolerance:
        raise ValueError(f"could not reach coverage {target_fraction} (got {current:.3f}); "
                         f"groove_width may be too large for a {height}x{width} map")
    return tuple(shapes)


@dataclass(frozen=True)
class BenchmarkSpec:
    """A set of engraved synthetic maps sharing one surface model."""

    n_maps: int = 4
    size: int = 512
    target_fraction: float = 0.166
    template: SyntheticSpec = field(default_factory=SyntheticSpec)
    seed: int = 0


def benchmark_maps(spec: BenchmarkSpec = BenchmarkSpec()) -> list[Tuple[str, DepthMap, LabelMask]]:
    """``[(map_id, depth, mask), ...]`` with per-map seeds derived from ``spec.seed``."""
    out = []
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.n_maps)
    for i, ss in enumerate(seeds):
        stroke_seed, surface_seed = ss.generate_state(2)
        rng = np.random.default_rng(int(stroke_seed))
        shapes = random_strokes(spec.size, spec.size, spec.template.groove_width,
                                spec.target_fraction, rng)
        map_spec = SyntheticSpec(
            width=spec.size, height=spec.size,
            base_roughness=spec.template.base_roughness,
            base_amplitude=spec.template.base_amplitude,
            groove_depth=spec.template.groove_depth,
            groove_width=spec.template.groove_width,
            engraved_shapes=shapes,
            noise_amplitude=spec.template.noise_amplitude,
            peck_amplitude=spec.template.peck_amplitude,
            seed=int(surface_seed),
        )
        depth, mask = generate(map_spec)
        out.append((f"map{i:02d}", depth, mask))
    return out


def imbalanced_blobs(n: int, minority_fraction: float = 0.166, n_features: int = 2,
                     separation: float = 1.5, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Two overlapping unit Gaussians; class 1 is the minority, shifted by ``separation`` on every axis."""
    rng = np.random.default_rng(seed)
    n1 = int(round(minority_fraction * n))
    X = rng.standard_normal((n, n_features))
    y = np.zeros(n, dtype=np.int64)
    y[:n1] = 1
    X[:n1] += separation
    perm = rng.permutation(n)
    return X[perm], y[perm]
