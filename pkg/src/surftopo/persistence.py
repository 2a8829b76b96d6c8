"""Persistence diagrams of cubical filtrations over Z/2.

``compute_persistence`` reduces the boundary matrix with the twist/clearing
strategy (squares first, then edges, skipping columns already known to be
paired). ``oracle_persistence`` is a deliberately naive dense reduction kept
only to cross-check it on small complexes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .cubical import CubicalFiltration

ORACLE_MAX_CELLS = 2500


class DiagramPoint(NamedTuple):
    dim: int
    birth: float
    death: float


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of ``(dim, birth, death)`` points; essential points have death ``inf``."""

    dims: np.ndarray
    births: np.ndarray
    deaths: np.ndarray
    value_range: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        dims = np.asarray(self.dims, dtype=np.int8).reshape(-1)
        births = np.asarray(self.births, dtype=np.float64).reshape(-1)
        deaths = np.asarray(self.deaths, dtype=np.float64).reshape(-1)
        if not dims.size == births.size == deaths.size:
            raise ValueError("dims, births and deaths must have equal length")
        if np.any(deaths < births):
            raise ValueError("diagram point with death < birth")
        for name, arr in (("dims", dims), ("births", births), ("deaths", deaths)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "value_range", (float(self.value_range[0]), float(self.value_range[1])))

    @classmethod
    def from_points(cls, points: Sequence[Tuple[int, float, float]],
                    value_range: Tuple[float, float] = (0.0, 0.0)) -> "PersistenceDiagram":
        if len(points) == 0:
            return cls.empty(value_range)
        dims, births, deaths = zip(*points)
        return cls(np.array(dims), np.array(births), np.array(deaths), value_range)

    @classmethod
    def empty(cls, value_range: Tuple[float, float] = (0.0, 0.0)) -> "PersistenceDiagram":
        return cls(np.zeros(0, np.int8), np.zeros(0), np.zeros(0), value_range)

    def __len__(self) -> int:
        return self.dims.size

    @property
    def lengths(self) -> np.ndarray:
        return self.deaths - self.births

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.deaths)))

    def points(self) -> list[DiagramPoint]:
        return [DiagramPoint(int(d), float(b), float(e))
                for d, b, e in zip(self.dims, self.births, self.deaths)]

    def multiset(self) -> list[Tuple[int, float, float]]:
        """Points as a sorted list, suitable for exact multiset comparison."""
        return sorted((int(d), float(b), float(e)) for d, b, e in zip(self.dims, self.births, self.deaths))

    def select(self, dims: Optional[Sequence[int]] = None) -> "PersistenceDiagram":
        """Sub-diagram restricted to the given homology dimensions (all when None)."""
        if dims is None:
            return self
        keep = np.isin(self.dims, list(dims))
        return PersistenceDiagram(self.dims[keep], self.births[keep], self.deaths[keep], self.value_range)

    def without_zero_length(self) -> "PersistenceDiagram":
        keep = self.deaths > self.births
        return PersistenceDiagram(self.dims[keep], self.births[keep], self.deaths[keep], self.value_range)

    def shifted(self, offset: float) -> "PersistenceDiagram":
        lo, hi = self.value_range
        return PersistenceDiagram(self.dims, self.births + offset, self.deaths + offset,
                                  (lo + offset, hi + offset))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dim", "birth", "death"])
            for d, b, e in zip(self.dims, self.births, self.deaths):
                writer.writerow([int(d), repr(float(b)), "inf" if math.isinf(e) else repr(float(e))])

    @classmethod
    def from_csv(cls, path, value_range: Optional[Tuple[float, float]] = None) -> "PersistenceDiagram":
        points = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["dim", "birth", "death"]:
                raise ValueError(f"{path}: expected header dim,birth,death")
            for row in reader:
                points.append((int(row["dim"]), float(row["birth"]), float(row["death"])))
        if value_range is None:
            finite = [v for _, b, e in points for v in (b, e) if math.isfinite(v)]
            value_range = (min(finite), max(finite)) if finite else (0.0, 0.0)
        return cls.from_points(points, value_range)


@njit(cache=True, nogil=True)
def _add_columns(a, b):
    # Z/2 sum of two sorted index columns
    out = np.empty(a.size + b.size, np.int64)
    i = j = k = 0
    while i < a.size and j < b.size:
        if a[i] < b[j]:
            out[k] = a[i]
            i += 1
            k += 1
        elif a[i] > b[j]:
            out[k] = b[j]
            j += 1
            k += 1
        else:
            i += 1
            j += 1
    while i < a.size:
        out[k] = a[i]
        i += 1
        k += 1
    while j < b.size:
        out[k] = b[j]
        j += 1
        k += 1
    return out[:k].copy()


@njit(cache=True, nogil=True)
def _twist_reduce(faces, dims):
    n = faces.shape[0]
    column_of_low = np.full(n, -1, np.int64)
    cleared = np.zeros(n, np.bool_)
    negative = np.zeros(n, np.bool_)
    # reduced columns are appended to one flat pool: pool[start[j]:start[j] + size[j]]
    start = np.zeros(n, np.int64)
    size = np.zeros(n, np.int64)
    pool = np.empty(4 * n, np.int64)
    used = 0
    buf = np.empty(4, np.int64)
    for d in (2, 1):
        for j in range(n):
            if dims[j] != d or cleared[j]:
                continue
            cnt = 0
            for t in range(4):
                if faces[j, t] >= 0:
                    buf[cnt] = faces[j, t]
                    cnt += 1
            col = np.sort(buf[:cnt])
            while col.size > 0:
                k = column_of_low[col[col.size - 1]]
                if k < 0:
                    break
                col = _add_columns(col, pool[start[k]:start[k] + size[k]])
            if col.size > 0:
                if used + col.size > pool.size:
                    grown = np.empty(2 * pool.size + col.size, np.int64)
                    grown[:used] = pool[:used]
                    pool = grown
                pool[used:used + col.size] = col
                start[j] = used
                size[j] = col.size
                used += col.size
                low = col[col.size - 1]
                column_of_low[low] = j
                negative[j] = True
                cleared[low] = True
    return column_of_low, negative


def _positional_faces(filtration: CubicalFiltration) -> np.ndarray:
    order = filtration.order
    pos = np.empty(order.size, dtype=np.int64)
    pos[order] = np.arange(order.size)
    table = filtration.boundary_table()[order]
    return np.where(table >= 0, pos[np.where(table >= 0, table, 0)], -1)


def _diagram_from_pairs(filtration: CubicalFiltration, column_of_low: np.ndarray,
                        negative: np.ndarray) -> PersistenceDiagram:
    order = filtration.order
    sorted_values = filtration.values[order]
    sorted_dims = filtration.dims[order]
    births = np.flatnonzero(column_of_low >= 0)
    deaths = column_of_low[births]
    essential = np.flatnonzero(~negative & (column_of_low < 0))
    dims = np.concatenate([sorted_dims[births], sorted_dims[essential]])
    b = np.concatenate([sorted_values[births], sorted_values[essential]])
    e = np.concatenate([sorted_values[deaths], np.full(essential.size, np.inf)])
    vr = (float(filtration.values.min()), float(filtration.values.max()))
    return PersistenceDiagram(dims, b, e, vr)


def compute_persistence(filtration: CubicalFiltration) -> PersistenceDiagram:
    """Persistence pairs of ``filtration`` by twist/clearing column reduction.

    Zero-length pairs are kept. Raises ``ValueError`` when a face enters
    after one of its cofaces.
    """
    faces = _positional_faces(filtration)
    own = np.arange(faces.shape[0])[:, None]
    if np.any(faces >= own):
        raise ValueError("filtration is not monotone: a face enters after its coface")
    column_of_low, negative = _twist_reduce(faces, filtration.dims[filtration.order].astype(np.int64))
    return _diagram_from_pairs(filtration, column_of_low, negative)


def oracle_persistence(filtration: CubicalFiltration, max_cells: int = ORACLE_MAX_CELLS) -> PersistenceDiagram:
    """Reference diagram from a dense, unoptimized left-to-right reduction.

    Rebuilds the cell order and boundary matrix directly from the doubled-grid
    coordinates; shares nothing with ``compute_persistence`` beyond the input.
    """
    gh, gw = filtration.grid_shape
    n = gh * gw
    if n > max_cells:
        raise ValueError(f"complex has {n} cells, oracle bound is {max_cells}")
    grid = filtration.value_grid()

    cells = []
    for y in range(gh):
        for x in range(gw):
            cells.append((float(grid[y, x]), (y % 2) + (x % 2), y * gw + x, y, x))
    cells.sort()
    position = {c[2]: i for i, c in enumerate(cells)}

    matrix = np.zeros((n, n), dtype=bool)
    for j, (_, _, _, y, x) in enumerate(cells):
        faces = []
        if y % 2 == 1:
            faces += [(y - 1, x), (y + 1, x)]
        if x % 2 == 1:
            faces += [(y, x - 1), (y, x + 1)]
        for fy, fx in faces:
            i = position[fy * gw + fx]
            if i >= j:
                raise ValueError("filtration is not monotone: a face enters after its coface")
            matrix[i, j] = True

    low_owner = {}
    lows = np.full(n, -1)
    for j in range(n):
        while matrix[:, j].any():
            low = int(np.flatnonzero(matrix[:, j])[-1])
            if low not in low_owner:
                low_owner[low] = j
                lows[j] = low
                break
            matrix[:, j] ^= matrix[:, low_owner[low]]

    points = []
    for low, j in low_owner.items():
        points.append((cells[low][1], cells[low][0], cells[j][0]))
    for i in range(n):
        if lows[i] < 0 and i not in low_owner:
            points.append((cells[i][1], cells[i][0], math.inf))
    vr = (float(grid.min()), float(grid.max()))
    return PersistenceDiagram.from_points(points, vr)


def finitize(diagram: PersistenceDiagram, policy: str = "cap_at_max") -> PersistenceDiagram:
    """Remove infinite deaths: cap them at the complex's maximum value or drop the points."""
    inf = np.isinf(diagram.deaths)
    if not inf.any():
        return diagram
    if policy == "cap_at_max":
        deaths = np.where(inf, diagram.value_range[1], diagram.deaths)
        return PersistenceDiagram(diagram.dims, diagram.births, deaths, diagram.value_range)
    if policy == "drop_essential":
        keep = ~inf
        return PersistenceDiagram(diagram.dims[keep], diagram.births[keep], diagram.deaths[keep],
                                  diagram.value_range)
    raise ValueError(f"unknown finitize policy {policy!r}")
