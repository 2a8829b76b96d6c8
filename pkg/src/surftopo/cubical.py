"""Filtered 2D cubical complexes built from image patches.

Cells live on the doubled ("Khalimsky") grid of shape ``(2H+1, 2W+1)``: a
cell's dimension is the number of odd coordinates, pixel ``(i, j)`` is the
2-cell at ``(2i+1, 2j+1)``, and the dense cell id is the row-major index on
that grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Tuple, Union

import numpy as np

from .grid_ingest import Patch


class Cell(NamedTuple):
    id: int
    dim: int
    coords: Tuple[int, int]
    value: float


@dataclass(frozen=True)
class CubicalFiltration:
    """Cell values on the doubled grid plus the total order ``(value, dim, id)``."""

    shape: Tuple[int, int]
    values: np.ndarray
    direction: str = "sublevel"
    dims: np.ndarray = field(init=False, repr=False)
    order: np.ndarray = field(init=False, repr=False)
    thresholds: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h, w = self.shape
        gh, gw = 2 * h + 1, 2 * w + 1
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.size != gh * gw:
            raise ValueError(f"expected {gh * gw} cell values for a {h}x{w} grid, got {values.size}")
        values.setflags(write=False)
        ys, xs = np.divmod(np.arange(gh * gw), gw)
        dims = ((ys & 1) + (xs & 1)).astype(np.int8)
        dims.setflags(write=False)
        order = np.lexsort((np.arange(values.size), dims, values))
        order.setflags(write=False)
        thresholds = np.unique(values)
        thresholds.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "thresholds", thresholds)

    @classmethod
    def from_cell_grid(cls, grid: np.ndarray, direction: str = "sublevel") -> "CubicalFiltration":
        """Wrap an explicit ``(2H+1, 2W+1)`` array of cell values (no monotonicity check)."""
        grid = np.asarray(grid, dtype=np.float64)
        gh, gw = grid.shape
        if gh % 2 == 0 or gw % 2 == 0 or gh < 3 or gw < 3:
            raise ValueError(f"cell grid must have odd sides >= 3, got {grid.shape}")
        return cls(((gh - 1) // 2, (gw - 1) // 2), grid, direction)

    @property
    def grid_shape(self) -> Tuple[int, int]:
        return 2 * self.shape[0] + 1, 2 * self.shape[1] + 1

    @property
    def n_cells(self) -> int:
        return self.values.size

    def value_grid(self) -> np.ndarray:
        return self.values.reshape(self.grid_shape)

    def coords(self, cell_id: int) -> Tuple[int, int]:
        y, x = divmod(int(cell_id), self.grid_shape[1])
        return y, x

    def faces(self, cell_id: int) -> list[int]:
        """Ids of the codimension-1 faces of ``cell_id`` (empty for vertices)."""
        gw = self.grid_shape[1]
        y, x = divmod(int(cell_id), gw)
        out = []
        if y & 1:
            out += [(y - 1) * gw + x, (y + 1) * gw + x]
        if x & 1:
            out += [y * gw + x - 1, y * gw + x + 1]
        return out

    def boundary_table(self) -> np.ndarray:
        """``(n_cells, 4)`` array of face ids, padded with -1."""
        gh, gw = self.grid_shape
        ids = np.arange(gh * gw)
        ys, xs = np.divmod(ids, gw)
        table = np.full((ids.size, 4), -1, dtype=np.int64)
        yodd, xodd = (ys & 1) == 1, (xs & 1) == 1
        table[yodd, 0] = ids[yodd] - gw
        table[yodd, 1] = ids[yodd] + gw
        # squares have both pairs; edges only one, stored in the first two slots
        sq = yodd & xodd
        table[sq, 2] = ids[sq] - 1
        table[sq, 3] = ids[sq] + 1
        hx = xodd & ~yodd
        table[hx, 0] = ids[hx] - 1
        table[hx, 1] = ids[hx] + 1
        return table

    def is_monotone(self) -> bool:
        """True when every face's value is <= its coface's value."""
        table = self.boundary_table()
        has = table >= 0
        face_vals = np.where(has, self.values[np.where(has, table, 0)], -np.inf)
        return bool(np.all(face_vals <= self.values[:, None]))

    def cells(self) -> Iterator[Cell]:
        """Cells in filtration order."""
        gw = self.grid_shape[1]
        for cid in self.order:
            y, x = divmod(int(cid), gw)
            yield Cell(int(cid), int(self.dims[cid]), (y, x), float(self.values[cid]))

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "dim", "row", "col", "value"])
            for cell in self.cells():
                writer.writerow([cell.id, cell.dim, cell.coords[0], cell.coords[1], repr(cell.value)])


def build_filtration(patch: Union[Patch, np.ndarray], direction: str = "sublevel") -> CubicalFiltration:
    """Top-cell (T-construction) filtration of a patch.

    Squares take the pixel value (negated for ``superlevel``); every edge and
    vertex takes the minimum over the squares containing it, so each
    sublevel set is a closed complex.
    """
    pixels = np.asarray(patch.values if isinstance(patch, Patch) else patch, dtype=np.float64)
    if pixels.ndim != 2 or pixels.size == 0:
        raise ValueError("patch must be a non-empty 2D array")
    if direction == "superlevel":
        pixels = -pixels
    elif direction != "sublevel":
        raise ValueError(f"unknown filtration direction {direction!r}")

    h, w = pixels.shape
    padded = np.full((h + 2, w + 2), np.inf)
    padded[1:-1, 1:-1] = pixels
    grid = np.empty((2 * h + 1, 2 * w + 1))
    grid[1::2, 1::2] = pixels
    # horizontal edges (even row, odd col) sit between pixel rows i-1 and i
    grid[0::2, 1::2] = np.minimum(padded[:-1, 1:-1], padded[1:, 1:-1])
    # vertical edges (odd row, even col) sit between pixel cols j-1 and j
    grid[1::2, 0::2] = np.minimum(padded[1:-1, :-1], padded[1:-1, 1:])
    grid[0::2, 0::2] = np.minimum(np.minimum(padded[:-1, :-1], padded[:-1, 1:]),
                                  np.minimum(padded[1:, :-1], padded[1:, 1:]))
    return CubicalFiltration((h, w), grid, direction)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = np.arange(n)

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def betti_numbers(filtration: CubicalFiltration, r: float) -> Tuple[int, int]:
    """``(beta0, beta1)`` of the subcomplex of cells with value <= r.

    beta0 comes from union-find over vertices and edges; beta1 from the
    Euler characteristic (there is no 2-dimensional homology in the plane).
    """
    values, dims = filtration.values, filtration.dims
    present = values <= r
    n_vertices = int(np.count_nonzero(present & (dims == 0)))
    n_edges = int(np.count_nonzero(present & (dims == 1)))
    n_squares = int(np.count_nonzero(present & (dims == 2)))
    if n_vertices == 0:
        return 0, 0

    uf = _UnionFind(filtration.n_cells)
    for eid in np.flatnonzero(present & (dims == 1)):
        a, b = filtration.faces(eid)
        uf.union(a, b)
    vertex_ids = np.flatnonzero(present & (dims == 0))
    beta0 = len({uf.find(v) for v in vertex_ids})
    euler = n_vertices - n_edges + n_squares
    return beta0, beta0 - euler
