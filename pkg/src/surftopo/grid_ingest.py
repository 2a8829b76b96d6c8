"""Depth-map and label-mask ingestion, patch extraction and value normalization."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image

PathLike = Union[str, Path]


def _frozen(array: np.ndarray, dtype=None) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DepthMap:
    """A 2D height field. ``values`` is read-only once constructed."""

    values: np.ndarray
    pitch_mm: Optional[float] = None

    def __post_init__(self):
        values = _frozen(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"depth map must be a non-empty 2D array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("depth map contains NaN or Inf values")
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabelMask:
    """Binary ground truth: 1 marks engraved surface (class 1), 0 natural rock (class 2)."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValueError(f"label mask must be 2D, got shape {labels.shape}")
        object.__setattr__(self, "labels", _frozen(labels != 0, dtype=np.uint8))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class Patch:
    origin: Tuple[int, int]
    values: np.ndarray
    label: Optional[int] = None
    source_id: str = ""
    degenerate: bool = False

    @property
    def size(self) -> int:
        return self.values.shape[0]


def _infer_format(path: Path) -> str:
    if path.suffix.lower() == ".png":
        return "png16"
    return "text-matrix"


def load_depth_map(path: PathLike, format: Optional[str] = None,
                   pitch_mm: Optional[float] = None) -> DepthMap:
    """Read a depth map from a 16-bit grayscale PNG or a whitespace text matrix.

    PNG values are scaled to the unit interval (raw / 65535); text values
    are taken verbatim. ``format`` defaults to ``png16`` for ``.png`` files.
    """
    path = Path(path)
    fmt = format or _infer_format(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such depth map: {path}")
    if fmt == "png16":
        with Image.open(path) as img:
            if img.mode not in ("I;16", "I;16B", "I;16L", "I", "L"):
                raise ValueError(f"{path}: expected a grayscale PNG, got mode {img.mode}")
            raw = np.array(img)
        if raw.ndim != 2:
            raise ValueError(f"{path}: expected a single-channel PNG")
        return DepthMap(raw.astype(np.float64) / 65535.0, pitch_mm)
    if fmt == "text-matrix":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rows.append([float(tok) for tok in line.split()])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
        if not rows:
            raise ValueError(f"{path}: empty text matrix")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ValueError(f"{path}: ragged rows (widths {sorted(widths)})")
        return DepthMap(np.array(rows), pitch_mm)
    raise ValueError(f"unknown depth map format {fmt!r}")


def save_depth_map(depth: DepthMap, path: PathLike, format: Optional[str] = None) -> None:
    """Write ``depth`` in the same formats ``load_depth_map`` reads.

    png16 requires values in [0, 1]; they are quantized to 16 bits.
    """
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt == "png16":
        v = depth.values
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("png16 output requires values in [0, 1]")
        Image.fromarray(np.round(v * 65535.0).astype(np.uint16)).save(path)
    elif fmt == "text-matrix":
        np.savetxt(path, depth.values, fmt="%.17g")
    else:
        raise ValueError(f"unknown depth map format {fmt!r}")


def load_label_mask(path: PathLike) -> LabelMask:
    """Read an 8-bit grayscale PNG mask; any nonzero pixel is class 1."""
    path = Path(path)
    with Image.open(path) as img:
        if img.mode not in ("L", "1", "P", "I;16", "I"):
            raise ValueError(f"{path}: expected a grayscale mask, got mode {img.mode}")
        raw = np.array(img)
    if raw.ndim != 2:
        raise ValueError(f"{path}: expected a single-channel mask")
    return LabelMask(raw)


def save_label_mask(mask: LabelMask, path: PathLike) -> None:
    Image.fromarray((mask.labels * 255).astype(np.uint8)).save(Path(path))


def patch_count(height: int, width: int, size: int, step: int) -> int:
    if size > min(height, width):
        return 0
    return ((height - size) // step + 1) * ((width - size) // step + 1)


def extract_patches(depth: DepthMap, mask: Optional[LabelMask] = None, size: int = 128,
                    step: int = 16, label_threshold: float = 0.5,
                    source_id: str = "") -> list[Patch]:
    """Cut ``depth`` into square windows at origins ``(i*step, j*step)``.

    Windows that would cross the map border are skipped. With a mask, a
    patch is labeled 1 when the fraction of class-1 pixels inside it is at
    least ``label_threshold``.
    """
    if size < 1 or step < 1:
        raise ValueError("patch size and step must be >= 1")
    if size > min(depth.height, depth.width):
        raise ValueError(f"patch size {size} exceeds map of shape {depth.values.shape}")
    if not 0.0 < label_threshold <= 1.0:
        raise ValueError("label_threshold must lie in (0, 1]")
    if mask is not None and mask.labels.shape != depth.values.shape:
        raise ValueError(f"mask shape {mask.labels.shape} != depth shape {depth.values.shape}")

    if mask is not None:
        # summed-area table gives each window's class-1 count in O(1)
        sat = np.zeros((depth.height + 1, depth.width + 1), dtype=np.int64)
        sat[1:, 1:] = np.cumsum(np.cumsum(mask.labels, axis=0), axis=1)
        area = float(size * size)

    patches = []
    for r in range(0, depth.height - size + 1, step):
        for c in range(0, depth.width - size + 1, step):
            label = None
            if mask is not None:
                ones = sat[r + size, c + size] - sat[r, c + size] - sat[r + size, c] + sat[r, c]
                label = int(ones / area >= label_threshold)
            values = _frozen(depth.values[r:r + size, c:c + size])
            patches.append(Patch((r, c), values, label, source_id))
    return patches


def global_bounds(maps: Sequence[DepthMap]) -> Tuple[float, float]:
    """Min and max over a collection of maps (used for ``global`` normalization)."""
    if not maps:
        raise ValueError("need at least one map")
    return (min(float(m.values.min()) for m in maps),
            max(float(m.values.max()) for m in maps))


def normalize_patch(patch: Patch, mode: str = "none",
                    bounds: Optional[Tuple[float, float]] = None) -> Patch:
    """Rescale patch values.

    ``minmax`` maps the patch affinely onto [0, 1]; a constant patch becomes
    all zeros with ``degenerate=True``. ``global`` applies the fixed dataset
    ``bounds`` (values outside are not clipped). ``none`` returns the patch.
    """
    if mode == "none":
        return patch
    if mode == "minmax":
        lo, hi = float(patch.values.min()), float(patch.values.max())
        if hi == lo:
            return replace(patch, values=_frozen(np.zeros_like(patch.values)), degenerate=True)
        return replace(patch, values=_frozen((patch.values - lo) / (hi - lo)))
    if mode == "global":
        if bounds is None:
            raise ValueError("global normalization needs (min, max) bounds")
        lo, hi = bounds
        if not hi > lo:
            raise ValueError(f"invalid global bounds {bounds}")
        return replace(patch, values=_frozen((patch.values - lo) / (hi - lo)))
    raise ValueError(f"unknown normalization mode {mode!r}")
