"""Static figures: persistence diagrams, persistence images, per-pixel score maps, CLBP code maps."""

from __future__ import annotations

from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .descriptors import PersistenceImage  # noqa: E402
from .persistence import PersistenceDiagram  # noqa: E402

# no software/version stamp, so identical inputs give identical bytes
_PNG_META = {"Software": None}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)


def render_diagram(diagram: PersistenceDiagram, path, title: Optional[str] = None) -> None:
    """Birth/death scatter with the diagonal; essential points sit on a dashed line at the top.

    An empty diagram yields empty axes.
    """
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    lo, hi = diagram.value_range
    if not np.isfinite(lo) or not np.isfinite(hi) or lo == hi:
        lo, hi = 0.0, 1.0
    pad = 0.05 * (hi - lo)
    top = hi + 2 * pad
    for dim, marker, color in ((0, "o", "tab:blue"), (1, "^", "tab:orange")):
        sel = diagram.select([dim])
        if len(sel) == 0:
            continue
        deaths = np.where(np.isfinite(sel.deaths), sel.deaths, top)
        ax.scatter(sel.births, deaths, s=14, marker=marker, color=color, label=f"H{dim}")
    ax.plot([lo - pad, top], [lo - pad, top], color="0.5", lw=0.8)
    if len(diagram) and not diagram.is_finite():
        ax.axhline(top, color="0.5", lw=0.8, ls="--")
    ax.set_xlim(lo - pad, top + pad)
    ax.set_ylim(lo - pad, top + pad)
    ax.set_xlabel("birth")
    ax.set_ylabel("death")
    if len(diagram):
        ax.legend(loc="lower right", frameon=False)
    if title:
        ax.set_title(title)
    _save(fig, path)


def render_grid(values: np.ndarray, path, title: Optional[str] = None, extent=None,
                xlabel: str = "birth", ylabel: str = "death", cmap: str = "viridis") -> None:
    """Heatmap of a 2D grid with row 0 drawn at the bottom."""
    values = np.asarray(values, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(values, origin="lower", cmap=cmap, extent=extent, aspect="auto", interpolation="nearest")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    _save(fig, path)


def render_image(image: PersistenceImage, path, title: Optional[str] = None) -> None:
    cfg = image.config
    ylabel = "death" if cfg.axes == "birth_death" else "persistence"
    render_grid(image.pixels, path, title, extent=(*cfg.birth_range, *cfg.death_range), ylabel=ylabel)


def render_code_map(codes: np.ndarray, path, n_codes: int, title: Optional[str] = None) -> None:
    """CLBP code map with one discrete color per code, drawn in image orientation."""
    fig, ax = plt.subplots(figsize=(5, 4.5))
    cmap = plt.get_cmap("viridis", n_codes)
    im = ax.imshow(codes, cmap=cmap, vmin=-0.5, vmax=n_codes - 0.5, interpolation="nearest")
    fig.colorbar(im, ax=ax, ticks=range(0, n_codes, max(1, n_codes // 10)))
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    _save(fig, path)
