"""SVG figures of a rounding: input positions hollow, output filled, moves as red arrows."""

from __future__ import annotations

from typing import Mapping, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .core import Drawing  # noqa: E402


def render_svg(drawing: Drawing, positions: Optional[Mapping], path, title: str = "") -> None:
    """Write an SVG of ``drawing`` and (if given) its rounded ``positions``.

    Output is byte-stable: fixed hash salt and no date metadata.
    """
    box = drawing.box
    with plt.rc_context({"svg.hashsalt": "gridsnap", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(1 + 0.6 * max(box.x_max, 1), 1 + 0.6 * max(box.y_max, 1)))
        for x in range(box.x_max + 1):
            ax.axvline(x, color="0.9", lw=0.5, zorder=0)
        for y in range(box.y_max + 1):
            ax.axhline(y, color="0.9", lw=0.5, zorder=0)
        src = {v: (float(x), float(y)) for v, (x, y) in drawing.positions.items()}
        ref_style = {"color": "0.6", "lw": 0.8, "ls": "--"} if positions else {"color": "black", "lw": 1.2}
        for u, v in drawing.edges:
            ax.plot([src[u][0], src[v][0]], [src[u][1], src[v][1]], zorder=1, **ref_style)
        if positions:
            dst = {v: (float(p[0]), float(p[1])) for v, p in positions.items()}
            for u, v in drawing.edges:
                ax.plot([dst[u][0], dst[v][0]], [dst[u][1], dst[v][1]], color="black", lw=1.2, zorder=2)
            for v in sorted(src):
                if src[v] != dst[v]:
                    ax.annotate("", xy=dst[v], xytext=src[v],
                                arrowprops={"arrowstyle": "->", "color": "red", "lw": 1.0}, zorder=3)
            xs, ys = zip(*(dst[v] for v in sorted(dst)))
            ax.scatter(xs, ys, s=28, c="black", zorder=4)
        xs, ys = zip(*(src[v] for v in sorted(src))) if src else ((), ())
        ax.scatter(xs, ys, s=28, facecolors="white", edgecolors="black", zorder=5)
        ax.set_xlim(-0.5, box.x_max + 0.5)
        ax.set_ylim(-0.5, box.y_max + 0.5)
        ax.set_aspect("equal")
        ax.set_xticks(range(box.x_max + 1))
        ax.set_yticks(range(box.y_max + 1))
        if title:
            ax.set_title(title)
        fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
        plt.close(fig)
