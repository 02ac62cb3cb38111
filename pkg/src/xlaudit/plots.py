"""PNG figures for reports, drawn with matplotlib's object API (no pyplot state)."""

from __future__ import annotations

import io
import math
from typing import Mapping, Sequence

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.colors import ListedColormap
from matplotlib.figure import Figure
from matplotlib.patches import Patch

from .distinct import GridMap
from .graph import DepGraph


def _png(fig: Figure) -> bytes:
    FigureCanvasAgg(fig)
    buf = io.BytesIO()
    # no Software/timestamp metadata so repeated runs are byte-identical
    fig.savefig(buf, format="png", dpi=100, metadata={"Software": None})
    return buf.getvalue()


def bar_chart(title: str, counts: Mapping[str, int], xlabel: str = "Count") -> bytes:
    items = [(k, v) for k, v in counts.items() if v]
    height = max(2.0, 0.3 * len(items) + 1.2)
    fig = Figure(figsize=(7, height))
    ax = fig.add_subplot()
    if items:
        labels, values = zip(*items)
        pos = range(len(items))
        ax.barh(list(pos), values, color="#5b8cc9")
        ax.set_yticks(list(pos))
        ax.set_yticklabels(labels, fontsize=8)
        ax.invert_yaxis()
        for p, v in zip(pos, values):
            ax.text(v, p, f" {v}", va="center", fontsize=7)
    else:
        ax.text(0.5, 0.5, "nothing to show", ha="center", va="center", transform=ax.transAxes)
        ax.set_yticks([])
    ax.set_xlabel(xlabel)
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    return _png(fig)


def gridmap_png(gm: GridMap) -> bytes:
    rows = len(gm.matrix)
    cols = len(gm.matrix[0]) if rows else 0
    fig = Figure(figsize=(min(12, 2 + 0.25 * cols), min(16, 1.5 + 0.2 * rows)))
    ax = fig.add_subplot()
    if rows and cols:
        n = len(gm.legend)
        data = [[n if v is None else v for v in row] for row in gm.matrix]
        cmap = ListedColormap([e.color for e in gm.legend] + ["#ffffff"])
        ax.imshow(data, cmap=cmap, vmin=-0.5, vmax=n + 0.5, interpolation="nearest", aspect="auto")
        ax.set_xticks(range(cols))
        from .refs import index_to_col
        ax.set_xticklabels([index_to_col(gm.left + j) for j in range(cols)], fontsize=6)
        ax.set_yticks(range(rows))
        ax.set_yticklabels([str(gm.top + i) for i in range(rows)], fontsize=6)
        handles = [Patch(color=e.color, label=f"{e.char}  {e.label[:40]}") for e in gm.legend[:20]]
        if handles:
            ax.legend(handles=handles, fontsize=6, loc="upper left", bbox_to_anchor=(1.01, 1))
    ax.set_title(f"{gm.sheet} ({gm.coloring.value})", fontsize=9)
    fig.tight_layout()
    return _png(fig)


_KIND_COLORS = {"cell": "#5b8cc9", "range": "#8cc95b", "sheet": "#c9a35b", "workbook": "#c95b8c",
                "external": "#c95b5b"}


def graph_png(g: DepGraph, limit: int = 200) -> bytes:
    """Circular layout of the first ``limit`` nodes with arrowed edges."""
    nodes: Sequence = g.nodes[:limit]
    n = len(nodes)
    pos = {node.id: (math.cos(2 * math.pi * i / max(n, 1)), math.sin(2 * math.pi * i / max(n, 1)))
           for i, node in enumerate(nodes)}
    fig = Figure(figsize=(7, 7))
    ax = fig.add_subplot()
    for e in g.edges:
        if e.source in pos and e.target in pos:
            (x1, y1), (x2, y2) = pos[e.source], pos[e.target]
            ax.annotate("", xy=(x2, y2), xytext=(x1, y1),
                        arrowprops={"arrowstyle": "->", "color": "#888", "lw": 0.7})
    for node in nodes:
        x, y = pos[node.id]
        color = _KIND_COLORS.get(node.kind, "#999")
        edge = "red" if node.exists is False else "black"
        ax.scatter([x], [y], s=120, color=color, edgecolors=edge, zorder=3)
        if n <= 60:
            ax.text(x * 1.08, y * 1.08, node.label, fontsize=7, ha="center", va="center")
    ax.set_xlim(-1.4, 1.4)
    ax.set_ylim(-1.4, 1.4)
    ax.set_aspect("equal")
    ax.axis("off")
    suffix = " (truncated)" if g.truncated else ""
    ax.set_title(f"{g.level.value} graph: {len(g.nodes)} nodes, {len(g.edges)} edges{suffix}", fontsize=9)
    fig.tight_layout()
    return _png(fig)
