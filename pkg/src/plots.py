"""
SVG charts for reports: path-loss scatter with fitted lines and RMS
delay-spread CDFs.

Charts are drawn with matplotlib's object API (no pyplot state) and saved
as SVG with a fixed hash salt and no date stamp, which keeps the output
byte-identical across runs.
"""

import io
from typing import Sequence

import matplotlib
from matplotlib.figure import Figure

PALETTE = ["#00D4AA", "#FF6B35", "#4F7CFF", "#FFA502", "#FF4757", "#8E44AD"]
PANEL_SIZE = (5.0, 4.0)

SVG_PARAMS = {
    "svg.hashsalt": "chankit",
    "svg.fonttype": "none",
    "font.family": "sans-serif",
}


def _to_svg(fig: Figure) -> str:
    buffer = io.StringIO()
    with matplotlib.rc_context(SVG_PARAMS):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def cdf_chart(curves: dict[str, Sequence[tuple[float, float]]], title: str, x_label: str) -> str:
    """
    Step-function CDF curves, one line per label.

    Each curve is drawn in a group with id ``cdf-<k>`` (k = position in
    ``curves``).

    Args:
        curves: label -> (value, probability) pairs sorted by value
        title: Chart title
        x_label: Axis label of the values

    Returns:
        The SVG document
    """
    with matplotlib.rc_context(SVG_PARAMS):
        fig = Figure(figsize=PANEL_SIZE)
        ax = fig.subplots()
        for k, (label, pts) in enumerate(curves.items()):
            xs = [v for v, _ in pts]
            ys = [p for _, p in pts]
            if xs:
                xs, ys = [xs[0]] + xs, [0.0] + ys
            ax.step(xs, ys, where="post", color=PALETTE[k % len(PALETTE)], linewidth=2,
                    label=label, gid=f"cdf-{k}")
        ax.set_title(title)
        ax.set_xlabel(x_label)
        ax.set_ylabel("CDF")
        ax.set_ylim(0.0, 1.02)
        ax.grid(True, alpha=0.3)
        if curves:
            ax.legend(loc="lower right")
        fig.tight_layout()
    return _to_svg(fig)


def pathloss_chart(panels: dict[str, dict]) -> str:
    """
    Path-loss scatter plots with fitted curves, one panel per pool, log distance axis.

    Measured points of panel k are grouped under id ``measured-<k>``, fitted
    curves under ``fit-<k>-<j>``.

    Args:
        panels: pool label -> {"points": [(d, pl)], "lines": {name: [(d, pl)]}}

    Returns:
        The SVG document
    """
    count = max(1, len(panels))
    with matplotlib.rc_context(SVG_PARAMS):
        fig = Figure(figsize=(PANEL_SIZE[0] * count, PANEL_SIZE[1]))
        axes = fig.subplots(1, count, squeeze=False)[0]
        if not panels:
            axes[0].set_title("No path-loss samples")
            axes[0].set_axis_off()

        for k, (ax, (label, content)) in enumerate(zip(axes, panels.items())):
            points = content.get("points", [])
            if points:
                ax.plot([d for d, _ in points], [pl for _, pl in points], "o", color=PALETTE[0],
                        markersize=4, label="measured", gid=f"measured-{k}")
            for j, (name, line) in enumerate(content.get("lines", {}).items(), start=1):
                ax.plot([d for d, _ in line], [pl for _, pl in line], color=PALETTE[j % len(PALETTE)],
                        linewidth=2, label=name, gid=f"fit-{k}-{j}")
            ax.set_xscale("log")
            ax.set_title(f"{label} path loss")
            ax.set_xlabel("Distance (m)")
            ax.set_ylabel("Path loss (dB)")
            ax.grid(True, which="both", alpha=0.3)
            if ax.has_data():
                ax.legend(loc="upper left")
        fig.tight_layout()
    return _to_svg(fig)
