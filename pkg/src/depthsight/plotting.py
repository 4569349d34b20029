"""Report figures.

Rendering goes through the Agg backend with a fixed style and no
timestamp metadata, so identical results produce identical PNG bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "svg.hashsalt": "depthsight",
}

METHOD_COLORS = {"min": "#1b6ca8", "meanq1": "#d1495b", "medianq1": "#edae49"}


def save(fig, path, description: str = "") -> None:
    metadata = {"Software": None}
    if description:
        metadata["Description"] = description
    fig.savefig(path, format="png", metadata=metadata)
    plt.close(fig)


def precision_recall_figure(results, aggregates=None):
    """Grouped bars of per-sequence precision and recall (percent)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        names = [r.name for r in results]
        x = np.arange(len(names))
        prec = [np.nan if r.precision is None else r.precision for r in results]
        rec = [np.nan if r.recall is None else r.recall for r in results]
        ax.bar(x - 0.2, prec, width=0.4, label="precision", color="#1b6ca8")
        ax.bar(x + 0.2, rec, width=0.4, label="recall", color="#edae49")
        if aggregates:
            for (mode, (p, r)), ls in zip(sorted(aggregates.items()), ("--", ":")):
                if p is not None:
                    ax.axhline(p, color="#1b6ca8", ls=ls, lw=1, label=f"precision ({mode})")
                if r is not None:
                    ax.axhline(r, color="#edae49", ls=ls, lw=1, label=f"recall ({mode})")
        ax.set_xticks(x, names, rotation=30 if len(names) > 6 else 0)
        ax.set_ylim(0, 105)
        ax.set_xlabel("sequence")
        ax.set_ylabel("%")
        ax.legend(loc="lower right", fontsize=8)
        fig.tight_layout()
    return fig


def depth_error_figure(results):
    """RMSE versus hover distance, one line per method, min-max band shaded."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        methods = []
        for r in results:
            if r.method not in methods:
                methods.append(r.method)
        for m in methods:
            rows = sorted((r for r in results if r.method is m), key=lambda r: r.hover_distance)
            d = np.array([r.hover_distance for r in rows])
            color = METHOD_COLORS.get(m.value)
            ax.plot(d, [r.rmse for r in rows], marker="o", color=color, label=m.label)
            ax.fill_between(d, [r.min_error for r in rows], [r.max_error for r in rows],
                            color=color, alpha=0.12, lw=0)
        ax.set_xlabel("hover distance (mm)")
        ax.set_ylabel("depth RMS error (mm)")
        ax.set_ylim(bottom=0)
        ax.legend()
        fig.tight_layout()
    return fig
