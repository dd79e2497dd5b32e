"""PNG figures for a class report, rendered headless and byte-stable."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .cluster import IsoClassReport  # noqa: E402

# no timestamps or version strings, so reruns write identical bytes
PNG_META = {"Software": None}


def class_frequency(reports: Sequence[IsoClassReport], path: Path, top: int = 20) -> Path:
    shown = list(reports[:top])
    fig, ax = plt.subplots(figsize=(8, 4))
    x = np.arange(len(shown))
    ax.bar(x, [r.count for r in shown], color="#4c72b0")
    ax.set_xticks(x)
    ax.set_xticklabels([f"#{i + 1}\nh{r.height}/n{r.cardinality}" for i, r in enumerate(shown)], fontsize=7)
    ax.set_ylabel("components")
    ax.set_yscale("log" if shown and max(r.count for r in shown) > 100 else "linear")
    ax.set_title(f"Most frequent isomorphism classes ({len(reports)} total)")
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=PNG_META)
    plt.close(fig)
    return path


def shape_scatter(reports: Sequence[IsoClassReport], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    if reports:
        card = np.array([r.cardinality for r in reports], dtype=float)
        h = np.array([r.height for r in reports], dtype=float)
        size = 10 + 40 * np.log10(np.array([r.count for r in reports], dtype=float) + 1)
        ax.scatter(card, h, s=size, alpha=0.6, color="#dd8452")
        if card.max() > 100:
            ax.set_xscale("log")
    ax.set_xlabel("cardinality")
    ax.set_ylabel("height")
    ax.set_title("Class shapes (marker area ~ log count)")
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=PNG_META)
    plt.close(fig)
    return path


def render_all(reports: Sequence[IsoClassReport], out_dir: Path) -> list[Path]:
    return [
        class_frequency(reports, out_dir / "class_frequency.png"),
        shape_scatter(reports, out_dir / "class_shapes.png"),
    ]
