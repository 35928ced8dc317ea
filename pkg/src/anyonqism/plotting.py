"""Figures for spectra and statistics-angle level flows (matplotlib, file output only)."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .io import atomic_write  # noqa: E402


def _save(fig, path) -> Path:
    import io

    buf = io.BytesIO()
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(buf, format="png", dpi=120, metadata={"Software": None})
    plt.close(fig)
    return atomic_write(path, buf.getvalue())


def plot_level_flow(rows, path, title: str = "") -> Path:
    """``rows`` are ``(theta, sector_label, level, energy)``; one panel per sector."""
    by_sector = defaultdict(lambda: defaultdict(list))
    for theta, sector, level, energy in rows:
        by_sector[sector][level].append((theta, energy))
    sectors = sorted(by_sector)
    ncols = min(3, len(sectors)) or 1
    nrows = -(-len(sectors) // ncols) or 1
    fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 3 * nrows), squeeze=False)
    for ax, sector in zip(axes.flat, sectors):
        for level, pts in sorted(by_sector[sector].items()):
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], lw=1)
        ax.set_title(f"sector {sector}", fontsize=9)
        ax.set_xlabel("theta")
        ax.set_ylabel("energy")
    for ax in list(axes.flat)[len(sectors):]:
        ax.set_visible(False)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    return _save(fig, path)


def plot_spectrum(records, path, title: str = "") -> Path:
    """Real parts of eigenvalues per sector, as horizontal ticks."""
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(records) + 2), 4))
    labels = []
    for k, rec in enumerate(records):
        vals = [v[0] for v in rec["eigenvalues"]]
        ax.scatter([k] * len(vals), vals, marker="_", s=300)
        labels.append(",".join(str(x) for x in (rec["sector"] or ["all"])))
    ax.set_xticks(range(len(records)), labels, rotation=45, fontsize=8)
    ax.set_xlabel("sector")
    ax.set_ylabel("Re eigenvalue")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    return _save(fig, path)
