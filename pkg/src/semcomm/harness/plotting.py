"""Stand-alone plot scripts written next to experiment CSVs.

The scripts import matplotlib themselves; nothing here depends on it.
"""

from __future__ import annotations

from pathlib import Path

SWEEP_SCRIPT = '''"""Plot BLEU vs test SNR from bleu_vs_snr.csv (requires matplotlib)."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "bleu_vs_snr.csv"
series = defaultdict(list)
with open(path) as fh:
    for row in csv.DictReader(fh):
        series[row["variant"]].append((float(row["snr_db"]), float(row["mean"]), float(row["stddev"])))
for name, pts in sorted(series.items()):
    pts.sort()
    x, m, s = zip(*pts)
    plt.errorbar(x, m, yerr=s, label=name, capsize=3)
plt.xlabel("test SNR (dB)")
plt.ylabel("BLEU (1-gram)")
plt.legend()
plt.savefig(path.replace(".csv", ".png"), dpi=150)
'''

CONTINUAL_SCRIPT = '''"""Heatmaps of continual_map.csv, one panel per variant (requires matplotlib)."""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "continual_map.csv"
cells = defaultdict(dict)
order = []
with open(path) as fh:
    for row in csv.DictReader(fh):
        if row["stage"] not in order:
            order.append(row["stage"])
        cells[row["variant"]][(row["stage"], row["dataset"])] = (
            float("nan") if row["value"] == "NA" else float(row["value"])
        )
fig, axes = plt.subplots(1, len(cells), figsize=(4 * len(cells), 4), squeeze=False)
for ax, (name, vals) in zip(axes[0], sorted(cells.items())):
    grid = [[vals.get((r, c), float("nan")) for c in order] for r in order]
    im = ax.imshow(grid, vmin=0, vmax=1, cmap="viridis")
    ax.set_title(name)
    ax.set_xticks(range(len(order)), order, rotation=45)
    ax.set_yticks(range(len(order)), order)
    ax.set_xlabel("evaluated on")
    ax.set_ylabel("trained through")
fig.colorbar(im, ax=axes[0].tolist())
fig.savefig(path.replace(".csv", ".png"), dpi=150, bbox_inches="tight")
'''


def write_plot_script(out_dir: str | Path, kind: str) -> Path:
    text = {"sweep": SWEEP_SCRIPT, "continual": CONTINUAL_SCRIPT}[kind]
    path = Path(out_dir) / f"plot_{kind}.py"
    path.write_text(text)
    return path
