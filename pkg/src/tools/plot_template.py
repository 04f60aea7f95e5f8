"""
Plot-script templates written next to each run's data files
"""

from typing import Dict, List

# (x column, y columns, log-log) per CSV name
PLOT_LAYOUTS: Dict[str, tuple] = {
    "sweep.csv": ("lambda", ["offdiag_norm", "diag_residual"], True),
    "fock_limit.csv": ("n", ["abs_err"], True),
    "transform_limit.csv": ("lambda", ["deviation"], True),
    "diagram.csv": ("lambda_small", ["deviation"], True),
    "evolve.csv": ("t", ["sigma_z", "sigma_x", "sigma_y"], False),
    "compare.csv": ("t", ["sigma_z_quantum", "sigma_z_semiclassical"], False),
    "compare_gap.csv": ("lambda", ["max_inversion_gap"], True),
    "checks.csv": ("index", ["max_residual", "tolerance"], False),
}


def render_plot_script(command: str, csv_files: List[str]) -> str:
    """
    Stand-alone matplotlib script for the CSV files of one run

    The script is text only; nothing is imported or plotted here.
    """
    panels = []
    for name in csv_files:
        x, ys, loglog = PLOT_LAYOUTS.get(name, (None, [], False))
        if x is None:
            continue
        panels.append(f"    ({name!r}, {x!r}, {ys!r}, {loglog!r}),")
    body = "\n".join(panels) if panels else "    # no plottable files"

    return f'''"""Plots for a `{command}` run. Usage: python plot_{command.replace("-", "_")}.py"""

import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent

PANELS = [
{body}
]


def read_columns(path):
    with open(path, newline="", encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    rows = list(csv.DictReader(lines))
    return {{key: [float(row[key]) for row in rows if row[key] != ""] for key in rows[0]}}


def main():
    fig, axes = plt.subplots(len(PANELS), 1, figsize=(7, 3.5 * max(1, len(PANELS))), squeeze=False)
    for ax, (name, x, ys, loglog) in zip(axes[:, 0], PANELS):
        data = read_columns(HERE / name)
        for y in ys:
            if y in data:
                ax.plot(data[x], data[y], marker="o" if loglog else None, label=y)
        if loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(x)
        ax.set_title(name)
        ax.legend()
    fig.tight_layout()
    fig.savefig(HERE / "plot_{command.replace("-", "_")}.png", dpi=150)


if __name__ == "__main__":
    main()
'''
