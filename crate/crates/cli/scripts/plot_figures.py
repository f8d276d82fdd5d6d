"""Plot the output of `effortdyn reproduce-figure` runs.

Usage: python plot_figures.py OUT_ROOT [--save DIR]

OUT_ROOT holds one directory per figure, named by its number (as produced by
`effortdyn reproduce-figure --preset figure-N --out OUT_ROOT/N`).
"""

import argparse
import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

REGION_ORDER = ["I", "II", "III", "IV", "V", "VI", "none"]


def read_table(path):
    if path.suffix == ".csv":
        with path.open() as fh:
            rows = list(csv.reader(fh))
        return rows[0], rows[1:]
    lines = path.read_text().splitlines()
    header = lines[0].lstrip("#").split()
    return header, [line.split() for line in lines[1:] if line and not line.startswith("#")]


def trajectories(folder):
    out = {}
    for path in sorted(folder.glob("trajectory_*.*")):
        _, rows = read_table(path)
        out[path.stem.removeprefix("trajectory_")] = np.array(rows, dtype=float)
    return out


def plot_phase(ax, folder, title):
    for label, data in trajectories(folder).items():
        ax.plot(data[:, 1], data[:, 2], data[:, 3], label=label, lw=0.8)
        ax.scatter(*data[0, 1:4], marker="o", s=10)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("E")
    ax.set_title(title)
    ax.legend(fontsize="small")


def plot_time(ax, folder, title):
    for label, data in trajectories(folder).items():
        for col, name in zip((1, 2, 3), ("x", "y", "E")):
            ax.plot(data[:, 0], data[:, col], lw=0.8, label=f"{label} {name}")
    ax.set_xlabel("t")
    ax.set_title(title)
    ax.legend(fontsize="small")


def plot_regions(ax, folder, title):
    _, rows = read_table(next(folder.glob("regions.*")))
    c = np.array([float(r[0]) for r in rows])
    d = np.array([float(r[1]) for r in rows])
    codes = np.array([REGION_ORDER.index(r[2]) for r in rows])
    sc = ax.scatter(c, d, c=codes, cmap="tab10", vmin=0, vmax=9, s=6, marker="s")
    _, lines = read_table(next(folder.glob("boundary_lines.*")))
    cs = np.linspace(c.min(), c.max(), 200)
    for name, kind, slope, intercept, _ in lines:
        if kind == "affine":
            ax.plot(cs, float(slope) * cs + float(intercept), lw=0.8, label=name)
        elif kind == "horizontal":
            ax.axhline(float(intercept), lw=0.8, ls="--", label=name)
        elif kind == "vertical":
            ax.axvline(float(intercept), lw=0.8, ls=":", label=name)
    ax.set_xlim(c.min(), c.max())
    ax.set_ylim(d.min(), d.max())
    ax.set_xlabel("c")
    ax.set_ylabel("d")
    ax.set_title(title)
    handles, _ = sc.legend_elements()
    present = sorted(set(codes))
    ax.legend(
        [handles[i] for i in range(len(present))],
        [REGION_ORDER[i] for i in present],
        fontsize="small",
        loc="upper right",
    )


def plot_basins(ax, folder, title):
    _, rows = read_table(folder / "basins.csv")
    kinds = sorted({r[4] for r in rows})
    for kind in kinds:
        pts = np.array([[float(v) for v in r[1:4]] for r in rows if r[4] == kind])
        ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], label=kind, s=12)
    ax.set_xlabel("x0")
    ax.set_ylabel("y0")
    ax.set_zlabel("E0")
    ax.set_title(title)
    ax.legend(fontsize="small")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_root", type=Path)
    parser.add_argument("--save", type=Path, default=Path("figures"))
    args = parser.parse_args()
    args.save.mkdir(parents=True, exist_ok=True)

    for number in range(1, 9):
        folder = args.out_root / str(number)
        report = folder / "report.json"
        if not report.exists():
            continue
        status = "pass" if json.loads(report.read_text())["passed"] else "FAIL"
        title = f"figure {number} ({status})"
        fig = plt.figure(figsize=(7, 5))
        if number in (1, 2, 4):
            plot_phase(fig.add_subplot(projection="3d"), folder, title)
        elif number in (3, 5):
            plot_time(fig.add_subplot(), folder, title)
        elif number == 6:
            plot_regions(fig.add_subplot(), folder, title)
        else:
            plot_basins(fig.add_subplot(projection="3d"), folder, title)
        fig.tight_layout()
        fig.savefig(args.save / f"figure_{number}.png", dpi=120)
        plt.close(fig)
        print(f"wrote {args.save / f'figure_{number}.png'}")


if __name__ == "__main__":
    main()
