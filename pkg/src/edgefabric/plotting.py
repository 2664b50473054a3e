"""Figure rendering: SVGs from run/sweep CSVs (no display needed).

Plots are pure functions of the CSVs they read; re-plotting without
re-running changes nothing (fixed svg hash salt, no timestamps).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("svg")
matplotlib.rcParams["svg.hashsalt"] = "edgefabric"

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import percentile  # noqa: E402


class MissingColumn(Exception):
    pass


def _read_csv(path: Path, required: list[str]) -> list[dict]:
    if not path.exists():
        raise MissingColumn("%s does not exist" % path)
    with open(path) as f:
        reader = csv.DictReader(f)
        cols = reader.fieldnames or []
        for c in required:
            if c not in cols:
                raise MissingColumn("%s lacks column %r" % (path, c))
        return list(reader)


def _savefig(fig, out: Path) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata={"Date": None})
    plt.close(fig)


def _reader_track(run_dir: Path):
    """Per-window (x position, delivered bytes) for the run's mobile module."""
    tput = _read_csv(run_dir / "throughput.csv", ["window_start_s", "module_id", "delivered_bytes"])
    pos = _read_csv(run_dir / "positions.csv", ["t_s", "module_id", "x_m", "y_m"])
    counts: dict[str, int] = {}
    for row in pos:
        counts[row["module_id"]] = counts.get(row["module_id"], 0) + 1
    if not counts:
        raise MissingColumn("%s/positions.csv has no rows" % run_dir)
    mobile = max(counts, key=lambda m: (counts[m], m))
    track = {}
    for row in pos:
        if row["module_id"] == mobile:
            track[float(row["t_s"])] = float(row["x_m"])
    xs, ybytes = [], []
    for row in tput:
        if row["module_id"] != mobile:
            continue
        t = float(row["window_start_s"])
        if t in track:
            xs.append(track[t])
            ybytes.append(int(row["delivered_bytes"]))
    return xs, ybytes


def plot_fig4(csv_dir: Path, out_dir: Path) -> Path:
    """Delivered throughput against reader position, one panel per run.

    csv_dir either is a single run directory or contains run directories
    (e.g. fig4_single_module/, fig4_two_modules_16m/).
    """
    csv_dir = Path(csv_dir)
    if (csv_dir / "throughput.csv").exists():
        runs = [csv_dir]
    else:
        runs = sorted(d for d in csv_dir.iterdir() if (d / "throughput.csv").exists())
    if not runs:
        raise MissingColumn("no run directories with throughput.csv under %s" % csv_dir)
    fig, axes = plt.subplots(1, len(runs), figsize=(5.5 * len(runs), 4.0), squeeze=False)
    for ax, run in zip(axes[0], runs):
        xs, ybytes = _reader_track(run)
        ax.plot(xs, ybytes, lw=1.0, color="tab:blue")
        ax.set_xlabel("reader position (m)")
        ax.set_ylabel("delivered (bytes per window)")
        ax.set_title(run.name)
        ax.grid(alpha=0.3)
    out = Path(out_dir) / "fig4.svg"
    _savefig(fig, out)
    return out


def plot_fig6(csv_dir: Path, out_dir: Path) -> Path:
    """Mean throughput vs swept value with SEM bars, per transport panel."""
    rows = _read_csv(
        Path(csv_dir) / "sweep_summary.csv",
        ["value", "transport", "runs", "mean_throughput_Bps", "sem_throughput_Bps"],
    )
    transports = sorted({r["transport"] for r in rows})
    fig, axes = plt.subplots(1, len(transports), figsize=(5.0 * len(transports), 4.0), squeeze=False, sharey=True)
    for ax, tr in zip(axes[0], transports):
        sel = sorted((float(r["value"]), r) for r in rows if r["transport"] == tr)
        vals = [v for v, _ in sel]
        means = [float(r["mean_throughput_Bps"]) for _, r in sel]
        sems = [float(r["sem_throughput_Bps"] or 0.0) for _, r in sel]
        ax.errorbar(vals, means, yerr=sems, fmt="o-", capsize=4)
        ax.set_xlabel("speed (m/s)")
        ax.set_ylabel("mean throughput (B/s)")
        ax.set_title(tr)
        ax.grid(alpha=0.3)
    out = Path(out_dir) / "fig6.svg"
    _savefig(fig, out)
    return out


def plot_latency(csv_dir: Path, out_dir: Path) -> Path:
    """Latency CDF of completed requests with p90 marker and 200 ms line."""
    rows = _read_csv(
        Path(csv_dir) / "requests.csv",
        ["request_id", "issued_at_s", "completed_at_s", "status", "hops", "payload_bytes", "class"],
    )
    lats = sorted(
        float(r["completed_at_s"]) - float(r["issued_at_s"])
        for r in rows
        if r["status"] == "completed" and r["completed_at_s"]
    )
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    if lats:
        ys = [(i + 1) / len(lats) for i in range(len(lats))]
        ax.step(lats, ys, where="post")
        p90 = percentile(lats, 90)
        ax.axvline(p90, color="tab:orange", ls="--", label="p90 = %.1f ms" % (p90 * 1e3))
    ax.axvline(0.2, color="tab:red", ls=":", label="200 ms budget")
    ax.set_xlabel("end-to-end latency (s)")
    ax.set_ylabel("fraction of completed requests")
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    out = Path(out_dir) / "latency.svg"
    _savefig(fig, out)
    return out
