"""Run metrics: per-request rows, join episodes, windowed throughput, CSVs.

CSV schemas (stable, consumed by the plot commands and external tooling):

    requests.csv    request_id,issued_at_s,completed_at_s,status,hops,payload_bytes,class
    throughput.csv  window_start_s,module_id,delivered_bytes
    joins.csv       module_id,started_s,completed_s,status
    positions.csv   t_s,module_id,x_m,y_m        (extra; used by figure plots)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .address import format_module_id

COMPLETED = "completed"
TIMED_OUT = "timed_out"
REJECTED = "rejected"
FAILED = "failed"


class EmptySamples(Exception):
    pass


class TooFewSamples(Exception):
    pass


def percentile(samples, p):
    """Nearest-rank percentile: sorted value at index ceil(p/100 * n), 1-based."""
    if not samples:
        raise EmptySamples("percentile of no samples")
    ordered = sorted(samples)
    rank = math.ceil(p / 100.0 * len(ordered))
    if rank < 1:
        rank = 1
    return ordered[rank - 1]


def sem(samples):
    """Standard error of the mean: sample stdev (n-1) over sqrt(n)."""
    n = len(samples)
    if n < 2:
        raise TooFewSamples("sem needs at least 2 samples, got %d" % n)
    mean = sum(samples) / n
    var = sum((x - mean) ** 2 for x in samples) / (n - 1)
    return math.sqrt(var) / math.sqrt(n)


@dataclass(slots=True)
class RequestRow:
    request_id: int  # globally unique per run
    module: int  # originator
    issued_at: float
    completed_at: float | None
    status: str
    hops: int
    payload_bytes: int
    traffic_class: int
    target: int = 0


@dataclass(slots=True)
class JoinRow:
    module: int
    started: float
    completed: float | None
    status: str


@dataclass
class MetricsRecord:
    """Everything one simulation run reports."""

    duration_s: float
    window_s: float = 1.0
    requests: list[RequestRow] = field(default_factory=list)
    joins: list[JoinRow] = field(default_factory=list)
    deliveries: list[tuple[float, int, int]] = field(default_factory=list)  # (t, module, bytes)
    positions: list[tuple[float, int, float, float]] = field(default_factory=list)
    max_neighbors: dict[int, int] = field(default_factory=dict)
    neighbor_rejections: list[tuple[float, int, int]] = field(default_factory=list)  # (t, at, peer)
    drops: dict[str, int] = field(default_factory=dict)

    # -- derived views --------------------------------------------------------

    def completed_requests(self) -> list[RequestRow]:
        return [r for r in self.requests if r.status == COMPLETED]

    def latencies(self) -> list[float]:
        return [r.completed_at - r.issued_at for r in self.completed_requests()]

    def delivery_rate(self) -> float:
        if not self.requests:
            return 0.0
        return len(self.completed_requests()) / len(self.requests)

    def join_success_rate(self) -> float | None:
        if not self.joins:
            return None
        done = sum(1 for j in self.joins if j.status == COMPLETED)
        return done / len(self.joins)

    def throughput_windows(self) -> list[tuple[float, int, int]]:
        """Per-window delivered bytes for every module that issued requests."""
        originators = sorted({r.module for r in self.requests})
        n_windows = max(1, math.ceil(self.duration_s / self.window_s))
        buckets = {m: [0] * n_windows for m in originators}
        for t, module, nbytes in self.deliveries:
            idx = min(int(t / self.window_s), n_windows - 1)
            if module in buckets:
                buckets[module][idx] += nbytes
        rows = []
        for i in range(n_windows):
            for m in originators:
                rows.append((i * self.window_s, m, buckets[m][i]))
        return rows

    def mean_throughput_Bps(self) -> float:
        total = sum(nbytes for _, _, nbytes in self.deliveries)
        return total / self.duration_s if self.duration_s > 0 else 0.0

    def summary(self) -> dict:
        lat = self.latencies()
        per_window: dict[int, int] = {}
        for t, _m, nbytes in self.deliveries:
            idx = int(t / self.window_s)
            per_window[idx] = per_window.get(idx, 0) + nbytes
        n_windows = max(1, math.ceil(self.duration_s / self.window_s))
        window_rates = [per_window.get(i, 0) / self.window_s for i in range(n_windows)]
        out = {
            "requests": len(self.requests),
            "completed": len(self.completed_requests()),
            "delivery_rate": self.delivery_rate(),
            "p90_latency_s": percentile(lat, 90) if lat else None,
            "mean_throughput_Bps": self.mean_throughput_Bps(),
            "throughput_sem_Bps": sem(window_rates) if len(window_rates) >= 2 else None,
            "join_attempts": len(self.joins),
            "join_success_rate": self.join_success_rate(),
        }
        return out

    def format_summary(self) -> str:
        s = self.summary()
        p90 = "n/a" if s["p90_latency_s"] is None else "%.4f" % s["p90_latency_s"]
        semv = "n/a" if s["throughput_sem_Bps"] is None else "%.1f" % s["throughput_sem_Bps"]
        jr = "n/a" if s["join_success_rate"] is None else "%.2f" % s["join_success_rate"]
        return (
            "requests=%d completed=%d delivery_rate=%.3f p90_latency_s=%s "
            "mean_throughput_Bps=%.1f sem_Bps=%s joins=%d join_success=%s"
            % (
                s["requests"],
                s["completed"],
                s["delivery_rate"],
                p90,
                s["mean_throughput_Bps"],
                semv,
                s["join_attempts"],
                jr,
            )
        )

    # -- CSV output -------------------------------------------------------------

    def write_csv(self, outdir) -> None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "requests.csv", "w") as f:
            f.write("request_id,issued_at_s,completed_at_s,status,hops,payload_bytes,class\n")
            for r in self.requests:
                done = "" if r.completed_at is None else "%.6f" % r.completed_at
                f.write(
                    "%d,%.6f,%s,%s,%d,%d,%d\n"
                    % (r.request_id, r.issued_at, done, r.status, r.hops, r.payload_bytes, r.traffic_class)
                )
        with open(outdir / "throughput.csv", "w") as f:
            f.write("window_start_s,module_id,delivered_bytes\n")
            for t, module, nbytes in self.throughput_windows():
                f.write("%.6f,%s,%d\n" % (t, format_module_id(module), nbytes))
        with open(outdir / "joins.csv", "w") as f:
            f.write("module_id,started_s,completed_s,status\n")
            for j in self.joins:
                done = "" if j.completed is None else "%.6f" % j.completed
                f.write("%s,%.6f,%s,%s\n" % (format_module_id(j.module), j.started, done, j.status))
        with open(outdir / "positions.csv", "w") as f:
            f.write("t_s,module_id,x_m,y_m\n")
            for t, module, x, y in self.positions:
                f.write("%.6f,%s,%.6f,%.6f\n" % (t, format_module_id(module), x, y))
