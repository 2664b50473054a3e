"""Parameter sweeps: run a scenario across a value grid and seed set.

Each (value, transport, seed) triple is one independent simulation; the
same seed set is reused at every value so comparisons are paired.  Runs
execute in parallel when more than one CPU is available (results are
collected in submission order, so output stays deterministic).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .metrics import percentile, sem
from .scenario import build_scenario, set_param
from .simulator import Simulator


class UnknownParameter(Exception):
    pass


@dataclass(slots=True)
class SweepRun:
    param: str
    value: float
    transport: str
    seed: int
    requests: int
    completed: int
    mean_throughput_Bps: float
    join_attempts: int
    join_completed: int
    latencies: list[float]


def _run_one(args):
    data, name, seed = args
    sc = build_scenario(data, name)
    m = Simulator(sc, seed).run()
    return {
        "requests": len(m.requests),
        "completed": len(m.completed_requests()),
        "mean_throughput_Bps": m.mean_throughput_Bps(),
        "join_attempts": len(m.joins),
        "join_completed": sum(1 for j in m.joins if j.status == "completed"),
        "latencies": m.latencies(),
    }


def run_sweep(
    data: dict,
    name: str,
    param: str,
    values: list[float],
    seeds: int,
    base_seed: int,
    compare_transports: bool = False,
) -> list[SweepRun]:
    transports = ["fabric", "tcp"] if compare_transports else [None]
    jobs = []
    meta = []
    for value in values:
        try:
            varied = set_param(data, param, value)
        except KeyError:
            raise UnknownParameter("no numeric scenario field at %r" % param) from None
        for transport in transports:
            doc = varied if transport is None else set_param(varied, "workload.transport", transport)
            label = transport or doc.get("workload", {}).get("transport", "fabric")
            for j in range(seeds):
                jobs.append((doc, name, base_seed + j))
                meta.append((value, label, base_seed + j))
    cpus = os.cpu_count() or 1
    if cpus > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cpus, len(jobs))) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    rows = []
    for (value, transport, seed), res in zip(meta, results):
        rows.append(
            SweepRun(
                param=param,
                value=value,
                transport=transport,
                seed=seed,
                latencies=res["latencies"],
                requests=res["requests"],
                completed=res["completed"],
                mean_throughput_Bps=res["mean_throughput_Bps"],
                join_attempts=res["join_attempts"],
                join_completed=res["join_completed"],
            )
        )
    return rows


def aggregate(rows: list[SweepRun]) -> list[dict]:
    """Per (value, transport): throughput mean and SEM, pooled rates."""
    groups: dict[tuple[float, str], list[SweepRun]] = {}
    for r in rows:
        groups.setdefault((r.value, r.transport), []).append(r)
    out = []
    for (value, transport), runs in groups.items():
        tputs = [r.mean_throughput_Bps for r in runs]
        lat = [x for r in runs for x in r.latencies]
        requests = sum(r.requests for r in runs)
        completed = sum(r.completed for r in runs)
        attempts = sum(r.join_attempts for r in runs)
        joined = sum(r.join_completed for r in runs)
        out.append(
            {
                "param": runs[0].param,
                "value": value,
                "transport": transport,
                "runs": len(runs),
                "mean_throughput_Bps": sum(tputs) / len(tputs),
                "sem_throughput_Bps": sem(tputs) if len(tputs) >= 2 else None,
                "delivery_rate": completed / requests if requests else None,
                "p90_latency_s": percentile(lat, 90) if lat else None,
                "join_success_rate": joined / attempts if attempts else None,
            }
        )
    return out


def _fmt(v, spec="%.6f"):
    return "" if v is None else spec % v


def write_sweep_outputs(outdir, rows: list[SweepRun], aggs: list[dict]) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "sweep.csv", "w") as f:
        f.write(
            "param,value,transport,seed,requests,completed,delivery_rate,"
            "p90_latency_s,mean_throughput_Bps,join_attempts,join_completed\n"
        )
        for r in rows:
            rate = r.completed / r.requests if r.requests else None
            p90 = percentile(r.latencies, 90) if r.latencies else None
            f.write(
                "%s,%.6f,%s,%d,%d,%d,%s,%s,%.3f,%d,%d\n"
                % (
                    r.param,
                    r.value,
                    r.transport,
                    r.seed,
                    r.requests,
                    r.completed,
                    _fmt(rate, "%.4f"),
                    _fmt(p90),
                    r.mean_throughput_Bps,
                    r.join_attempts,
                    r.join_completed,
                )
            )
    with open(outdir / "sweep_summary.csv", "w") as f:
        f.write(
            "param,value,transport,runs,mean_throughput_Bps,sem_throughput_Bps,"
            "delivery_rate,p90_latency_s,join_success_rate\n"
        )
        for a in aggs:
            f.write(
                "%s,%.6f,%s,%d,%.3f,%s,%s,%s,%s\n"
                % (
                    a["param"],
                    a["value"],
                    a["transport"],
                    a["runs"],
                    a["mean_throughput_Bps"],
                    _fmt(a["sem_throughput_Bps"], "%.3f"),
                    _fmt(a["delivery_rate"], "%.4f"),
                    _fmt(a["p90_latency_s"]),
                    _fmt(a["join_success_rate"], "%.4f"),
                )
            )
