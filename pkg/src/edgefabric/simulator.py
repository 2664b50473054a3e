"""Deterministic discrete-event engine.

One heap of (time, insertion-seq) ordered events drives everything:
beacon ticks, frame transmissions and arrivals, request timeouts, workload
steps, scripted churn, and metric sampling.  Every transmission consults
the radio model with the sender/receiver positions at that instant; loss
draws come from one seeded stream, consumed in a fixed order, so a
(scenario, seed) pair always produces byte-identical output.

Radio access is serialized per module: one frame on the air at a time,
preferential-class frames dequeued first.  The frame airtime occupies the
sender at the nominal channel rate; per-link delivery delay additionally
degrades with distance per the radio model.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

from . import wire
from .address import BROADCAST, FabricAddress, OffsetOutOfRange
from .baseline import TcpReader
from .metrics import (
    COMPLETED,
    FAILED,
    REJECTED,
    TIMED_OUT,
    EmptySamples,
    JoinRow,
    MetricsRecord,
    RequestRow,
    TooFewSamples,
    percentile,
    sem,
)
from .module_core import ModuleState, NoRouteToTarget, NotJoined
from .radio import LOST, MobilityTrace, Placement
from .routing import NoRoute
from .scenario import Scenario, TargetSpec

__all__ = [
    "Simulator",
    "run",
    "percentile",
    "sem",
    "EmptySamples",
    "TooFewSamples",
]

# event kinds, in tie-break-irrelevant order (insertion seq breaks ties)
_TX = 0
_ARRIVAL = 1
_TICK = 2
_TIMEOUT = 3
_WORK = 4
_CHURN = 5
_SAMPLE = 6
_TCP = 7


@dataclass(slots=True)
class _RadioPort:
    high: list = field(default_factory=list)  # class-1 frames, FIFO
    low: list = field(default_factory=list)
    hi_head: int = 0
    lo_head: int = 0
    busy_until: float = 0.0
    tx_scheduled: bool = False

    def push(self, tclass: int, item) -> None:
        (self.high if tclass >= 1 else self.low).append(item)

    def pop(self):
        if self.hi_head < len(self.high):
            item = self.high[self.hi_head]
            self.hi_head += 1
            if self.hi_head > 64:
                del self.high[: self.hi_head]
                self.hi_head = 0
            return item
        if self.lo_head < len(self.low):
            item = self.low[self.lo_head]
            self.lo_head += 1
            if self.lo_head > 64:
                del self.low[: self.lo_head]
                self.lo_head = 0
            return item
        return None

    def clear(self) -> None:
        self.high.clear()
        self.low.clear()
        self.hi_head = self.lo_head = 0


class Simulator:
    def __init__(self, scenario: Scenario, seed: int | None = None):
        self.sc = scenario
        self.seed = scenario.seed if seed is None else seed
        self.rng = random.Random(self.seed)
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self.metrics = MetricsRecord(duration_s=scenario.duration_s, window_s=scenario.window_s)

        self.order = [m.id for m in scenario.modules]
        self.specs = {m.id: m for m in scenario.modules}
        self.members = {m.id for m in scenario.modules if m.member}
        self.up = {mid: True for mid in self.order}
        self.placement = Placement()
        reader = scenario.workload.reader
        for spec in scenario.modules:
            if spec.trace is not None:
                trace = spec.trace
                if scenario.workload.speed_mps is not None:
                    # workload-level speed override applies to every trace
                    trace = MobilityTrace(trace.waypoints, scenario.workload.speed_mps, trace.loop)
                self.placement.add_mobile(spec.id, trace)
            else:
                self.placement.add_static(spec.id, *spec.position)
        self._static_pos = {
            mid: self.placement.position_at(mid, 0.0)
            for mid in self.order
            if not self.placement.is_mobile(mid)
        }
        self._dist_cache: dict[tuple[int, int], float] = {}

        self.fabric = scenario.workload.transport == "fabric"
        self.states: dict[int, ModuleState] = {}
        self.ports: dict[int, _RadioPort] = {}
        if self.fabric:
            for spec in scenario.modules:
                st = ModuleState(
                    id=spec.id,
                    capacity=spec.capacity,
                    config=scenario.protocol,
                    gateway=spec.gateway,
                    bootstrap_member=spec.member,
                )
                if spec.member:
                    st.membership |= self.members
                self.states[spec.id] = st
                self.ports[spec.id] = _RadioPort()

        self.tcp: TcpReader | None = None
        if not self.fabric and reader is not None:
            servers = [mid for mid in self.order if mid in self.members and mid != reader]
            self.tcp = TcpReader(self, reader, servers)

        self._open: dict[tuple[int, int], RequestRow] = {}
        self._hops: dict[tuple[int, int], int] = {}
        self._open_join: dict[int, float] = {}
        self._next_row_id = 1

    # -- event plumbing ---------------------------------------------------------

    def schedule(self, at: float, kind: int, data) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (at, self._seq, kind, data))

    def run(self) -> MetricsRecord:
        sc = self.sc
        n = len(self.order)
        if self.fabric:
            for i, mid in enumerate(self.order):
                self.schedule(sc.protocol.beacon_interval_s * i / n, _TICK, mid)
        self._schedule_workload()
        for ev in sc.workload.events:
            self.schedule(ev.at, _CHURN, (ev.module, ev.action))
        t = 0.0
        while t <= sc.duration_s:
            self.schedule(t, _SAMPLE, None)
            t += sc.window_s
        if self.tcp is not None:
            self.tcp.start()

        while self._heap:
            at, _seq, kind, data = self._heap[0]
            if at > sc.duration_s:
                break
            heapq.heappop(self._heap)
            self.now = at
            if kind == _TX:
                self._do_transmit(data)
            elif kind == _ARRIVAL:
                self._do_arrival(*data)
            elif kind == _TICK:
                self._do_tick(data)
            elif kind == _TIMEOUT:
                self._do_timeout(*data)
            elif kind == _WORK:
                self._do_workload_step(data)
            elif kind == _CHURN:
                self._do_churn(*data)
            elif kind == _SAMPLE:
                self._do_sample()
            elif kind == _TCP:
                self.tcp.handle(*data)
        self._finish()
        return self.metrics

    def _finish(self) -> None:
        for row in self._open.values():
            row.status = TIMED_OUT
        self._open.clear()
        # join episodes still in progress at the end are unobserved, not failures
        self._open_join.clear()

    # -- positions and radio ------------------------------------------------------

    def distance(self, a: int, b: int) -> float:
        sa = self._static_pos.get(a)
        sb = self._static_pos.get(b)
        if sa is not None and sb is not None:
            key = (a, b) if a < b else (b, a)
            d = self._dist_cache.get(key)
            if d is None:
                d = self.placement.distance(a, b, 0.0)
                self._dist_cache[key] = d
            return d
        return self.placement.distance(a, b, self.now)

    def submit(self, sender: int, emissions) -> None:
        port = self.ports[sender]
        for em in emissions:
            frame = wire.encode_frame(em.msg)
            port.push(em.msg.traffic_class, (em.to, frame))
        if emissions and not port.tx_scheduled:
            port.tx_scheduled = True
            self.schedule(max(self.now, port.busy_until), _TX, sender)

    def _do_transmit(self, sender: int) -> None:
        port = self.ports[sender]
        item = port.pop()
        if item is None or not self.up[sender]:
            port.tx_scheduled = False
            if item is not None:
                port.clear()
            return
        to, frame = item
        radio = self.sc.radio
        if len(frame) > radio.mtu:
            self.metrics.drops["oversize"] = self.metrics.drops.get("oversize", 0) + 1
        else:
            airtime = len(frame) / radio.t_max_bps
            port.busy_until = self.now + airtime
            if to == BROADCAST:
                for rcpt in self.order:
                    if rcpt == sender or not self.up[rcpt]:
                        continue
                    self._offer(sender, rcpt, frame)
            elif self.up.get(to, False):
                self._offer(sender, to, frame)
        if port.hi_head < len(port.high) or port.lo_head < len(port.low):
            self.schedule(port.busy_until, _TX, sender)
        else:
            port.tx_scheduled = False

    def _offer(self, sender: int, rcpt: int, frame: bytes) -> None:
        radio = self.sc.radio
        d = self.distance(sender, rcpt)
        if d >= radio.range_m:
            return
        delay = radio.frame_delay(d, len(frame), self.rng)
        if delay is LOST:
            self.metrics.drops["radio_loss"] = self.metrics.drops.get("radio_loss", 0) + 1
            return
        self.schedule(self.now + delay, _ARRIVAL, (rcpt, frame))

    def _do_arrival(self, rcpt: int, frame: bytes) -> None:
        if not self.up[rcpt]:
            return
        st = self.states[rcpt]
        msg = wire.decode_frame(frame)
        if msg.dst == rcpt and msg.kind in (wire.MessageKind.LOAD_REQUEST, wire.MessageKind.STORE_REQUEST):
            self._hops[(msg.src, msg.request_id)] = st.config.ttl_max - msg.ttl
        out = st.on_frame(msg, self.now)
        self._drain(rcpt, st)
        if out:
            self.submit(rcpt, out)

    def _do_tick(self, mid: int) -> None:
        self.schedule(self.now + self.sc.protocol.beacon_interval_s, _TICK, mid)
        if not self.up[mid]:
            return
        st = self.states[mid]
        out = st.on_beacon_tick(self.now)
        self._drain(mid, st)
        if out:
            self.submit(mid, out)

    def _do_timeout(self, mid: int, rid: int) -> None:
        if not self.up[mid]:
            return
        st = self.states[mid]
        st.on_timeout(rid, self.now)
        self._drain(mid, st)

    # -- workload -----------------------------------------------------------------

    def _schedule_workload(self) -> None:
        w = self.sc.workload
        if not w.targets:
            return
        count = w.count
        t = w.start_s
        i = 0
        while t <= self.sc.duration_s and (count == 0 or i < count):
            self.schedule(t, _WORK, i)
            i += 1
            t = w.start_s + i * w.interval_s

    def _resolve_target(self, step: int) -> FabricAddress | None:
        w = self.sc.workload
        t: TargetSpec = w.targets[step % len(w.targets)]
        if t.kind == "module":
            return FabricAddress(t.module, t.offset)
        if t.kind == "local":
            tag, resolved = w.address_space.translate(t.local)
            if tag == "local":
                return FabricAddress(w.reader, resolved)
            return resolved
        best = None
        best_d = None
        for mid in self.order:
            if mid == w.reader or mid not in self.members or not self.up[mid]:
                continue
            d = self.distance(w.reader, mid)
            if best_d is None or d < best_d:
                best, best_d = mid, d
        return None if best is None else FabricAddress(best, 0)

    def _do_workload_step(self, step: int) -> None:
        w = self.sc.workload
        addr = self._resolve_target(step)
        if self.tcp is not None:
            self.tcp.issue(step, addr)
            return
        st = self.states[w.reader]
        payload = bytes([step & 0xFF]) * w.payload_bytes if w.op == "store" else b""
        try:
            if w.op == "load":
                if addr is None:
                    raise NoRoute("no reachable target")
                out, rid = st.initiate_request(
                    "load", addr, self.now, length=w.payload_bytes, traffic_class=w.traffic_class
                )
            else:
                if addr is None:
                    raise NoRoute("no reachable target")
                out, rid = st.initiate_request(
                    "store", addr, self.now, data=payload, traffic_class=w.traffic_class
                )
            self._drain(w.reader, st)
            if out:
                self.submit(w.reader, out)
                self.schedule(self.now + st.config.request_timeout_s, _TIMEOUT, (w.reader, rid))
        except (NotJoined, NoRouteToTarget, OffsetOutOfRange) as err:
            self._drain(w.reader, st)
            rid = getattr(err, "request_id", None)
            if rid is not None:
                self._row_close(w.reader, rid, self.now, REJECTED, 0)
            else:
                # target unresolved before a request id was even allocated
                self._synthetic_rejected(w.reader, self.now, w)
        except NoRoute:
            self._synthetic_rejected(w.reader, self.now, w)

    def _synthetic_rejected(self, mid: int, now: float, w) -> None:
        row = RequestRow(
            request_id=self._next_row_id,
            module=mid,
            issued_at=now,
            completed_at=None,
            status=REJECTED,
            hops=0,
            payload_bytes=w.payload_bytes,
            traffic_class=w.traffic_class,
        )
        self._next_row_id += 1
        self.metrics.requests.append(row)

    # -- churn ---------------------------------------------------------------------

    def _do_churn(self, mid: int, action: str) -> None:
        if action == "leave" and self.up[mid] and self.fabric:
            st = self.states[mid]
            self.submit(mid, st.make_leave())
            action = "down"
        if action == "down":
            if not self.up[mid]:
                return
            self.up[mid] = False
            if self.fabric:
                self.ports[mid].clear()
                st = self.states[mid]
                for rid in list(st.pending):
                    self._row_close(mid, rid, self.now, TIMED_OUT, 0)
                spec = self.specs[mid]
                fresh = ModuleState(
                    id=mid,
                    capacity=spec.capacity,
                    config=self.sc.protocol,
                    gateway=spec.gateway,
                    bootstrap_member=spec.member,
                    store=st.store,  # NVM survives power-off
                )
                if spec.member:
                    fresh.membership |= self.members
                if mid in self._open_join:
                    started = self._open_join.pop(mid)
                    self.metrics.joins.append(JoinRow(mid, started, None, FAILED))
                self.states[mid] = fresh
        elif action == "up":
            self.up[mid] = True

    # -- metrics glue ----------------------------------------------------------------

    def _drain(self, mid: int, st: ModuleState) -> None:
        m = self.metrics
        if len(st.neighbors) > m.max_neighbors.get(mid, 0):
            m.max_neighbors[mid] = len(st.neighbors)
        for ev in st.drain_events():
            tag = ev[0]
            if tag == "request_issued":
                _, rid, t, op, plen, tclass, target = ev
                row = RequestRow(
                    request_id=self._next_row_id,
                    module=mid,
                    issued_at=t,
                    completed_at=None,
                    status="open",
                    hops=0,
                    payload_bytes=plen,
                    traffic_class=tclass,
                    target=target,
                )
                self._next_row_id += 1
                m.requests.append(row)
                self._open[(mid, rid)] = row
            elif tag == "request_completed":
                _, rid, t, delivered = ev
                self._row_close(mid, rid, t, COMPLETED, delivered)
            elif tag == "request_failed":
                _, rid, t, _reason = ev
                self._row_close(mid, rid, t, REJECTED, 0)
            elif tag == "request_timed_out":
                _, rid, t = ev
                self._row_close(mid, rid, t, TIMED_OUT, 0)
            elif tag == "join_started":
                self._open_join[mid] = ev[1]
            elif tag == "join_completed":
                started = self._open_join.pop(mid, ev[1])
                m.joins.append(JoinRow(mid, started, ev[1], COMPLETED))
            elif tag == "join_failed":
                started = self._open_join.pop(mid, ev[1])
                m.joins.append(JoinRow(mid, started, None, FAILED))
            elif tag == "neighbor_full":
                m.neighbor_rejections.append((ev[2], mid, ev[1]))
            elif tag in ("drop_ttl", "drop_noroute", "orphan_response", "overlay_left"):
                m.drops[tag] = m.drops.get(tag, 0) + 1

    def _row_close(self, mid: int, rid: int, t: float, status: str, delivered: int) -> None:
        row = self._open.pop((mid, rid), None)
        if row is None:
            return
        row.status = status
        row.completed_at = t if status == COMPLETED else None
        if status == COMPLETED:
            row.hops = self._hops.pop((mid, rid), 0)
            if delivered:
                row.payload_bytes = delivered
            self.metrics.deliveries.append((t, mid, delivered))
        else:
            self._hops.pop((mid, rid), None)

    def _do_sample(self) -> None:
        for mid in self.order:
            if self.placement.is_mobile(mid) or self.now == 0.0:
                x, y = self.placement.position_at(mid, self.now)
                self.metrics.positions.append((self.now, mid, x, y))


def run(scenario: Scenario, seed: int | None = None) -> MetricsRecord:
    """Execute one scenario to completion and return its metrics."""
    return Simulator(scenario, seed).run()
