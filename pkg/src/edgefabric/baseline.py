"""Connection-oriented comparator transport.

A mobile reader that must hold a session with the nearest fixed node:
three-message handshake before any transfer, sequential request/response
with timer-driven retransmission (1 s base, exponential backoff), and a
full connection drop plus fresh handshake whenever the nearest node
changes.  Uses the same radio model and random stream as the fabric
transport, so the two are directly comparable per (scenario, seed).
"""

from __future__ import annotations

from .metrics import COMPLETED, REJECTED, TIMED_OUT, RequestRow
from .radio import LOST

HS_FRAME = 40
REQ_FRAME = 46
RESP_OVERHEAD = 40
RTO_BASE_S = 1.0
RTO_CAP_S = 8.0
CHECK_INTERVAL_S = 0.1

_TCP = 7  # simulator event kind


class TcpReader:
    def __init__(self, sim, reader: int, servers: list[int]):
        self.sim = sim
        self.reader = reader
        self.servers = servers
        self.state = "idle"  # idle | handshake | connected
        self.conn: int | None = None
        self.epoch = 0
        self.retries = 0
        self.await_stage = -1
        self.queue: list[tuple[int, int]] = []  # (rid, payload_bytes)
        self.q_head = 0
        self.inflight: tuple[int, int] | None = None
        self.next_rid = 1

    # -- engine hooks -------------------------------------------------------------

    def start(self) -> None:
        self.sim.schedule(0.0, _TCP, ("check", None))

    def issue(self, step: int, _addr) -> None:
        w = self.sim.sc.workload
        rid = self.next_rid
        self.next_rid += 1
        row = RequestRow(
            request_id=self.sim._next_row_id,
            module=self.reader,
            issued_at=self.sim.now,
            completed_at=None,
            status="open",
            hops=0,
            payload_bytes=w.payload_bytes,
            traffic_class=w.traffic_class,
        )
        self.sim._next_row_id += 1
        self.sim.metrics.requests.append(row)
        self.sim._open[(self.reader, rid)] = row
        self.queue.append((rid, w.payload_bytes))
        self.sim.schedule(
            self.sim.now + self.sim.sc.protocol.request_timeout_s, _TCP, ("req_timeout", rid)
        )
        self._pump()

    def handle(self, tag: str, payload) -> None:
        if tag == "check":
            self._check()
            self.sim.schedule(self.sim.now + CHECK_INTERVAL_S, _TCP, ("check", None))
        elif tag == "hs_arrival":
            self._on_hs_arrival(*payload)
        elif tag == "req_arrival":
            self._on_req_arrival(*payload)
        elif tag == "resp_arrival":
            self._on_resp_arrival(*payload)
        elif tag == "retx":
            self._on_retx(*payload)
        elif tag == "req_timeout":
            self._on_req_timeout(payload)

    # -- connection management ------------------------------------------------------

    def _nearest(self) -> int | None:
        best, best_d = None, None
        for s in self.servers:
            if not self.sim.up[s]:
                continue
            d = self.sim.distance(self.reader, s)
            if best_d is None or d < best_d:
                best, best_d = s, d
        if best is None or best_d >= self.sim.sc.radio.range_m:
            return None
        return best

    def _check(self) -> None:
        near = self._nearest()
        if near is None:
            if self.state != "idle":
                self._drop_connection()
            return
        if self.state == "idle":
            self._start_handshake(near)
        elif near != self.conn:
            # handoff: nearest changed, connection restarts from scratch
            self._drop_connection()
            self._start_handshake(near)

    def _drop_connection(self) -> None:
        self.epoch += 1
        self.state = "idle"
        self.conn = None
        self.retries = 0
        self.await_stage = -1
        if self.inflight is not None:
            rid, _ = self.inflight
            self.sim._row_close(self.reader, rid, self.sim.now, REJECTED, 0)
            self.inflight = None

    def _start_handshake(self, server: int) -> None:
        self.epoch += 1
        self.state = "handshake"
        self.conn = server
        self.retries = 0
        self._send_stage(0)

    def _send_stage(self, stage: int) -> None:
        self.await_stage = stage
        src, dst = (self.reader, self.conn) if stage != 1 else (self.conn, self.reader)
        self._radio_send(src, dst, HS_FRAME, ("hs_arrival", (self.epoch, stage)))
        self._arm_retx(("hs", stage))

    def _on_hs_arrival(self, epoch: int, stage: int) -> None:
        if epoch != self.epoch or self.state != "handshake":
            return
        if stage == 0:
            self.retries = 0
            self._send_stage(1)
        elif stage == 1:
            self.retries = 0
            self._send_stage(2)
        else:
            self.state = "connected"
            self.retries = 0
            self.await_stage = -1
            self._pump()

    # -- data transfer ----------------------------------------------------------------

    def _pump(self) -> None:
        if self.state != "connected" or self.inflight is not None:
            return
        while self.q_head < len(self.queue):
            rid, plen = self.queue[self.q_head]
            self.q_head += 1
            if (self.reader, rid) in self.sim._open:
                self.inflight = (rid, plen)
                self.retries = 0
                self._send_request()
                return

    def _send_request(self) -> None:
        rid, _plen = self.inflight
        self._radio_send(self.reader, self.conn, REQ_FRAME, ("req_arrival", (self.epoch, rid)))
        self._arm_retx(("req", rid))

    def _on_req_arrival(self, epoch: int, rid: int) -> None:
        if epoch != self.epoch or self.state != "connected" or self.inflight is None:
            return
        plen = self.inflight[1]
        self._radio_send(self.conn, self.reader, RESP_OVERHEAD + plen, ("resp_arrival", (epoch, rid, plen)))

    def _on_resp_arrival(self, epoch: int, rid: int, plen: int) -> None:
        if epoch != self.epoch or self.inflight is None or self.inflight[0] != rid:
            return
        self.sim._row_close(self.reader, rid, self.sim.now, COMPLETED, plen)
        self.inflight = None
        self.retries = 0
        self._pump()

    def _on_req_timeout(self, rid: int) -> None:
        row = self.sim._open.get((self.reader, rid))
        if row is None:
            return
        self.sim._row_close(self.reader, rid, self.sim.now, TIMED_OUT, 0)
        if self.inflight is not None and self.inflight[0] == rid:
            self.inflight = None
            self.retries = 0
            self._pump()

    # -- timers and radio ---------------------------------------------------------------

    def _arm_retx(self, token) -> None:
        rto = min(RTO_BASE_S * (2.0**self.retries), RTO_CAP_S)
        self.sim.schedule(self.sim.now + rto, _TCP, ("retx", (self.epoch, token)))

    def _on_retx(self, epoch: int, token) -> None:
        if epoch != self.epoch:
            return
        kind, detail = token
        if kind == "hs":
            if self.state == "handshake" and self.await_stage == detail:
                self.retries += 1
                self._send_stage(detail)
        elif kind == "req":
            if self.inflight is not None and self.inflight[0] == detail:
                self.retries += 1
                self._send_request()

    def _radio_send(self, src: int, dst: int, nbytes: int, event) -> None:
        """One message over the shared radio model; silently lost when the
        draw or the range says so (the retransmit timer covers it)."""
        radio = self.sim.sc.radio
        d = self.sim.distance(src, dst)
        if d >= radio.range_m:
            return
        delay = radio.frame_delay(d, nbytes, self.sim.rng)
        if delay is LOST:
            return
        self.sim.schedule(self.sim.now + delay, _TCP, event)
