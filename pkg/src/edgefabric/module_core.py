"""Memory-module state machine.

Each module owns an NVM byte store, a neighbor table capped at ten direct
links, a distance-vector routing table, and an overlay membership view.
It reacts to decoded frames and beacon ticks by mutating its own state and
returning Emissions (frames to transmit); all cross-module interaction
flows through those emissions, so a module is a deterministic transition
function of (state, input, now).

Neighbor usability: a neighbor becomes eligible as a next hop (and as a
join sponsor) only after `contact_k` consecutive beacon intervals of
bidirectional contact — we heard it, and its advertisement proves it heard
us.  A missed interval resets the admission streak; once admitted, a
neighbor stays usable until liveness expiry drops it.  The admission
window is what stretches overlay convergence when a module moves quickly
past the mesh.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from . import wire
from .address import BROADCAST, FabricAddress, OffsetOutOfRange
from .coherence import NvmStore
from .routing import NoRoute, RoutingTable
from .wire import ErrorCode, Message, MessageKind

CONTROL_CLASS = 1  # beacons, route updates and join traffic ride preferential


class NeighborTableFull(Exception):
    pass


class NotJoined(Exception):
    def __init__(self, request_id: int):
        super().__init__("module has not joined an overlay")
        self.request_id = request_id


class NoRouteToTarget(NoRoute):
    def __init__(self, request_id: int, dst: int):
        super().__init__("no route to %012x and no gateway" % dst)
        self.request_id = request_id


@dataclass(slots=True)
class ProtocolConfig:
    beacon_interval_s: float = 0.5
    ttl_max: int = 8
    contact_k: int = 2
    route_expiry_intervals: int = 3
    neighbor_cap: int = 10
    poison_hold_intervals: int = 2
    request_timeout_s: float = 3.2

    @property
    def route_expiry_s(self) -> float:
        return self.route_expiry_intervals * self.beacon_interval_s

    @property
    def liveness_window_s(self) -> float:
        return self.route_expiry_intervals * self.beacon_interval_s

    @property
    def contact_window_s(self) -> float:
        # a hair over one interval so phase offsets don't break streaks
        return 1.25 * self.beacon_interval_s


@dataclass(slots=True)
class NeighborInfo:
    last_heard: float
    heard_me_at: float = -1.0e18
    streak: int = 0
    usable: bool = False


@dataclass(slots=True)
class PendingRequest:
    issued_at: float
    op: str  # "load" | "store"
    addr: FabricAddress
    payload_len: int
    traffic_class: int


@dataclass(slots=True)
class Emission:
    to: int  # BROADCAST or a specific module id
    msg: Message
    delay: float = 0.0


@dataclass(eq=True)
class ModuleState:
    id: int
    capacity: int
    config: ProtocolConfig
    gateway: int | None = None
    bootstrap_member: bool = False
    store: NvmStore = None  # type: ignore[assignment]
    neighbors: dict[int, NeighborInfo] = field(default_factory=dict)
    routing: RoutingTable = None  # type: ignore[assignment]
    membership: set[int] = field(default_factory=set)
    joined: bool = False
    pending: dict[int, PendingRequest] = field(default_factory=dict)
    next_request_id: int = 1
    join_active: bool = False
    poisons: dict[int, tuple[int, float]] = field(default_factory=dict)  # dst -> (seq, expires_at)
    events: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        if self.store is None:
            self.store = NvmStore(self.capacity)
        if self.routing is None:
            self.routing = RoutingTable(self.id)
        if self.bootstrap_member:
            self.joined = True
            self.membership.add(self.id)

    # -- neighbor management -------------------------------------------------

    def add_neighbor(self, peer: int, now: float) -> None:
        """Insert or refresh a directly heard peer.

        At the ten-link cap a new peer only gets in by evicting a neighbor
        that already fell out of the liveness window; otherwise the mesh
        degree is saturated and the peer is rejected.
        """
        if peer == self.id:
            raise ValueError("module cannot neighbor itself")
        info = self.neighbors.get(peer)
        if info is not None:
            info.last_heard = now
            return
        if len(self.neighbors) >= self.config.neighbor_cap:
            stalest = min(self.neighbors, key=lambda p: (self.neighbors[p].last_heard, p))
            if now - self.neighbors[stalest].last_heard > self.config.liveness_window_s:
                self._drop_neighbor(stalest, now)
            else:
                raise NeighborTableFull("all %d links fresh" % self.config.neighbor_cap)
        self.neighbors[peer] = NeighborInfo(last_heard=now)

    def _drop_neighbor(self, peer: int, now: float) -> None:
        del self.neighbors[peer]
        hold = now + self.config.poison_hold_intervals * self.config.beacon_interval_s
        for dst, _cost, seq in self.routing.purge_via(peer):
            self.poisons[dst] = (seq, hold)

    def _expire_neighbors(self, now: float) -> None:
        stale = [
            p
            for p, info in self.neighbors.items()
            if now - info.last_heard > self.config.liveness_window_s
        ]
        for p in stale:
            self._drop_neighbor(p, now)
        if not self.neighbors and self.joined and not self.bootstrap_member:
            self.joined = False
            self.membership.clear()
            self.events.append(("overlay_left", now))
        if not self.neighbors and self.join_active:
            self.join_active = False
            self.events.append(("join_failed", now))

    def usable_neighbor(self, peer: int) -> bool:
        info = self.neighbors.get(peer)
        return info is not None and info.usable

    # -- beacon tick ----------------------------------------------------------

    def on_beacon_tick(self, now: float) -> list[Emission]:
        cfg = self.config
        self._expire_neighbors(now)
        for info in self.neighbors.values():
            if info.usable:
                continue  # admission is one-way; liveness expiry handles decay
            w = cfg.contact_window_s
            if now - info.last_heard <= w and now - info.heard_me_at <= w:
                info.streak += 1
            else:
                info.streak = 0
            info.usable = info.streak >= cfg.contact_k
        self.routing.expire(now, cfg.route_expiry_s)
        self.routing.tick(now)

        advert = self.routing.make_advertisement()
        if self.poisons:
            for dst in list(self.poisons):
                seq, expires = self.poisons[dst]
                entry = self.routing.entries.get(dst)
                healed = entry is not None and entry.cost < 0xFFFF and entry.seq >= seq
                if now >= expires or healed:
                    del self.poisons[dst]
                else:
                    advert.append((dst, 0xFFFF, seq))

        out = [
            Emission(BROADCAST, Message(MessageKind.BEACON, self.id, BROADCAST, 1, CONTROL_CLASS, 0)),
            Emission(
                BROADCAST,
                Message(
                    MessageKind.ROUTE_UPDATE,
                    self.id,
                    BROADCAST,
                    1,
                    CONTROL_CLASS,
                    0,
                    wire.RouteAdvert(tuple(advert)),
                ),
            ),
        ]
        if not self.joined and self.neighbors:
            if not self.join_active:
                self.join_active = True
                self.events.append(("join_started", now))
            sponsor = max(self.neighbors, key=lambda p: (self.neighbors[p].streak, self.neighbors[p].last_heard, -p))
            out.append(
                Emission(
                    sponsor,
                    Message(MessageKind.JOIN_REQUEST, self.id, sponsor, 1, CONTROL_CLASS, 0),
                )
            )
        return out

    # -- frame handling -------------------------------------------------------

    def on_frame(self, msg: Message, now: float) -> list[Emission]:
        """Dispatch one decoded frame; local errors never escape the module."""
        kind = msg.kind
        if kind is MessageKind.BEACON:
            self._note_contact(msg.src, now)
            return []
        if kind is MessageKind.ROUTE_UPDATE:
            return self._on_route_update(msg, now)
        if kind is MessageKind.JOIN_REQUEST:
            return self._on_join_request(msg, now)
        if kind is MessageKind.JOIN_ACCEPT:
            self._on_join_accept(msg, now)
            return []
        if kind is MessageKind.LEAVE:
            self._on_leave(msg, now)
            return []
        if msg.dst == self.id:
            return self._deliver_local(msg, now)
        return self._forward(msg, now)

    def _note_contact(self, peer: int, now: float) -> None:
        try:
            self.add_neighbor(peer, now)
        except NeighborTableFull:
            self.events.append(("neighbor_full", peer, now))

    def _on_route_update(self, msg: Message, now: float) -> list[Emission]:
        self._note_contact(msg.src, now)
        info = self.neighbors.get(msg.src)
        if info is None:
            return []  # table saturated; ignore routes from the rejected peer
        entries = list(msg.body.entries)
        for dst, cost, _seq in entries:
            if dst == self.id and cost <= 1:
                info.heard_me_at = now
                break
        if not info.usable:
            # not yet a usable next hop: only learn the sender's own entry
            entries = [e for e in entries if e[0] == msg.src]
        self.routing.merge_update(msg.src, entries, 1, now, self.config.route_expiry_s)
        return []

    def _on_join_request(self, msg: Message, now: float) -> list[Emission]:
        self._note_contact(msg.src, now)
        if not self.joined or not self.usable_neighbor(msg.src):
            return []
        self.membership.add(msg.src)
        return [
            Emission(
                msg.src,
                Message(
                    MessageKind.JOIN_ACCEPT,
                    self.id,
                    msg.src,
                    1,
                    CONTROL_CLASS,
                    msg.request_id,
                    wire.MemberList(tuple(sorted(self.membership))),
                ),
            )
        ]

    def _on_join_accept(self, msg: Message, now: float) -> None:
        self._note_contact(msg.src, now)
        if self.joined:
            return
        self.joined = True
        self.membership = set(msg.body.ids) | {self.id, msg.src}
        self.join_active = False
        self.events.append(("join_completed", now))

    def _on_leave(self, msg: Message, now: float) -> None:
        peer = msg.src
        self.membership.discard(peer)
        if peer in self.neighbors:
            self._drop_neighbor(peer, now)

    # -- data plane -----------------------------------------------------------

    def _deliver_local(self, msg: Message, now: float) -> list[Emission]:
        kind = msg.kind
        if kind is MessageKind.LOAD_REQUEST:
            return self._serve_load(msg, now)
        if kind is MessageKind.STORE_REQUEST:
            return self._serve_store(msg, now)
        # response kinds: correlate with a pending request
        pend = self.pending.pop(msg.request_id, None)
        if pend is None:
            self.events.append(("orphan_response", msg.request_id, now))
            return []
        if kind is MessageKind.LOAD_RESPONSE:
            self.events.append(("request_completed", msg.request_id, now, len(msg.body.data)))
        elif kind is MessageKind.STORE_ACK:
            self.events.append(("request_completed", msg.request_id, now, pend.payload_len))
        else:  # ERROR
            self.events.append(("request_failed", msg.request_id, now, msg.body.code.name))
        return []

    def _serve_load(self, msg: Message, now: float) -> list[Emission]:
        body = msg.body
        if body.addr.module != self.id:
            return self._error_reply(msg, ErrorCode.DESTINATION_UNKNOWN, now)
        if body.addr.offset + body.length > self.capacity:
            return self._error_reply(msg, ErrorCode.OFFSET_OUT_OF_RANGE, now)
        data, ts = self.store.read_range(body.addr.offset, body.length)
        return self._reply(msg, MessageKind.LOAD_RESPONSE, wire.LoadReply(data, ts), now)

    def _serve_store(self, msg: Message, now: float) -> list[Emission]:
        body = msg.body
        if body.addr.module != self.id:
            return self._error_reply(msg, ErrorCode.DESTINATION_UNKNOWN, now)
        if body.addr.offset + len(body.data) > self.capacity:
            return self._error_reply(msg, ErrorCode.OFFSET_OUT_OF_RANGE, now)
        applied = self.store.apply_store(body.addr.offset, body.data, body.timestamp, msg.src)
        return self._reply(msg, MessageKind.STORE_ACK, wire.StoreAckBody(applied), now)

    def _reply(self, req: Message, kind: MessageKind, body, now: float) -> list[Emission]:
        resp = Message(kind, self.id, req.src, self.config.ttl_max, req.traffic_class, req.request_id, body)
        return self._route_out(resp, now, originated=True)

    def _error_reply(self, req: Message, code: ErrorCode, now: float) -> list[Emission]:
        return self._reply(req, MessageKind.ERROR, wire.ErrorBody(code), now)

    def _forward(self, msg: Message, now: float) -> list[Emission]:
        if msg.ttl <= 1:
            self.events.append(("drop_ttl", msg.kind.name, now))
            if msg.kind in (MessageKind.LOAD_REQUEST, MessageKind.STORE_REQUEST):
                return self._error_reply(msg, ErrorCode.TTL_EXPIRED, now)
            return []
        fwd = dataclasses.replace(msg, ttl=msg.ttl - 1)
        return self._route_out(fwd, now, originated=False)

    def _route_out(self, msg: Message, now: float, originated: bool) -> list[Emission]:
        nh = self._resolve_next_hop(msg.dst)
        if nh is None:
            self.events.append(("drop_noroute", msg.kind.name, now))
            if not originated and msg.kind in (MessageKind.LOAD_REQUEST, MessageKind.STORE_REQUEST):
                return self._error_reply(msg, ErrorCode.DESTINATION_UNKNOWN, now)
            return []
        return [Emission(nh, msg)]

    def _resolve_next_hop(self, dst: int) -> int | None:
        entry = self.routing.entries.get(dst)
        if entry is not None and entry.cost < 0xFFFF and self.usable_neighbor(entry.next_hop):
            return entry.next_hop
        if self.gateway is not None and self.gateway != self.id:
            return self.gateway
        return None

    # -- local memory interface ------------------------------------------------

    def local_load(self, addr: FabricAddress, length: int) -> tuple[bytes, int]:
        if addr.module != self.id:
            raise ValueError("local_load on foreign address %s" % addr)
        return self.store.read_range(addr.offset, length)

    def local_store(self, addr: FabricAddress, data: bytes, ts: int, writer: int | None = None) -> bool:
        if addr.module != self.id:
            raise ValueError("local_store on foreign address %s" % addr)
        return self.store.apply_store(addr.offset, data, ts, writer if writer is not None else self.id)

    def initiate_request(
        self,
        op: str,
        addr: FabricAddress,
        now: float,
        *,
        length: int = 0,
        data: bytes = b"",
        traffic_class: int = 0,
    ) -> tuple[list[Emission], int]:
        """Issue a load or store toward a fabric address.

        Self-addressed operations short-circuit to the local store and
        complete immediately.  Remote ones are emitted toward the next hop
        with a fresh ttl and a pending entry the caller must arm a timeout
        for.  Raises NotJoined / NoRouteToTarget / OffsetOutOfRange; the
        allocated request id rides on the exception for bookkeeping.
        """
        rid = self.next_request_id
        self.next_request_id += 1
        payload_len = len(data) if op == "store" else length
        self.events.append(("request_issued", rid, now, op, payload_len, traffic_class, addr.module))
        if not self.joined:
            raise NotJoined(rid)
        if addr.module == self.id:
            try:
                if op == "load":
                    data_out, _ts = self.local_load(addr, length)
                    self.events.append(("request_completed", rid, now, len(data_out)))
                else:
                    self.local_store(addr, data, int(round(now * 1000.0)))
                    self.events.append(("request_completed", rid, now, len(data)))
            except OffsetOutOfRange as err:
                err.request_id = rid
                raise
            return [], rid
        nh = self._resolve_next_hop(addr.module)
        if nh is None:
            raise NoRouteToTarget(rid, addr.module)
        if op == "load":
            body = wire.LoadBody(addr, length)
            kind = MessageKind.LOAD_REQUEST
        else:
            body = wire.StoreBody(addr, int(round(now * 1000.0)), data)
            kind = MessageKind.STORE_REQUEST
        msg = Message(kind, self.id, addr.module, self.config.ttl_max, traffic_class, rid, body)
        self.pending[rid] = PendingRequest(now, op, addr, payload_len, traffic_class)
        return [Emission(nh, msg)], rid

    def on_timeout(self, rid: int, now: float) -> None:
        if self.pending.pop(rid, None) is not None:
            self.events.append(("request_timed_out", rid, now))

    def make_leave(self) -> list[Emission]:
        """Graceful departure: tell every current neighbor."""
        return [
            Emission(p, Message(MessageKind.LEAVE, self.id, p, 1, CONTROL_CLASS, 0))
            for p in sorted(self.neighbors)
        ]

    def drain_events(self) -> list[tuple]:
        out = self.events
        self.events = []
        return out
