"""Overlay route learning: destination-sequenced distance-vector tables.

Every module periodically advertises its table (with its own entry at cost
0 and a per-advertisement sequence number).  Receivers adopt a route via
the advertising neighbor when the sequence number is newer, or equal with
strictly lower total cost.  Broken links are poisoned with an infinite
cost at seq+1 so the bad news outruns stale good news; a destination's own
next advertisement (higher seq) heals the route.
"""

from __future__ import annotations

from dataclasses import dataclass

INFINITE_COST = 0xFFFF


class NoRoute(Exception):
    pass


@dataclass(slots=True)
class RouteEntry:
    next_hop: int
    cost: int
    seq: int
    learned_at: float


class RoutingTable:
    def __init__(self, owner: int, now: float = 0.0):
        self.owner = owner
        self.own_seq = 0
        self.entries: dict[int, RouteEntry] = {owner: RouteEntry(owner, 0, 0, now)}

    def __eq__(self, other):
        return (
            isinstance(other, RoutingTable)
            and self.owner == other.owner
            and self.own_seq == other.own_seq
            and self.entries == other.entries
        )

    def tick(self, now: float) -> None:
        """Advance the own sequence number; called once per beacon interval."""
        self.own_seq += 1
        self.entries[self.owner] = RouteEntry(self.owner, 0, self.own_seq, now)

    def expire(self, now: float, expiry_s: float) -> list[int]:
        """Drop entries not refreshed within expiry_s; returns dropped dsts."""
        dead = [
            dst
            for dst, e in self.entries.items()
            if dst != self.owner and now - e.learned_at > expiry_s
        ]
        for dst in dead:
            del self.entries[dst]
        return dead

    def merge_update(
        self,
        from_id: int,
        advert: list[tuple[int, int, int]],
        link_cost: int,
        now: float,
        expiry_s: float,
    ) -> bool:
        """Fold one neighbor advertisement into the table.

        Adoption rule per destination: newer seq wins; equal seq keeps the
        lower total cost; otherwise the incumbent stays (and is refreshed
        when the advertisement confirms it).
        """
        self.expire(now, expiry_s)
        changed = False
        for dst, cost, seq in advert:
            if dst == self.owner:
                continue
            total = INFINITE_COST if cost >= INFINITE_COST else cost + link_cost
            cur = self.entries.get(dst)
            if cur is None:
                if total < INFINITE_COST:
                    self.entries[dst] = RouteEntry(from_id, total, seq, now)
                    changed = True
                continue
            if seq > cur.seq or (seq == cur.seq and total < cur.cost):
                self.entries[dst] = RouteEntry(from_id, total, seq, now)
                changed = True
            elif seq == cur.seq and total == cur.cost and from_id == cur.next_hop:
                cur.learned_at = now  # confirmation from the hop we already use
        return changed

    def purge_via(self, neighbor: int) -> list[tuple[int, int, int]]:
        """Drop every route through a lost neighbor; returns poison adverts."""
        poisons = []
        for dst in [d for d, e in self.entries.items() if e.next_hop == neighbor and d != self.owner]:
            e = self.entries.pop(dst)
            poisons.append((dst, INFINITE_COST, e.seq + 1))
        return poisons

    def next_hop(self, dst: int, gateway: int | None = None) -> int:
        if dst == self.owner:
            raise ValueError("next_hop asked for self")
        e = self.entries.get(dst)
        if e is not None and e.cost < INFINITE_COST:
            return e.next_hop
        if gateway is not None:
            return gateway
        raise NoRoute("no route to %012x and no gateway" % dst)

    def cost_to(self, dst: int) -> int | None:
        e = self.entries.get(dst)
        if e is None or e.cost >= INFINITE_COST:
            return None
        return e.cost

    def make_advertisement(self) -> list[tuple[int, int, int]]:
        """Full table dump, self entry first, then destinations in id order."""
        out = [(self.owner, 0, self.own_seq)]
        for dst in sorted(self.entries):
            if dst == self.owner:
                continue
            e = self.entries[dst]
            out.append((dst, e.cost, e.seq))
        return out
