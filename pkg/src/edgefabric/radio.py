"""Simulated wireless layer: range, rate decay, loss, and mobility.

Channel rate falls polynomially with distance and cuts off hard at the
configured range; frame loss rises the same way.  Mobile modules follow
waypoint traces at constant speed.  All randomness (loss draws) comes from
the caller's seeded stream, so runs are reproducible.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass

from . import kernels


class RadioError(Exception):
    pass


class OutOfRange(RadioError):
    pass


class FrameTooLarge(RadioError):
    pass


class UnknownModule(RadioError):
    pass


LOST = object()  # sentinel returned by frame_delay for an unlucky draw


@dataclass(slots=True)
class RadioModel:
    range_m: float = 20.0
    t_max_bps: float = 31250.0  # bytes/s at distance 0 (250 kbit/s radio)
    alpha: float = 2.0
    mtu: int = 1500
    base_latency_s: float = 0.005
    loss0: float = 0.02

    def throughput(self, d_m: float) -> float:
        """Usable channel rate in bytes/s at distance d; 0 at/past range."""
        if d_m < 0:
            raise ValueError("negative distance")
        return kernels.throughput_Bps(self.t_max_bps, self.range_m, self.alpha, d_m)

    def loss(self, d_m: float) -> float:
        if d_m < 0:
            raise ValueError("negative distance")
        return kernels.loss_prob(self.loss0, self.range_m, self.alpha, d_m)

    def frame_delay(self, d_m: float, frame_len: int, rng):
        """Delivery delay for one frame, or LOST on an unlucky draw.

        Raises OutOfRange at/past the range cutoff and FrameTooLarge above
        the MTU; both are deterministic channel rejections, not draws.
        """
        if frame_len > self.mtu:
            raise FrameTooLarge("frame of %d bytes exceeds mtu %d" % (frame_len, self.mtu))
        if d_m >= self.range_m:
            raise OutOfRange("distance %.2f m at/past range %.2f m" % (d_m, self.range_m))
        if rng.random() < self.loss(d_m):
            return LOST
        return self.base_latency_s + frame_len / self.throughput(d_m)

    def in_range(self, d_m: float) -> bool:
        return d_m < self.range_m


class MobilityTrace:
    """Constant-speed motion along a waypoint polyline.

    Open traces clamp at the last waypoint; loops close back to the first
    waypoint and wrap.
    """

    def __init__(self, waypoints: list[tuple[float, float]], speed_mps: float, loop: bool = False):
        if not waypoints:
            raise ValueError("trace needs at least one waypoint")
        if speed_mps < 0:
            raise ValueError("speed must be non-negative")
        self.waypoints = [(float(x), float(y)) for x, y in waypoints]
        self.speed_mps = float(speed_mps)
        self.loop = loop
        self._xs = array("d", (p[0] for p in self.waypoints))
        self._ys = array("d", (p[1] for p in self.waypoints))
        cum = array("d", [0.0])
        for i in range(1, len(self.waypoints)):
            cum.append(
                cum[i - 1]
                + kernels.link_distance(self._xs[i - 1], self._ys[i - 1], self._xs[i], self._ys[i])
            )
        self._cum = cum
        self.path_length = cum[-1]
        self.total_length = self.path_length
        if loop and len(self.waypoints) > 1:
            self.total_length += kernels.link_distance(
                self._xs[-1], self._ys[-1], self._xs[0], self._ys[0]
            )

    def position(self, t: float) -> tuple[float, float]:
        s = self.speed_mps * t
        return kernels.polyline_point(self._xs, self._ys, self._cum, self.total_length, self.loop, s)


class Placement:
    """Position source for every module: fixed coordinates or a trace."""

    def __init__(self):
        self._static: dict[int, tuple[float, float]] = {}
        self._mobile: dict[int, MobilityTrace] = {}

    def add_static(self, module: int, x: float, y: float) -> None:
        self._check_new(module)
        self._static[module] = (float(x), float(y))

    def add_mobile(self, module: int, trace: MobilityTrace) -> None:
        self._check_new(module)
        self._mobile[module] = trace

    def _check_new(self, module: int) -> None:
        if module in self._static or module in self._mobile:
            raise ValueError("module %012x already placed" % module)

    def is_mobile(self, module: int) -> bool:
        return module in self._mobile

    def modules(self) -> list[int]:
        return list(self._static) + list(self._mobile)

    def position_at(self, module: int, t: float) -> tuple[float, float]:
        pos = self._static.get(module)
        if pos is not None:
            return pos
        trace = self._mobile.get(module)
        if trace is None:
            raise UnknownModule("module %012x has no position source" % module)
        return trace.position(t)

    def distance(self, a: int, b: int, t: float) -> float:
        xa, ya = self.position_at(a, t)
        xb, yb = self.position_at(b, t)
        return kernels.link_distance(xa, ya, xb, yb)
