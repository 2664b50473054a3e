"""Pure-Python kernel backend.

Reference implementation of the hot inner-loop routines: frame codec,
radio path math, and mobility interpolation.  The compiled backend in
_core.pyx mirrors these functions exactly (same operation order, so
floating-point results are bit-identical across backends).
"""

import math
import struct

from ._errors import (
    BAD_MAGIC,
    BAD_VERSION,
    INVALID_FIELD,
    LENGTH_MISMATCH,
    PAYLOAD_TOO_LARGE,
    TRUNCATED,
    UNKNOWN_KIND,
    CodecError,
)

BACKEND = "pure"

MAGIC = b"\xed\x9e"
VERSION = 0x01
HEADER_LEN = 28
MAX_PAYLOAD = 0xFFFF
KIND_COUNT = 10

_HEADER = struct.Struct(">2sBBHIHIBBQH")
# magic(2) version(1) kind(1) src(2+4) dst(2+4) ttl(1) class(1) req_id(8) plen(2)
# 48-bit ids are split into 16-bit high and 32-bit low halves.


def pack_frame(kind, src, dst, ttl, tclass, request_id, payload):
    """Assemble one on-air frame: 28-byte header followed by the payload."""
    if len(payload) > MAX_PAYLOAD:
        raise CodecError(PAYLOAD_TOO_LARGE, "payload %d exceeds 65535 bytes" % len(payload))
    return _HEADER.pack(
        MAGIC,
        VERSION,
        kind,
        src >> 32,
        src & 0xFFFFFFFF,
        dst >> 32,
        dst & 0xFFFFFFFF,
        ttl,
        tclass,
        request_id,
        len(payload),
    ) + payload


def unpack_frame(buf):
    """Split a frame into header fields and payload, validating structure.

    Checks run in a fixed order so the raised code names the first
    violation: truncation, magic, version, kind, declared length.
    """
    n = len(buf)
    if n < 2:
        raise CodecError(TRUNCATED, "frame shorter than magic")
    if buf[0:2] != MAGIC:
        raise CodecError(BAD_MAGIC, "bad magic %02x %02x" % (buf[0], buf[1]))
    if n < 3:
        raise CodecError(TRUNCATED, "frame ends before version byte")
    if buf[2] != VERSION:
        raise CodecError(BAD_VERSION, "unsupported version 0x%02x" % buf[2])
    if n < HEADER_LEN:
        raise CodecError(TRUNCATED, "header needs 28 bytes, got %d" % n)
    (_, _, kind, src_hi, src_lo, dst_hi, dst_lo, ttl, tclass, request_id, plen) = _HEADER.unpack_from(buf)
    if kind >= KIND_COUNT:
        raise CodecError(UNKNOWN_KIND, "unknown kind 0x%02x" % kind)
    if plen != n - HEADER_LEN:
        raise CodecError(
            LENGTH_MISMATCH,
            "declared payload %d bytes, frame carries %d" % (plen, n - HEADER_LEN),
        )
    src = (src_hi << 32) | src_lo
    dst = (dst_hi << 32) | dst_lo
    return kind, src, dst, ttl, tclass, request_id, bytes(buf[HEADER_LEN:])


def pack_route_entries(entries):
    parts = [struct.pack(">H", len(entries))]
    for dst, cost, seq in entries:
        parts.append(struct.pack(">HIHI", dst >> 32, dst & 0xFFFFFFFF, cost, seq))
    return b"".join(parts)


def unpack_route_entries(payload):
    if len(payload) < 2:
        raise CodecError(TRUNCATED, "route update body shorter than count field")
    (count,) = struct.unpack_from(">H", payload)
    if len(payload) != 2 + 12 * count:
        raise CodecError(
            LENGTH_MISMATCH,
            "route update declares %d entries, body is %d bytes" % (count, len(payload)),
        )
    out = []
    off = 2
    for _ in range(count):
        hi, lo, cost, seq = struct.unpack_from(">HIHI", payload, off)
        out.append(((hi << 32) | lo, cost, seq))
        off += 12
    return out


def pack_member_ids(ids):
    parts = [struct.pack(">H", len(ids))]
    for mid in ids:
        parts.append(struct.pack(">HI", mid >> 32, mid & 0xFFFFFFFF))
    return b"".join(parts)


def unpack_member_ids(payload):
    if len(payload) < 2:
        raise CodecError(TRUNCATED, "member list body shorter than count field")
    (count,) = struct.unpack_from(">H", payload)
    if len(payload) != 2 + 6 * count:
        raise CodecError(
            LENGTH_MISMATCH,
            "member list declares %d ids, body is %d bytes" % (count, len(payload)),
        )
    out = []
    off = 2
    for _ in range(count):
        hi, lo = struct.unpack_from(">HI", payload, off)
        out.append((hi << 32) | lo)
        off += 6
    return out


def pack_load_request(module, offset, length):
    return struct.pack(">HIQI", module >> 32, module & 0xFFFFFFFF, offset, length)


def unpack_load_request(payload):
    if len(payload) != 18:
        raise CodecError(LENGTH_MISMATCH, "load request body must be 18 bytes, got %d" % len(payload))
    hi, lo, offset, length = struct.unpack(">HIQI", payload)
    return (hi << 32) | lo, offset, length


def pack_store_request(module, offset, ts, data):
    return struct.pack(">HIQQI", module >> 32, module & 0xFFFFFFFF, offset, ts, len(data)) + data


def unpack_store_request(payload):
    if len(payload) < 26:
        raise CodecError(TRUNCATED, "store request body shorter than 26-byte prefix")
    hi, lo, offset, ts, length = struct.unpack_from(">HIQQI", payload)
    if len(payload) != 26 + length:
        raise CodecError(
            LENGTH_MISMATCH,
            "store request declares %d data bytes, body carries %d" % (length, len(payload) - 26),
        )
    return (hi << 32) | lo, offset, ts, payload[26:]


def pack_load_response(ts, data):
    return struct.pack(">QI", ts, len(data)) + data


def unpack_load_response(payload):
    if len(payload) < 12:
        raise CodecError(TRUNCATED, "load response body shorter than 12-byte prefix")
    ts, length = struct.unpack_from(">QI", payload)
    if len(payload) != 12 + length:
        raise CodecError(
            LENGTH_MISMATCH,
            "load response declares %d data bytes, body carries %d" % (length, len(payload) - 12),
        )
    return ts, payload[12:]


# -- radio path math ---------------------------------------------------------


def throughput_Bps(t_max, range_m, alpha, d):
    """Channel rate in bytes/s at distance d: polynomial decay, hard cutoff."""
    if d >= range_m:
        return 0.0
    frac = 1.0 - (d / range_m) ** alpha
    if frac <= 0.0:
        return 0.0
    return t_max * frac


def loss_prob(loss0, range_m, alpha, d):
    if d >= range_m:
        return 1.0
    p = loss0 + (1.0 - loss0) * (d / range_m) ** alpha
    if p > 1.0:
        return 1.0
    return p


def link_distance(x1, y1, x2, y2):
    # Plain sqrt of the sum of squares, not math.hypot: the compiled backend
    # must reproduce the exact same rounding.
    dx = x2 - x1
    dy = y2 - y1
    return math.sqrt(dx * dx + dy * dy)


def polyline_point(xs, ys, cum, total, loop, s):
    """Point at arclength s along a waypoint polyline.

    cum holds cumulative arclength at each vertex (cum[0] == 0); for loops,
    total includes the closing edge back to the first vertex and s wraps
    modulo total.  Open traces clamp at the final vertex.
    """
    n = len(xs)
    if n == 1 or total <= 0.0:
        return xs[0], ys[0]
    if loop:
        s = math.fmod(s, total)
    elif s >= cum[n - 1]:
        return xs[n - 1], ys[n - 1]
    i = 0
    while i < n - 1 and cum[i + 1] < s:
        i += 1
    if i == n - 1:
        # closing edge of a loop: last vertex back to the first
        seg = total - cum[n - 1]
        t = (s - cum[n - 1]) / seg
        return xs[n - 1] + t * (xs[0] - xs[n - 1]), ys[n - 1] + t * (ys[0] - ys[n - 1])
    seg = cum[i + 1] - cum[i]
    if seg <= 0.0:
        return xs[i + 1], ys[i + 1]
    t = (s - cum[i]) / seg
    return xs[i] + t * (xs[i + 1] - xs[i]), ys[i] + t * (ys[i + 1] - ys[i])
