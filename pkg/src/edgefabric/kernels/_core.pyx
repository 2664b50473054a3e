# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Mirrors _pure.py function-for-function.  Floating-point expressions keep
the exact operation order of the pure backend (and no fast-math), so both
backends return bit-identical values; tests/test_kernels.py enforces it.
"""

from libc.math cimport sqrt, fmod, pow as cpow

from ._errors import (
    BAD_MAGIC,
    BAD_VERSION,
    LENGTH_MISMATCH,
    PAYLOAD_TOO_LARGE,
    TRUNCATED,
    UNKNOWN_KIND,
    CodecError,
)

BACKEND = "compiled"

MAGIC = b"\xed\x9e"
VERSION = 0x01
HEADER_LEN = 28
MAX_PAYLOAD = 0xFFFF
KIND_COUNT = 10


cdef inline void _put48(unsigned char[::1] o, Py_ssize_t at, unsigned long long v) noexcept:
    o[at] = <unsigned char>((v >> 40) & 0xFF)
    o[at + 1] = <unsigned char>((v >> 32) & 0xFF)
    o[at + 2] = <unsigned char>((v >> 24) & 0xFF)
    o[at + 3] = <unsigned char>((v >> 16) & 0xFF)
    o[at + 4] = <unsigned char>((v >> 8) & 0xFF)
    o[at + 5] = <unsigned char>(v & 0xFF)


cdef inline void _put32(unsigned char[::1] o, Py_ssize_t at, unsigned long long v) noexcept:
    o[at] = <unsigned char>((v >> 24) & 0xFF)
    o[at + 1] = <unsigned char>((v >> 16) & 0xFF)
    o[at + 2] = <unsigned char>((v >> 8) & 0xFF)
    o[at + 3] = <unsigned char>(v & 0xFF)


cdef inline void _put64(unsigned char[::1] o, Py_ssize_t at, unsigned long long v) noexcept:
    _put32(o, at, (v >> 32) & 0xFFFFFFFF)
    _put32(o, at + 4, v & 0xFFFFFFFF)


cdef inline unsigned long long _get48(const unsigned char[::1] b, Py_ssize_t at) noexcept:
    cdef unsigned long long v = 0
    cdef int i
    for i in range(6):
        v = (v << 8) | b[at + i]
    return v


cdef inline unsigned long long _get32(const unsigned char[::1] b, Py_ssize_t at) noexcept:
    return (
        (<unsigned long long>b[at] << 24)
        | (<unsigned long long>b[at + 1] << 16)
        | (<unsigned long long>b[at + 2] << 8)
        | <unsigned long long>b[at + 3]
    )


cdef inline unsigned long long _get64(const unsigned char[::1] b, Py_ssize_t at) noexcept:
    return (_get32(b, at) << 32) | _get32(b, at + 4)


def pack_frame(int kind, object src, object dst, int ttl, int tclass, object request_id, bytes payload):
    cdef Py_ssize_t plen = len(payload)
    if plen > MAX_PAYLOAD:
        raise CodecError(PAYLOAD_TOO_LARGE, "payload %d exceeds 65535 bytes" % plen)
    out = bytearray(HEADER_LEN + plen)
    cdef unsigned char[::1] o = out
    o[0] = 0xED
    o[1] = 0x9E
    o[2] = VERSION
    o[3] = <unsigned char>kind
    _put48(o, 4, <unsigned long long>src)
    _put48(o, 10, <unsigned long long>dst)
    o[16] = <unsigned char>ttl
    o[17] = <unsigned char>tclass
    _put64(o, 18, <unsigned long long>request_id)
    o[26] = <unsigned char>((plen >> 8) & 0xFF)
    o[27] = <unsigned char>(plen & 0xFF)
    if plen:
        out[HEADER_LEN:] = payload
    return bytes(out)


def unpack_frame(object buf):
    cdef const unsigned char[::1] b
    try:
        b = buf
    except (TypeError, ValueError, BufferError):
        raise CodecError(TRUNCATED, "not a byte buffer")
    cdef Py_ssize_t n = b.shape[0]
    if n < 2:
        raise CodecError(TRUNCATED, "frame shorter than magic")
    if b[0] != 0xED or b[1] != 0x9E:
        raise CodecError(BAD_MAGIC, "bad magic %02x %02x" % (b[0], b[1]))
    if n < 3:
        raise CodecError(TRUNCATED, "frame ends before version byte")
    if b[2] != VERSION:
        raise CodecError(BAD_VERSION, "unsupported version 0x%02x" % b[2])
    if n < HEADER_LEN:
        raise CodecError(TRUNCATED, "header needs 28 bytes, got %d" % n)
    cdef int kind = b[3]
    if kind >= KIND_COUNT:
        raise CodecError(UNKNOWN_KIND, "unknown kind 0x%02x" % kind)
    cdef Py_ssize_t plen = (<Py_ssize_t>b[26] << 8) | b[27]
    if plen != n - HEADER_LEN:
        raise CodecError(
            LENGTH_MISMATCH,
            "declared payload %d bytes, frame carries %d" % (plen, n - HEADER_LEN),
        )
    return (
        kind,
        _get48(b, 4),
        _get48(b, 10),
        b[16],
        b[17],
        _get64(b, 18),
        bytes(b[HEADER_LEN:]) if plen else b"",
    )


def pack_route_entries(list entries):
    cdef Py_ssize_t n = len(entries)
    out = bytearray(2 + 12 * n)
    cdef unsigned char[::1] o = out
    o[0] = <unsigned char>((n >> 8) & 0xFF)
    o[1] = <unsigned char>(n & 0xFF)
    cdef Py_ssize_t i, at = 2
    for i in range(n):
        dst, cost, seq = entries[i]
        _put48(o, at, <unsigned long long>dst)
        o[at + 6] = <unsigned char>(((<unsigned long long>cost) >> 8) & 0xFF)
        o[at + 7] = <unsigned char>((<unsigned long long>cost) & 0xFF)
        _put32(o, at + 8, <unsigned long long>seq)
        at += 12
    return bytes(out)


def unpack_route_entries(bytes payload):
    cdef const unsigned char[::1] b = payload
    cdef Py_ssize_t n = b.shape[0]
    if n < 2:
        raise CodecError(TRUNCATED, "route update body shorter than count field")
    cdef Py_ssize_t count = (<Py_ssize_t>b[0] << 8) | b[1]
    if n != 2 + 12 * count:
        raise CodecError(
            LENGTH_MISMATCH,
            "route update declares %d entries, body is %d bytes" % (count, n),
        )
    out = []
    cdef Py_ssize_t i, at = 2
    for i in range(count):
        out.append(
            (
                _get48(b, at),
                (<int>b[at + 6] << 8) | b[at + 7],
                _get32(b, at + 8),
            )
        )
        at += 12
    return out


def pack_member_ids(list ids):
    cdef Py_ssize_t n = len(ids)
    out = bytearray(2 + 6 * n)
    cdef unsigned char[::1] o = out
    o[0] = <unsigned char>((n >> 8) & 0xFF)
    o[1] = <unsigned char>(n & 0xFF)
    cdef Py_ssize_t i, at = 2
    for i in range(n):
        _put48(o, at, <unsigned long long>ids[i])
        at += 6
    return bytes(out)


def unpack_member_ids(bytes payload):
    cdef const unsigned char[::1] b = payload
    cdef Py_ssize_t n = b.shape[0]
    if n < 2:
        raise CodecError(TRUNCATED, "member list body shorter than count field")
    cdef Py_ssize_t count = (<Py_ssize_t>b[0] << 8) | b[1]
    if n != 2 + 6 * count:
        raise CodecError(
            LENGTH_MISMATCH,
            "member list declares %d ids, body is %d bytes" % (count, n),
        )
    out = []
    cdef Py_ssize_t i, at = 2
    for i in range(count):
        out.append(_get48(b, at))
        at += 6
    return out


def pack_load_request(object module, object offset, object length):
    out = bytearray(18)
    cdef unsigned char[::1] o = out
    _put48(o, 0, <unsigned long long>module)
    _put64(o, 6, <unsigned long long>offset)
    _put32(o, 14, <unsigned long long>length)
    return bytes(out)


def unpack_load_request(bytes payload):
    cdef const unsigned char[::1] b = payload
    if b.shape[0] != 18:
        raise CodecError(LENGTH_MISMATCH, "load request body must be 18 bytes, got %d" % b.shape[0])
    return _get48(b, 0), _get64(b, 6), _get32(b, 14)


def pack_store_request(object module, object offset, object ts, bytes data):
    cdef Py_ssize_t dlen = len(data)
    out = bytearray(26 + dlen)
    cdef unsigned char[::1] o = out
    _put48(o, 0, <unsigned long long>module)
    _put64(o, 6, <unsigned long long>offset)
    _put64(o, 14, <unsigned long long>ts)
    _put32(o, 22, <unsigned long long>dlen)
    if dlen:
        out[26:] = data
    return bytes(out)


def unpack_store_request(bytes payload):
    cdef const unsigned char[::1] b = payload
    cdef Py_ssize_t n = b.shape[0]
    if n < 26:
        raise CodecError(TRUNCATED, "store request body shorter than 26-byte prefix")
    cdef unsigned long long length = _get32(b, 22)
    if n != 26 + <Py_ssize_t>length:
        raise CodecError(
            LENGTH_MISMATCH,
            "store request declares %d data bytes, body carries %d" % (length, n - 26),
        )
    return _get48(b, 0), _get64(b, 6), _get64(b, 14), payload[26:]


def pack_load_response(object ts, bytes data):
    cdef Py_ssize_t dlen = len(data)
    out = bytearray(12 + dlen)
    cdef unsigned char[::1] o = out
    _put64(o, 0, <unsigned long long>ts)
    _put32(o, 8, <unsigned long long>dlen)
    if dlen:
        out[12:] = data
    return bytes(out)


def unpack_load_response(bytes payload):
    cdef const unsigned char[::1] b = payload
    cdef Py_ssize_t n = b.shape[0]
    if n < 12:
        raise CodecError(TRUNCATED, "load response body shorter than 12-byte prefix")
    cdef unsigned long long length = _get32(b, 8)
    if n != 12 + <Py_ssize_t>length:
        raise CodecError(
            LENGTH_MISMATCH,
            "load response declares %d data bytes, body carries %d" % (length, n - 12),
        )
    return _get64(b, 0), payload[12:]


# -- radio path math ---------------------------------------------------------


def throughput_Bps(double t_max, double range_m, double alpha, double d):
    if d >= range_m:
        return 0.0
    cdef double frac = 1.0 - cpow(d / range_m, alpha)
    if frac <= 0.0:
        return 0.0
    return t_max * frac


def loss_prob(double loss0, double range_m, double alpha, double d):
    if d >= range_m:
        return 1.0
    cdef double p = loss0 + (1.0 - loss0) * cpow(d / range_m, alpha)
    if p > 1.0:
        return 1.0
    return p


def link_distance(double x1, double y1, double x2, double y2):
    cdef double dx = x2 - x1
    cdef double dy = y2 - y1
    return sqrt(dx * dx + dy * dy)


def polyline_point(object xs_o, object ys_o, object cum_o, double total, bint loop, double s):
    cdef const double[::1] xs = xs_o
    cdef const double[::1] ys = ys_o
    cdef const double[::1] cum = cum_o
    cdef Py_ssize_t n = xs.shape[0]
    if n == 1 or total <= 0.0:
        return xs[0], ys[0]
    if loop:
        s = fmod(s, total)
    elif s >= cum[n - 1]:
        return xs[n - 1], ys[n - 1]
    cdef Py_ssize_t i = 0
    while i < n - 1 and cum[i + 1] < s:
        i += 1
    cdef double seg, t
    if i == n - 1:
        seg = total - cum[n - 1]
        t = (s - cum[n - 1]) / seg
        return xs[n - 1] + t * (xs[0] - xs[n - 1]), ys[n - 1] + t * (ys[0] - ys[n - 1])
    seg = cum[i + 1] - cum[i]
    if seg <= 0.0:
        return xs[i + 1], ys[i + 1]
    t = (s - cum[i]) / seg
    return xs[i] + t * (xs[i + 1] - xs[i]), ys[i] + t * (ys[i + 1] - ys[i])
