"""Protocol messages and their bit-exact frame encoding.

Frame layout (all integers big-endian):

    offset  size  field
    0       2     magic 0xED 0x9E
    2       1     version 0x01
    3       1     kind
    4       6     src module id
    10      6     dst module id (0 = broadcast; Beacon/RouteUpdate only)
    16      1     ttl
    17      1     traffic class (0 best-effort, 1 preferential)
    18      8     request id
    26      2     payload length
    28      ...   kind-specific payload

Payload layouts:

    Beacon, JoinRequest, Leave   empty
    JoinAccept                   u16 count, count x 6-byte member ids
    RouteUpdate                  u16 count, count x (6B dst, u16 cost, u32 seq)
    LoadRequest                  14B address, u32 length
    LoadResponse                 u64 timestamp, u32 length, data
    StoreRequest                 14B address, u64 timestamp, u32 length, data
    StoreAck                     u8 applied
    Error                        u8 reason code
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import kernels
from .address import BROADCAST, MODULE_ID_MAX, FabricAddress

HEADER_LEN = kernels.HEADER_LEN
MAX_PAYLOAD = kernels.MAX_PAYLOAD
MAX_FRAME = HEADER_LEN + MAX_PAYLOAD


class MessageKind(enum.IntEnum):
    BEACON = 0
    JOIN_REQUEST = 1
    JOIN_ACCEPT = 2
    LEAVE = 3
    ROUTE_UPDATE = 4
    LOAD_REQUEST = 5
    LOAD_RESPONSE = 6
    STORE_REQUEST = 7
    STORE_ACK = 8
    ERROR = 9


BROADCAST_KINDS = frozenset({MessageKind.BEACON, MessageKind.ROUTE_UPDATE})
EMPTY_BODY_KINDS = frozenset({MessageKind.BEACON, MessageKind.JOIN_REQUEST, MessageKind.LEAVE})


class ErrorCode(enum.IntEnum):
    DESTINATION_UNKNOWN = 1
    TTL_EXPIRED = 2
    OFFSET_OUT_OF_RANGE = 3


class FrameError(Exception):
    pass


class PayloadTooLarge(FrameError):
    pass


class FrameDecodeError(FrameError):
    pass


class BadMagic(FrameDecodeError):
    pass


class BadVersion(FrameDecodeError):
    pass


class TruncatedFrame(FrameDecodeError):
    pass


class UnknownKind(FrameDecodeError):
    pass


class LengthMismatch(FrameDecodeError):
    pass


class InvalidField(FrameDecodeError):
    pass


_CODE_TO_ERROR = {
    kernels.TRUNCATED: TruncatedFrame,
    kernels.BAD_MAGIC: BadMagic,
    kernels.BAD_VERSION: BadVersion,
    kernels.UNKNOWN_KIND: UnknownKind,
    kernels.LENGTH_MISMATCH: LengthMismatch,
    kernels.INVALID_FIELD: InvalidField,
    kernels.PAYLOAD_TOO_LARGE: PayloadTooLarge,
}


def _reraise(err: kernels.CodecError):
    raise _CODE_TO_ERROR[err.code](err.detail) from None


@dataclass(frozen=True, slots=True)
class MemberList:
    ids: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class RouteAdvert:
    entries: tuple[tuple[int, int, int], ...]  # (dst, cost, seq)


@dataclass(frozen=True, slots=True)
class LoadBody:
    addr: FabricAddress
    length: int


@dataclass(frozen=True, slots=True)
class LoadReply:
    data: bytes
    timestamp: int


@dataclass(frozen=True, slots=True)
class StoreBody:
    addr: FabricAddress
    timestamp: int
    data: bytes


@dataclass(frozen=True, slots=True)
class StoreAckBody:
    applied: bool


@dataclass(frozen=True, slots=True)
class ErrorBody:
    code: ErrorCode


@dataclass(slots=True)
class Message:
    kind: MessageKind
    src: int
    dst: int
    ttl: int
    traffic_class: int
    request_id: int
    body: object = None


def _check_fields(msg: Message):
    if not 0 < msg.src <= MODULE_ID_MAX:
        raise ValueError("src must be a nonzero 48-bit id, got 0x%x" % msg.src)
    if msg.kind in BROADCAST_KINDS:
        if msg.dst != BROADCAST:
            raise ValueError("%s frames are always broadcast (dst 0)" % msg.kind.name)
    elif not 0 < msg.dst <= MODULE_ID_MAX:
        raise ValueError("dst must be a nonzero 48-bit id for %s" % msg.kind.name)
    if not 0 <= msg.ttl <= 255:
        raise ValueError("ttl out of range: %d" % msg.ttl)
    if msg.traffic_class not in (0, 1):
        raise ValueError("traffic class must be 0 or 1, got %d" % msg.traffic_class)
    if not 0 <= msg.request_id < (1 << 64):
        raise ValueError("request id out of 64-bit range")


def _encode_body(msg: Message) -> bytes:
    kind, body = msg.kind, msg.body
    if kind in EMPTY_BODY_KINDS:
        if body is not None:
            raise ValueError("%s carries no payload" % kind.name)
        return b""
    if kind is MessageKind.JOIN_ACCEPT:
        return kernels.pack_member_ids(list(body.ids))
    if kind is MessageKind.ROUTE_UPDATE:
        return kernels.pack_route_entries(list(body.entries))
    if kind is MessageKind.LOAD_REQUEST:
        return kernels.pack_load_request(body.addr.module, body.addr.offset, body.length)
    if kind is MessageKind.LOAD_RESPONSE:
        return kernels.pack_load_response(body.timestamp, body.data)
    if kind is MessageKind.STORE_REQUEST:
        return kernels.pack_store_request(body.addr.module, body.addr.offset, body.timestamp, body.data)
    if kind is MessageKind.STORE_ACK:
        return bytes([1 if body.applied else 0])
    if kind is MessageKind.ERROR:
        return bytes([int(body.code)])
    raise ValueError("unhandled kind %r" % kind)


def encode_frame(msg: Message) -> bytes:
    """Serialize a valid message to its canonical frame bytes."""
    _check_fields(msg)
    payload = _encode_body(msg)
    try:
        return kernels.pack_frame(
            int(msg.kind), msg.src, msg.dst, msg.ttl, msg.traffic_class, msg.request_id, payload
        )
    except kernels.CodecError as err:
        _reraise(err)


def _decode_body(kind: MessageKind, payload: bytes):
    if kind in EMPTY_BODY_KINDS:
        if payload:
            raise LengthMismatch("%s carries no payload, got %d bytes" % (kind.name, len(payload)))
        return None
    if kind is MessageKind.JOIN_ACCEPT:
        return MemberList(tuple(kernels.unpack_member_ids(payload)))
    if kind is MessageKind.ROUTE_UPDATE:
        return RouteAdvert(tuple(kernels.unpack_route_entries(payload)))
    if kind is MessageKind.LOAD_REQUEST:
        module, offset, length = kernels.unpack_load_request(payload)
        if module == BROADCAST:
            raise InvalidField("load request addresses reserved module 0")
        return LoadBody(FabricAddress(module, offset), length)
    if kind is MessageKind.LOAD_RESPONSE:
        ts, data = kernels.unpack_load_response(payload)
        return LoadReply(data, ts)
    if kind is MessageKind.STORE_REQUEST:
        module, offset, ts, data = kernels.unpack_store_request(payload)
        if module == BROADCAST:
            raise InvalidField("store request addresses reserved module 0")
        return StoreBody(FabricAddress(module, offset), ts, data)
    if kind is MessageKind.STORE_ACK:
        if len(payload) != 1:
            raise LengthMismatch("store ack body must be 1 byte, got %d" % len(payload))
        if payload[0] not in (0, 1):
            raise InvalidField("store ack flag must be 0 or 1, got %d" % payload[0])
        return StoreAckBody(payload[0] == 1)
    if kind is MessageKind.ERROR:
        if len(payload) != 1:
            raise LengthMismatch("error body must be 1 byte, got %d" % len(payload))
        try:
            return ErrorBody(ErrorCode(payload[0]))
        except ValueError:
            raise InvalidField("unknown error reason %d" % payload[0]) from None
    raise UnknownKind("unhandled kind %r" % kind)


def decode_frame(buf: bytes) -> Message:
    """Parse arbitrary bytes; total — raises a FrameDecodeError naming the
    first violated check, never anything else."""
    try:
        kind_i, src, dst, ttl, tclass, request_id, payload = kernels.unpack_frame(buf)
    except kernels.CodecError as err:
        _reraise(err)
    kind = MessageKind(kind_i)
    if src == BROADCAST:
        raise InvalidField("src 0 is reserved")
    if kind in BROADCAST_KINDS:
        if dst != BROADCAST:
            raise InvalidField("%s frames must have dst 0" % kind.name)
    elif dst == BROADCAST:
        raise InvalidField("dst 0 only valid for Beacon/RouteUpdate")
    if tclass not in (0, 1):
        raise InvalidField("traffic class must be 0 or 1, got %d" % tclass)
    try:
        body = _decode_body(kind, payload)
    except kernels.CodecError as err:
        _reraise(err)
    return Message(kind, src, dst, ttl, tclass, request_id, body)
