"""Fabric-wide memory addressing.

A fabric address names one byte range in the shared memory space: a 48-bit
module identifier (MAC-style, routable) plus a 64-bit byte offset into that
module's capacity.  A host-side local address space maps the upper half of
an (hw_bits+1)-bit local space onto remote fabric records, so an ordinary
local pointer with the extra bit set resolves to remote memory.
"""

from __future__ import annotations

from dataclasses import dataclass

MODULE_ID_BITS = 48
MODULE_ID_MAX = (1 << MODULE_ID_BITS) - 1
OFFSET_MAX = (1 << 64) - 1
BROADCAST = 0  # id 0 is reserved: broadcast on the wire, "unassigned" elsewhere

ADDRESS_WIRE_LEN = 14  # 6-byte module id + 8-byte offset, both big-endian


class AddressError(Exception):
    pass


class ReservedModuleId(AddressError):
    pass


class OffsetOutOfRange(AddressError):
    pass


class AddressOutOfSpace(AddressError):
    pass


class UnmappedRemote(AddressError):
    pass


class TruncatedAddress(AddressError):
    pass


def format_module_id(mid: int) -> str:
    """48-bit id rendered MAC-style: 01:02:03:04:05:06."""
    return ":".join("%02x" % ((mid >> s) & 0xFF) for s in range(40, -8, -8))


def parse_module_id(text: str) -> int:
    parts = text.split(":")
    if len(parts) != 6 or not all(len(p) == 2 for p in parts):
        raise AddressError("module id must be six ':'-separated hex octets, got %r" % text)
    try:
        return int("".join(parts), 16)
    except ValueError:
        raise AddressError("module id has non-hex octets: %r" % text) from None


@dataclass(frozen=True, slots=True)
class FabricAddress:
    """Globally unique memory location: owning module + byte offset."""

    module: int
    offset: int

    def __str__(self):
        return "%s+0x%x" % (format_module_id(self.module), self.offset)


def make_address(module: int, offset: int, capacity: int) -> FabricAddress:
    """Validated constructor: offsets are checked against the module capacity."""
    if module == BROADCAST:
        raise ReservedModuleId("module id 0 is reserved")
    if not 0 < module <= MODULE_ID_MAX:
        raise AddressError("module id 0x%x outside 48-bit range" % module)
    if not 0 <= offset < capacity:
        raise OffsetOutOfRange("offset %d not below capacity %d" % (offset, capacity))
    return FabricAddress(module, offset)


def encode_address(addr: FabricAddress) -> bytes:
    return addr.module.to_bytes(6, "big") + addr.offset.to_bytes(8, "big")


def decode_address(buf: bytes) -> FabricAddress:
    if len(buf) < ADDRESS_WIRE_LEN:
        raise TruncatedAddress("need 14 bytes, got %d" % len(buf))
    return FabricAddress(int.from_bytes(buf[0:6], "big"), int.from_bytes(buf[6:14], "big"))


@dataclass(frozen=True, slots=True)
class RemoteRange:
    """One contiguous slice of the local remote region mapped onto a module."""

    start: int  # offset within the remote half of the local space
    length: int
    module: int
    base_offset: int  # fabric offset the range start maps to

    @property
    def end(self) -> int:
        return self.start + self.length


class LocalAddressSpace:
    """Local addresses with one extra bit: clear = local, set = remote.

    The remote half is covered by an ordered set of disjoint ranges, each
    redirecting to a fabric address window.
    """

    def __init__(self, hw_bits: int, remote_map: list[RemoteRange]):
        if hw_bits <= 0:
            raise AddressError("hw_bits must be positive")
        ordered = sorted(remote_map, key=lambda r: r.start)
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.start < prev.end:
                raise AddressError(
                    "remote ranges overlap at offset 0x%x" % cur.start
                )
        for r in ordered:
            if r.length <= 0:
                raise AddressError("remote range at 0x%x has non-positive length" % r.start)
            if r.end > (1 << hw_bits):
                raise AddressError("remote range at 0x%x exceeds the remote half" % r.start)
        self.hw_bits = hw_bits
        self.remote_map = ordered

    def translate(self, local_addr: int):
        """Resolve one local address.

        Returns ("local", offset) when the remote bit is clear, otherwise
        ("remote", FabricAddress) via the remote map.
        """
        limit = 1 << (self.hw_bits + 1)
        if not 0 <= local_addr < limit:
            raise AddressOutOfSpace("address 0x%x outside %d-bit space" % (local_addr, self.hw_bits + 1))
        remote_bit = 1 << self.hw_bits
        if not local_addr & remote_bit:
            return ("local", local_addr)
        rel = local_addr - remote_bit
        for r in self.remote_map:
            if r.start <= rel < r.end:
                return ("remote", FabricAddress(r.module, r.base_offset + (rel - r.start)))
        raise UnmappedRemote("remote offset 0x%x falls in no mapped range" % rel)


def translate_local(space: LocalAddressSpace, local_addr: int):
    return space.translate(local_addr)
