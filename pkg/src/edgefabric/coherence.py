"""Timestamped last-write-wins byte store.

Each stored range carries the writing module's timestamp; on overlap the
write with the greater timestamp owns the bytes, ties broken by the higher
writer id.  Resolution is per byte, so a later short write punches through
an earlier long one only where they overlap.  Apply order never matters:
any permutation of the same write set converges to identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .address import OffsetOutOfRange


@dataclass(slots=True)
class Record:
    start: int
    data: bytes
    ts: int
    writer: int

    @property
    def end(self) -> int:
        return self.start + len(self.data)


def _wins(ts: int, writer: int, old_ts: int, old_writer: int) -> bool:
    return ts > old_ts or (ts == old_ts and writer > old_writer)


class NvmStore:
    """Byte store of `capacity` bytes; unwritten bytes read as zero at ts 0."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._records: list[Record] = []  # sorted by start, disjoint

    def apply_store(self, offset: int, data: bytes, ts: int, writer: int) -> bool:
        """Merge one timestamped write; returns True iff any byte changed owner."""
        end = offset + len(data)
        if offset < 0 or end > self.capacity:
            raise OffsetOutOfRange(
                "write [%d, %d) exceeds capacity %d" % (offset, end, self.capacity)
            )
        if not data:
            return False
        kept: list[Record] = []
        lost: list[tuple[int, int]] = []  # sub-ranges where an existing record wins
        for r in self._records:
            if r.end <= offset or r.start >= end:
                kept.append(r)
                continue
            if r.start < offset:
                kept.append(Record(r.start, r.data[: offset - r.start], r.ts, r.writer))
            ov_s = max(r.start, offset)
            ov_e = min(r.end, end)
            if not _wins(ts, writer, r.ts, r.writer):
                kept.append(Record(ov_s, r.data[ov_s - r.start : ov_e - r.start], r.ts, r.writer))
                lost.append((ov_s, ov_e))
            if r.end > end:
                kept.append(Record(end, r.data[end - r.start :], r.ts, r.writer))
        applied = False
        cursor = offset
        for ls, le in lost:
            if cursor < ls:
                kept.append(Record(cursor, data[cursor - offset : ls - offset], ts, writer))
                applied = True
            cursor = le
        if cursor < end:
            kept.append(Record(cursor, data[cursor - offset :], ts, writer))
            applied = True
        kept.sort(key=lambda r: r.start)
        self._records = kept
        return applied

    def read_range(self, offset: int, length: int) -> tuple[bytes, int]:
        """Reconstruct `length` bytes from `offset` plus the newest timestamp seen."""
        end = offset + length
        if offset < 0 or length < 0 or end > self.capacity:
            raise OffsetOutOfRange(
                "read [%d, %d) exceeds capacity %d" % (offset, end, self.capacity)
            )
        buf = bytearray(length)
        max_ts = 0
        for r in self._records:
            if r.end <= offset or r.start >= end:
                continue
            ov_s = max(r.start, offset)
            ov_e = min(r.end, end)
            buf[ov_s - offset : ov_e - offset] = r.data[ov_s - r.start : ov_e - r.start]
            if r.ts > max_ts:
                max_ts = r.ts
        return bytes(buf), max_ts

    def record_count(self) -> int:
        return len(self._records)
