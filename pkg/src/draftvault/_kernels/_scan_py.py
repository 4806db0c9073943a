"""Pure-Python scan kernels.

These walk the three append-only container layouts and return the longest
structurally valid prefix.  The compiled twin in ``_scan.pyx`` implements
byte-identical behaviour; ``tests/test_kernels.py`` holds the two to the
same outputs on randomized inputs.

Common shape of every record stream: little-endian integers, each unit
terminated by a CRC-32 of all its preceding bytes.  Scanning stops at the
first unit that is incomplete, fails its CRC, or violates a structural
rule; everything before that point is returned together with the byte
offset where the valid prefix ends.
"""
from __future__ import annotations

import struct
import zlib

IMPLEMENTATION = "python"

HEADER_LEN = 6
FORMAT_VERSION = 1

_REC_HEAD = struct.Struct("<IBHI")
_U32 = struct.Struct("<I")
_BLOCK_HEAD = struct.Struct("<I")
_TLV_HEAD = struct.Struct("<BI")


def _check_header(data: bytes, magic: bytes) -> None:
    if len(data) < HEADER_LEN or data[:4] != magic:
        raise ValueError("bad magic")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {version}")


def scan_journal(data: bytes):
    """Parse a change journal byte stream.

    Returns ``(steps, valid_end)`` where ``steps`` is a list of
    ``(step_no, [(flag, kind, payload), ...])`` for every complete step
    (records followed by a matching commit record) and ``valid_end`` is the
    offset just past the last complete step.
    """
    _check_header(data, b"TCGJ")
    view = memoryview(data)
    n = len(data)
    steps = []
    pending: list[tuple[int, int, bytes]] = []
    pos = HEADER_LEN
    valid_end = HEADER_LEN
    while True:
        if pos + 11 > n:
            break
        step_no, flag, kind, plen = _REC_HEAD.unpack_from(data, pos)
        if flag > 2:
            break
        if flag == 2 and (kind != 0 or plen != 0):
            break
        body_end = pos + 11 + plen
        if body_end + 4 > n:
            break
        (crc_stored,) = _U32.unpack_from(data, body_end)
        if zlib.crc32(view[pos:body_end]) & 0xFFFFFFFF != crc_stored:
            break
        if step_no != len(steps) + 1:
            break
        if flag == 2:
            if not pending:
                break
            steps.append((step_no, pending))
            pending = []
            valid_end = body_end + 4
        else:
            pending.append((flag, kind, bytes(view[pos + 11 : body_end])))
        pos = body_end + 4
    return steps, valid_end


def scan_journal_valid(data: bytes, end: int = -1):
    """Validate-only twin of scan_journal over ``data[:end]``: returns
    ``(complete_step_count, valid_end)`` without materializing records.
    Byte-truncation sweeps call this once per offset, where building the
    step structures would make the sweep quadratic in allocations."""
    _check_header(data, b"TCGJ")
    view = memoryview(data)
    n = len(data) if end < 0 else min(end, len(data))
    count = 0
    pending = 0
    pos = HEADER_LEN
    valid_end = HEADER_LEN
    while True:
        if pos + 11 > n:
            break
        step_no, flag, kind, plen = _REC_HEAD.unpack_from(data, pos)
        if flag > 2:
            break
        if flag == 2 and (kind != 0 or plen != 0):
            break
        body_end = pos + 11 + plen
        if body_end + 4 > n:
            break
        (crc_stored,) = _U32.unpack_from(data, body_end)
        if zlib.crc32(view[pos:body_end]) & 0xFFFFFFFF != crc_stored:
            break
        if step_no != count + 1:
            break
        if flag == 2:
            if not pending:
                break
            count += 1
            pending = 0
            valid_end = body_end + 4
        else:
            pending += 1
        pos = body_end + 4
    return count, valid_end


def scan_blocks(data: bytes):
    """Parse a blob version log: ``(blobs, valid_end)``."""
    _check_header(data, b"TCGP")
    view = memoryview(data)
    n = len(data)
    blobs = []
    pos = HEADER_LEN
    while True:
        if pos + 4 > n:
            break
        (blen,) = _BLOCK_HEAD.unpack_from(data, pos)
        body_end = pos + 4 + blen
        if body_end + 4 > n:
            break
        (crc_stored,) = _U32.unpack_from(data, body_end)
        if zlib.crc32(view[pos:body_end]) & 0xFFFFFFFF != crc_stored:
            break
        blobs.append(bytes(view[pos + 4 : body_end]))
        pos = body_end + 4
    return blobs, pos


def scan_tlv(data: bytes):
    """Parse an envelope: ``(sections, valid_end)`` with (type, value) pairs."""
    _check_header(data, b"TCGE")
    view = memoryview(data)
    n = len(data)
    sections = []
    pos = HEADER_LEN
    while True:
        if pos + 5 > n:
            break
        stype, slen = _TLV_HEAD.unpack_from(data, pos)
        body_end = pos + 5 + slen
        if body_end + 4 > n:
            break
        (crc_stored,) = _U32.unpack_from(data, body_end)
        if zlib.crc32(view[pos:body_end]) & 0xFFFFFFFF != crc_stored:
            break
        sections.append((stype, bytes(view[pos + 5 : body_end])))
        pos = body_end + 4
    return sections, pos
