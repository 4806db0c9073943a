"""Compiled and pure-Python kernels must agree byte-for-byte."""
import random
import struct
import zlib

import pytest
from hypothesis import given, settings, strategies as st

from draftvault._kernels import _scan_py

_scan_c = pytest.importorskip(
    "draftvault._kernels._scan_c", reason="compiled kernels not built"
)

KERNEL_PAIRS = [
    (_scan_py.scan_journal, _scan_c.scan_journal, b"TCGJ"),
    (_scan_py.scan_blocks, _scan_c.scan_blocks, b"TCGP"),
    (_scan_py.scan_tlv, _scan_c.scan_tlv, b"TCGE"),
]


def _record(step_no, flag, kind, payload):
    body = struct.pack("<IBHI", step_no, flag, kind, len(payload)) + payload
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def _journal_bytes(rng: random.Random) -> bytes:
    out = [b"TCGJ\x01\x00"]
    for step_no in range(1, rng.randint(1, 8)):
        for _ in range(rng.randint(1, 4)):
            out.append(_record(step_no, rng.randint(0, 1), rng.randrange(16), rng.randbytes(rng.randrange(20))))
        out.append(_record(step_no, 2, 0, b""))
    return b"".join(out)


def _block(data):
    body = struct.pack("<I", len(data)) + data
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def _blocks_bytes(rng: random.Random) -> bytes:
    return b"TCGP\x01\x00" + b"".join(_block(rng.randbytes(rng.randrange(30))) for _ in range(rng.randint(0, 6)))


def _tlv(stype, value):
    body = struct.pack("<BI", stype, len(value)) + value
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def _tlv_bytes(rng: random.Random) -> bytes:
    return b"TCGE\x01\x00" + b"".join(
        _tlv(rng.randint(1, 2), rng.randbytes(rng.randrange(30))) for _ in range(rng.randint(0, 6))
    )


_BUILDERS = {b"TCGJ": _journal_bytes, b"TCGP": _blocks_bytes, b"TCGE": _tlv_bytes}


@pytest.mark.parametrize("py_fn,c_fn,magic", KERNEL_PAIRS, ids=["journal", "blocks", "tlv"])
@given(seed=st.integers(0, 2**32 - 1), cut=st.integers(0, 400), flip=st.integers(-1, 400))
@settings(max_examples=150, deadline=None)
def test_parity_on_truncated_and_mutated_streams(py_fn, c_fn, magic, seed, cut, flip):
    rng = random.Random(seed)
    data = _BUILDERS[magic](rng)
    data = data[: max(6, len(data) - cut % (len(data) + 1))]
    if flip >= 0 and flip < len(data):
        mutated = bytearray(data)
        mutated[flip] ^= 0xFF
        data = bytes(mutated)
    try:
        expected = py_fn(data)
        error = None
    except ValueError as exc:
        expected, error = None, str(exc)
    if error is None:
        assert c_fn(data) == expected
    else:
        with pytest.raises(ValueError):
            c_fn(data)


@pytest.mark.parametrize("py_fn,c_fn,magic", KERNEL_PAIRS, ids=["journal", "blocks", "tlv"])
def test_parity_every_prefix(py_fn, c_fn, magic):
    rng = random.Random(7)
    data = _BUILDERS[magic](rng)
    for cut in range(6, len(data) + 1):
        assert py_fn(data[:cut]) == c_fn(data[:cut])


@pytest.mark.parametrize("py_fn,c_fn,magic", KERNEL_PAIRS, ids=["journal", "blocks", "tlv"])
def test_bad_magic_and_version_rejected(py_fn, c_fn, magic):
    for fn in (py_fn, c_fn):
        with pytest.raises(ValueError):
            fn(b"WRNG\x01\x00")
        with pytest.raises(ValueError):
            fn(magic + b"\x02\x00")
        with pytest.raises(ValueError):
            fn(magic[:3])


@given(seed=st.integers(0, 2**32 - 1), flip=st.integers(-1, 400))
@settings(max_examples=150, deadline=None)
def test_validate_only_twin_agrees_with_full_scan(seed, flip):
    rng = random.Random(seed)
    data = _journal_bytes(rng)
    if 0 <= flip < len(data):
        mutated = bytearray(data)
        mutated[flip] ^= 0xFF
        data = bytes(mutated)
    if data[:4] != b"TCGJ" or data[4:6] != b"\x01\x00":
        return
    for cut in range(6, len(data) + 1, 7):
        full_steps, full_end = _scan_py.scan_journal(data[:cut])
        for impl in (_scan_py, _scan_c):
            assert impl.scan_journal_valid(data, cut) == (len(full_steps), full_end)
    assert _scan_py.scan_journal_valid(data) == _scan_c.scan_journal_valid(data)
