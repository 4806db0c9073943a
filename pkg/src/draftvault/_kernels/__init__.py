"""Kernel dispatch: compiled scan loops when built, pure Python otherwise.

Set ``DRAFTVAULT_PURE=1`` to force the pure-Python kernels (used by the
benchmark and to debug parity issues).
"""
import os

if os.environ.get("DRAFTVAULT_PURE"):
    from . import _scan_py as impl
else:
    try:
        from . import _scan_c as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _scan_py as impl

IMPLEMENTATION = impl.IMPLEMENTATION
scan_journal = impl.scan_journal
scan_journal_valid = impl.scan_journal_valid
scan_blocks = impl.scan_blocks
scan_tlv = impl.scan_tlv

HEADER_LEN = 6
FORMAT_VERSION = 1
